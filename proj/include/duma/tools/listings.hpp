#pragma once

// Keyed lookup into a local fixture of property listings:
//   [{"id", "name", "price_total", "area_sqm", "bedrooms", "district", "available"}, ...]

#include "duma/error.hpp"
#include "duma/tools/registry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>

namespace duma::tools {

class ListingCatalog {
public:
    static constexpr const char* kFields[] = {"id",       "name",     "price_total", "area_sqm",
                                              "bedrooms", "district", "available"};

    static ListingCatalog load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ConfigError, "cannot read listing fixture " + path.string());
        nlohmann::json data;
        try {
            in >> data;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, "invalid listing fixture " + path.string() + ": " + e.what());
        }
        return from_json(data);
    }

    static ListingCatalog from_json(const nlohmann::json& data) {
        if (!data.is_array()) throw Error(ErrorCode::ConfigError, "listing fixture must be a JSON array");
        ListingCatalog cat;
        for (const auto& item : data) {
            for (const char* f : kFields) {
                if (!item.contains(f)) {
                    throw Error(ErrorCode::ConfigError, std::string("listing without field '") + f + "'");
                }
            }
            const auto id = item.at("id").get<std::string>();
            if (!cat.by_id_.emplace(id, item).second) {
                throw Error(ErrorCode::ConfigError, "duplicate listing id '" + id + "'");
            }
        }
        return cat;
    }

    std::size_t size() const noexcept { return by_id_.size(); }

    const nlohmann::json* find(const std::string& id) const {
        const auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &it->second;
    }

    // One `field: value` line per fixture field, fixture order.
    static std::string render(const nlohmann::json& listing) {
        std::string out;
        for (const char* f : kFields) {
            const auto& v = listing.at(f);
            if (!out.empty()) out.push_back('\n');
            out += std::string(f) + ": " + (v.is_string() ? v.get<std::string>() : v.dump());
        }
        return out;
    }

    std::string known_ids() const {
        std::string out;
        for (const auto& [id, _] : by_id_) {
            if (!out.empty()) out += ", ";
            out += id;
        }
        return out;
    }

private:
    std::map<std::string, nlohmann::json> by_id_;
};

inline ToolSpec make_listing_tool(std::shared_ptr<const ListingCatalog> catalog) {
    ToolSpec spec;
    spec.name = "listing_lookup";
    spec.description = "looks up a property listing by id (price, area, bedrooms, district, availability)";
    spec.arg_schema_doc = "{\"id\": \"L-001\"}";
    spec.executor = [catalog](std::string_view raw) -> std::string {
        std::string id(text::trim(raw));
        if (!id.empty() && id.front() == '{') {
            try {
                id = nlohmann::json::parse(id).at("id").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                throw ToolError("listing_lookup: expected {\"id\": \"...\"}");
            }
        }
        if (id.empty()) throw ToolError("listing_lookup: missing listing id");
        const auto* listing = catalog->find(id);
        if (!listing) {
            throw ToolError("listing_lookup: no listing with id '" + id + "'; known ids: " + catalog->known_ids());
        }
        return ListingCatalog::render(*listing);
    };
    return spec;
}

} // namespace duma::tools
