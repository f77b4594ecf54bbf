#pragma once

#include "duma/tools/calculator.hpp"
#include "duma/tools/listings.hpp"
#include "duma/tools/mortgage.hpp"
#include "duma/tools/registry.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace duma::tools {

inline const std::vector<std::string>& builtin_tool_names() {
    static const std::vector<std::string> names = {"calculator", "mortgage_calc", "listing_lookup"};
    return names;
}

// Registers the requested bundled tools in the given order. The listing tool
// reads <data_dir>/fixtures/listings.json unless `listings_path` is given.
inline void register_builtin_tools(ToolRegistry& registry, const std::vector<std::string>& enabled,
                                   const std::filesystem::path& data_dir,
                                   const std::filesystem::path& listings_path = {}) {
    for (const auto& name : enabled) {
        if (name == "calculator") {
            registry.register_tool(make_calculator_tool());
        } else if (name == "mortgage_calc") {
            registry.register_tool(make_mortgage_tool());
        } else if (name == "listing_lookup") {
            const auto path = listings_path.empty() ? data_dir / "fixtures" / "listings.json" : listings_path;
            auto catalog = std::make_shared<const ListingCatalog>(ListingCatalog::load(path));
            registry.register_tool(make_listing_tool(std::move(catalog)));
        } else {
            throw Error(ErrorCode::ConfigError, "unknown bundled tool '" + name + "'");
        }
    }
}

} // namespace duma::tools
