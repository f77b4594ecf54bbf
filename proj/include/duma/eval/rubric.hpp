#pragma once

// Six-metric dialogue rubric. Each metric is scored 0, 1 or 2 per dialogue;
// a null score means the metric did not apply to that dialogue (no tool was
// needed, no demand to mine, no moment to invite) and is left out of the mean.

#include "duma/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duma::eval {

inline constexpr std::array<std::string_view, 6> kMetrics = {
    "house_expertise", "tool_calling",   "industry_familiarity",
    "service_attitude", "demand_mining", "promote_invitation",
};

inline constexpr std::array<std::string_view, 6> kMetricTitles = {
    "House Expertise",  "Tool Calling Ability", "Industry Familiarity",
    "Service Attitude", "Demand Mining",        "Promote Invitation",
};

struct RubricScore {
    std::string dialogue_id;
    std::string model_name;
    std::array<std::optional<int>, 6> scores{};  // indexed like kMetrics
};

inline std::size_t metric_index(std::string_view name) {
    for (std::size_t i = 0; i < kMetrics.size(); ++i) {
        if (kMetrics[i] == name) return i;
    }
    throw Error(ErrorCode::InvalidScore, "unknown metric '" + std::string(name) + "'");
}

// One JSON object: {"dialogue_id", "model_name", "scores": {metric: 0|1|2|null}}.
// All six metrics must be present.
inline RubricScore parse_score(const nlohmann::json& j) {
    RubricScore s;
    try {
        s.dialogue_id = j.at("dialogue_id").get<std::string>();
        s.model_name = j.at("model_name").get<std::string>();
        const auto& scores = j.at("scores");
        if (!scores.is_object()) throw Error(ErrorCode::InvalidScore, "scores must be an object");
        for (const auto& [key, _] : scores.items()) metric_index(key);
        for (std::size_t i = 0; i < kMetrics.size(); ++i) {
            const std::string key(kMetrics[i]);
            if (!scores.contains(key)) {
                throw Error(ErrorCode::InvalidScore, "dialogue '" + s.dialogue_id + "' lacks metric '" + key + "'");
            }
            const auto& v = scores.at(key);
            if (v.is_null()) continue;
            if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 2) {
                throw Error(ErrorCode::InvalidScore,
                            "dialogue '" + s.dialogue_id + "' metric '" + key + "' = " + v.dump() + " (expected 0, 1, 2 or null)");
            }
            s.scores[i] = static_cast<int>(v.get<long long>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidScore, e.what());
    }
    return s;
}

// Reads one JSONL file, or every *.jsonl file in a directory (sorted by name).
inline std::vector<RubricScore> load_scores(const std::filesystem::path& path) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& e : std::filesystem::directory_iterator(path)) {
            if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<RubricScore> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + f.string());
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                out.push_back(parse_score(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::InvalidScore, f.string() + ":" + std::to_string(n) + ": " + e.what());
            } catch (const Error& e) {
                throw Error(e.code(), f.string() + ":" + std::to_string(n) + ": " + e.what());
            }
        }
    }
    return out;
}

// Scoring guide shipped as data: {metric: {"title", "dimension", "levels": {"0","1","2"}}}.
struct Rubric {
    nlohmann::ordered_json data;

    static Rubric load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ConfigError, "cannot read rubric " + path.string());
        Rubric r;
        try {
            r.data = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, "invalid rubric " + path.string() + ": " + e.what());
        }
        for (const auto m : kMetrics) {
            const std::string key(m);
            if (!r.data.contains(key) || !r.data[key].contains("levels")) {
                throw Error(ErrorCode::ConfigError, "rubric lacks metric '" + key + "'");
            }
            for (const char* level : {"0", "1", "2"}) {
                if (!r.data[key]["levels"].contains(level)) {
                    throw Error(ErrorCode::ConfigError, "rubric metric '" + key + "' lacks level " + level);
                }
            }
        }
        return r;
    }

    std::string render_instructions() const {
        std::string out = "# Annotator instructions\n\n"
                          "Score every dialogue on each metric with 0, 1 or 2. Use null when the\n"
                          "metric did not come up in the dialogue.\n";
        for (std::size_t i = 0; i < kMetrics.size(); ++i) {
            const auto& m = data.at(std::string(kMetrics[i]));
            out += "\n## " + m.value("title", std::string(kMetricTitles[i])) + " (`" + std::string(kMetrics[i]) + "`)";
            if (m.contains("dimension")) out += " - " + m["dimension"].get<std::string>();
            out += "\n\n";
            for (const char* level : {"0", "1", "2"}) {
                out += "- **" + std::string(level) + "**: " + m["levels"][level].get<std::string>() + "\n";
            }
        }
        return out;
    }
};

} // namespace duma::eval
