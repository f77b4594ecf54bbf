#pragma once

#include "duma/error.hpp"
#include "duma/eval/rubric.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace duma::eval {

// Exact mean sum/n; rounding happens only when printing.
struct MetricMean {
    std::uint64_t sum = 0;
    std::uint64_t n = 0;

    // Half-up to `places` decimals, computed in integers. "n/a" when n == 0.
    std::string format(unsigned places = 3) const {
        if (n == 0) return "n/a";
        std::uint64_t scale = 1;
        for (unsigned i = 0; i < places; ++i) scale *= 10;
        const std::uint64_t scaled = (2 * sum * scale + n) / (2 * n);
        if (places == 0) return std::to_string(scaled);
        std::string frac = std::to_string(scaled % scale);
        frac.insert(0, places - frac.size(), '0');
        return std::to_string(scaled / scale) + "." + frac;
    }

    friend bool operator==(const MetricMean&, const MetricMean&) = default;
};

using ModelRow = std::array<MetricMean, kMetrics.size()>;

struct AggregateTable {
    std::map<std::string, ModelRow> rows;  // by model name

    std::string render_markdown() const {
        std::string header = "| Model |";
        std::string rule = "|---|";
        for (const auto t : kMetricTitles) {
            header += " " + std::string(t) + " |";
            rule += "---|";
        }
        std::string means = header + "\n" + rule + "\n";
        std::string counts = header + "\n" + rule + "\n";
        for (const auto& [model, row] : rows) {
            means += "| " + model + " |";
            counts += "| " + model + " |";
            for (const auto& m : row) {
                means += " " + m.format() + " |";
                counts += " " + std::to_string(m.n) + " |";
            }
            means += "\n";
            counts += "\n";
        }
        return "## Mean scores\n\n" + means + "\n## Scored dialogues (n)\n\n" + counts;
    }
};

inline AggregateTable aggregate(const std::vector<RubricScore>& scores) {
    if (scores.empty()) throw Error(ErrorCode::EmptyScoreSet, "no score records");
    AggregateTable t;
    for (const auto& s : scores) {
        auto& row = t.rows[s.model_name];
        for (std::size_t i = 0; i < kMetrics.size(); ++i) {
            if (!s.scores[i]) continue;
            const int v = *s.scores[i];
            if (v < 0 || v > 2) {
                throw Error(ErrorCode::InvalidScore, "score " + std::to_string(v) + " out of range");
            }
            row[i].sum += static_cast<std::uint64_t>(v);
            row[i].n += 1;
        }
    }
    return t;
}

} // namespace duma::eval
