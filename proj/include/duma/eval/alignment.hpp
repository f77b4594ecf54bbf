#pragma once

// Checks that the i-th test dialogue asked each model (nearly) the same
// questions. Similarity is 1 - levenshtein / max_length over code points of
// the questions joined by newlines.

#include "duma/error.hpp"
#include "duma/memory_store.hpp"
#include "duma/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace duma::eval {

using QuestionSequence = std::vector<std::string>;

inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline double sequence_similarity(const QuestionSequence& a, const QuestionSequence& b) {
    auto join = [](const QuestionSequence& q) {
        std::string s;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (i) s.push_back('\n');
            s += q[i];
        }
        return text::to_code_points(s);
    };
    const auto ja = join(a);
    const auto jb = join(b);
    const auto longest = std::max(ja.size(), jb.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(ja, jb)) / static_cast<double>(longest);
}

struct AlignmentPair {
    std::size_t index = 0;
    std::string model_a;
    std::string model_b;
    double similarity = 1.0;
    bool flagged = false;
};

struct AlignmentReport {
    double threshold = 0.8;
    std::vector<AlignmentPair> pairs;

    std::vector<AlignmentPair> flagged() const {
        std::vector<AlignmentPair> out;
        std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out), [](const auto& p) { return p.flagged; });
        return out;
    }

    std::string render() const {
        std::string out;
        char buf[64];
        for (const auto& p : pairs) {
            std::snprintf(buf, sizeof buf, "%.3f", p.similarity);
            out += "dialogue " + std::to_string(p.index) + "  " + p.model_a + " vs " + p.model_b + "  similarity " + buf +
                   (p.flagged ? "  FLAGGED" : "") + "\n";
        }
        std::snprintf(buf, sizeof buf, "%.2f", threshold);
        out += std::to_string(flagged().size()) + " of " + std::to_string(pairs.size()) +
               " pair(s) below threshold " + buf + "\n";
        return out;
    }
};

// Every pair of models is compared at every dialogue index.
inline AlignmentReport check_alignment(const std::map<std::string, std::vector<QuestionSequence>>& runs,
                                       double threshold = 0.8) {
    AlignmentReport report;
    report.threshold = threshold;
    if (runs.empty()) return report;
    const auto expected = runs.begin()->second.size();
    for (const auto& [model, dialogues] : runs) {
        if (dialogues.size() != expected) {
            throw Error(ErrorCode::LengthMismatch, "model '" + model + "' has " + std::to_string(dialogues.size()) +
                                                       " dialogues, expected " + std::to_string(expected));
        }
    }
    for (std::size_t i = 0; i < expected; ++i) {
        for (auto a = runs.begin(); a != runs.end(); ++a) {
            for (auto b = std::next(a); b != runs.end(); ++b) {
                AlignmentPair p;
                p.index = i;
                p.model_a = a->first;
                p.model_b = b->first;
                p.similarity = sequence_similarity(a->second[i], b->second[i]);
                p.flagged = p.similarity < threshold;
                report.pairs.push_back(std::move(p));
            }
        }
    }
    return report;
}

// A runs directory holds one entry per model:
//   <model>.jsonl  lines of {"dialogue_id", "questions": [...]}, in dialogue order
//   <model>/       session memory files (*.jsonl, sorted by name), user turns as questions
inline std::map<std::string, std::vector<QuestionSequence>> load_runs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::InvalidArgument, "runs path " + dir.string() + " is not a directory");
    }
    std::map<std::string, std::vector<QuestionSequence>> runs;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") {
            auto& seqs = runs[e.path().stem().string()];
            std::ifstream in(e.path());
            std::string line;
            while (std::getline(in, line)) {
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                try {
                    seqs.push_back(nlohmann::json::parse(line).at("questions").get<QuestionSequence>());
                } catch (const nlohmann::json::exception& ex) {
                    throw Error(ErrorCode::InvalidArgument, e.path().string() + ": " + ex.what());
                }
            }
        } else if (e.is_directory()) {
            auto& seqs = runs[e.path().filename().string()];
            const auto session_dir =
                std::filesystem::is_directory(e.path() / "sessions") ? e.path() / "sessions" : e.path();
            std::vector<std::filesystem::path> files;
            for (const auto& f : std::filesystem::directory_iterator(session_dir)) {
                if (f.path().extension() == ".jsonl") files.push_back(f.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                QuestionSequence qs;
                for (const auto& r : load_session_file(f).records()) {
                    if (const auto* u = std::get_if<UserTurn>(&r.entry)) qs.push_back(u->question);
                }
                seqs.push_back(std::move(qs));
            }
        }
    }
    return runs;
}

} // namespace duma::eval
