#pragma once

// Runs a golden scenario file through a fresh engine with scripted backends,
// a stepping clock and a fixed session id.
//
// Scenario file:
//   {"description": "...",
//    "max_steps": 4, "max_obs_chars": 2000,        (optional)
//    "fast": [responses...] | {"rules": [...], "default": "..."},
//    "slow": [responses...] | {"rules": [...], "default": "..."},
//    "turns": ["question", ...]}
//
// A plain array is a queue answered in order. Expected session files live in
// tests/golden/expected/<name>.jsonl.

#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace duma::testing {

inline std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }

inline std::vector<std::string> golden_scenarios() {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(golden_dir() / "scenarios")) {
        if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::shared_ptr<backends::ScriptedBackend> scripted_from(const std::string& name, const nlohmann::json& j) {
    if (j.is_array()) return queue_backend(name, j.get<std::vector<std::string>>());
    return std::shared_ptr<backends::ScriptedBackend>(backends::ScriptedBackend::from_json(name, j));
}

struct GoldenRun {
    std::string name;
    std::string session_id;
    std::unique_ptr<TempDir> dir;
    std::unique_ptr<Engine> engine;
    std::shared_ptr<backends::ScriptedBackend> fast;
    std::shared_ptr<backends::ScriptedBackend> slow;
    std::vector<TurnResult> results;
    std::vector<std::vector<TurnEvent>> events;
    std::vector<ProtocolViolation> violations;

    std::string jsonl() const { return engine->store().read_raw(session_id); }
    std::filesystem::path expected_path() const { return golden_dir() / "expected" / (name + ".jsonl"); }
};

inline GoldenRun run_golden(const std::string& name) {
    const auto spec = nlohmann::json::parse(read_file(golden_dir() / "scenarios" / (name + ".json")));
    GoldenRun run;
    run.name = name;
    run.session_id = "golden-" + name;
    run.dir = std::make_unique<TempDir>("duma-golden");

    auto violations = std::make_shared<std::vector<ProtocolViolation>>();
    EngineOptions opts;
    opts.clock = stepping_clock();
    opts.new_id = fixed_ids(run.session_id);
    opts.on_violation = [violations](const ProtocolViolation& v) { violations->push_back(v); };
    run.engine = std::make_unique<Engine>(MemoryStore(run.dir->path()), builtin_tools(), opts);

    run.fast = scripted_from("fast", spec.at("fast"));
    run.slow = scripted_from("slow", spec.at("slow"));
    run.engine->register_backend(run.fast);
    run.engine->register_backend(run.slow);

    auto cfg = session_config("fast", "slow", spec.value("max_steps", std::size_t{4}));
    cfg.slow.max_obs_chars = spec.value("max_obs_chars", cfg.slow.max_obs_chars);
    const auto id = run.engine->create_session(cfg);
    if (id != run.session_id) throw std::logic_error("unexpected session id " + id);

    for (const auto& q : spec.at("turns")) {
        std::vector<TurnEvent> evs;
        run.results.push_back(
            run.engine->run_turn(id, q.get<std::string>(), [&evs](const TurnEvent& e) { evs.push_back(e); }));
        run.events.push_back(std::move(evs));
    }
    run.violations = *violations;
    return run;
}

} // namespace duma::testing
