// duma: session service, interactive chat, session replay and evaluation tooling.

#include "duma/duma.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <string>

namespace {

httplib::Server* g_server = nullptr;

void print_trace_steps(const duma::SlowTrace& trace, std::ostream& os) {
    for (const auto& s : trace.steps) os << "    " << s.serialize() << "\n";
    os << "    => " << trace.final_result << " (" << duma::to_string(trace.terminated_by) << ")\n";
}

int run_serve(const std::string& config_path, const std::string& host, int port) {
    const auto config = duma::AppConfig::load(config_path);
    auto engine = config.make_engine();
    duma::SessionService service(*engine, config);
    httplib::Server server;
    service.install(server);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::clog << "duma: serving on http://" << host << ":" << port << " (data_dir " << config.data_dir.string() << ")\n";
    if (!server.listen(host, port)) {
        std::cerr << "duma: cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

int run_chat(const std::string& config_path, const std::string& session, const std::string& profile, bool show_slow) {
    const auto config = duma::AppConfig::load(config_path);
    auto engine = config.make_engine();
    const auto& session_config = config.profile(profile);
    std::string id = session;
    if (id.empty()) {
        id = engine->create_session(session_config);
    } else {
        engine->attach_session(id, session_config);
    }
    std::cout << "session " << id << " (type /quit to leave)\n";

    std::string line;
    while (std::cout << "you> " << std::flush, std::getline(std::cin, line)) {
        const auto q = duma::text::trim(line);
        if (q.empty()) continue;
        if (q == "/quit" || q == "/exit") break;
        auto sink = [&](const duma::TurnEvent& e) {
            if (e.type == "fast_reply") {
                std::cout << "duma> " << e.data["response"].get<std::string>() << "\n";
                if (e.data["invoke"].get<bool>()) std::cout << "      (thinking...)\n";
            } else if (e.type == "slow_step" && show_slow) {
                std::cout << "  [slow] " << duma::step_from_json(e.data["step"]).serialize() << "\n";
            } else if (e.type == "final_reply") {
                std::cout << "duma> " << e.data["response"].get<std::string>() << "\n";
            } else if (e.type == "error") {
                std::cout << "error: " << e.data["message"].get<std::string>() << "\n";
            }
            std::cout.flush();
        };
        try {
            engine->run_turn(id, std::string(q), sink);
        } catch (const duma::Error& e) {
            if (e.code() == duma::ErrorCode::InvalidArgument) std::cout << "error: " << e.what() << "\n";
        }
    }
    return 0;
}

int run_replay(const std::string& config_path, const std::string& data_dir, const std::string& session, bool show_slow) {
    std::filesystem::path dir = data_dir;
    if (dir.empty()) dir = duma::AppConfig::load(config_path).data_dir;
    const duma::MemoryStore store(dir);
    const auto memory = store.load(session);
    std::cout << "session " << session << " (" << memory.size() << " records)\n";
    if (memory.empty()) return 0;
    const auto last = memory.records().back().turn_index;
    for (std::uint64_t t = 0; t <= last; ++t) {
        duma::TurnTrace trace;
        try {
            trace = duma::Engine::reconstruct_turn(memory, t);
        } catch (const duma::Error&) {
            continue;
        }
        std::cout << "\n[turn " << t << "]" << (trace.failed ? " FAILED" : "") << "\n";
        std::cout << "  user: " << trace.question << "\n";
        std::cout << "  fast: " << trace.result.o_f.response << (trace.result.o_f.invoke ? "  [invoke]" : "") << "\n";
        if (trace.result.o_s) {
            if (show_slow) {
                std::cout << "  slow:\n";
                print_trace_steps(*trace.result.o_s, std::cout);
            } else {
                std::cout << "  slow: " << trace.result.o_s->final_result << "\n";
            }
        }
        if (trace.result.o_b) std::cout << "  final: " << trace.result.o_b->response << "\n";
        if (trace.failed) std::cout << "  error: " << trace.error << "\n";
    }
    return 0;
}

int run_eval(const std::string& scores, const std::string& out) {
    const auto table = duma::eval::aggregate(duma::eval::load_scores(scores));
    const auto rendered = table.render_markdown();
    std::cout << rendered;
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) {
            std::cerr << "duma: cannot write " << out << "\n";
            return 1;
        }
        f << rendered;
    }
    return 0;
}

int run_align(const std::string& runs, double threshold) {
    const auto report = duma::eval::check_alignment(duma::eval::load_runs(runs), threshold);
    std::cout << report.render();
    return report.flagged().empty() ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"duma - dual-mind conversational agent runtime"};
    app.require_subcommand(1);

    std::string config_path;
    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "run the HTTP session service");
    serve->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
    serve->add_option("--port", port, "listen port");
    serve->add_option("--host", host, "listen address");

    std::string session;
    std::string profile = "default";
    bool show_slow = false;
    auto* chat = app.add_subcommand("chat", "interactive conversation in the terminal");
    chat->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
    chat->add_option("--session", session, "resume a stored session");
    chat->add_option("--profile", profile, "session profile from session_defaults");
    chat->add_flag("--show-slow", show_slow, "print slow-mind steps as they happen");

    std::string data_dir;
    auto* replay = app.add_subcommand("replay", "re-render a stored session");
    replay->add_option("--session", session, "session id")->required();
    auto* replay_config = replay->add_option("--config", config_path, "config file (for data_dir)");
    auto* replay_dir = replay->add_option("--data-dir", data_dir, "data directory");
    replay_config->excludes(replay_dir);
    replay->add_flag("--show-slow", show_slow, "print full slow traces");

    std::string scores;
    std::string out;
    auto* eval = app.add_subcommand("eval", "aggregate rubric scores into a mean table");
    eval->add_option("--scores", scores, "score file or directory of *.jsonl");
    eval->add_option("--out", out, "also write the table to this file");

    std::string runs;
    double threshold = 0.8;
    auto* align = eval->add_subcommand("align", "check that test dialogues asked the same questions");
    align->add_option("--runs", runs, "directory with one run per model")->required();
    align->add_option("--threshold", threshold, "flag pairs below this similarity")->check(CLI::Range(0.0, 1.0));

    std::string rubric_path;
    auto* rubric = eval->add_subcommand("rubric", "print annotator instructions from a rubric file");
    rubric->add_option("--rubric", rubric_path, "rubric JSON")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve->parsed()) return run_serve(config_path, host, port);
        if (chat->parsed()) return run_chat(config_path, session, profile, show_slow);
        if (replay->parsed()) {
            if (config_path.empty() && data_dir.empty()) {
                std::cerr << "duma replay: pass --config or --data-dir\n";
                return 2;
            }
            return run_replay(config_path, data_dir, session, show_slow);
        }
        if (align->parsed()) return run_align(runs, threshold);
        if (rubric->parsed()) {
            std::cout << duma::eval::Rubric::load(rubric_path).render_instructions();
            return 0;
        }
        if (eval->parsed()) {
            if (scores.empty()) {
                std::cerr << "duma eval: --scores is required\n";
                return 2;
            }
            return run_eval(scores, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "duma: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
