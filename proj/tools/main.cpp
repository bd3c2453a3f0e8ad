#include <csignal>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cdisc/bundle.hpp"
#include "cdisc/config.hpp"
#include "cdisc/error.hpp"
#include "cdisc/pipeline.hpp"
#include "cdisc/service.hpp"

namespace {

constexpr int exit_other = 1;
constexpr int exit_missing = 2;
constexpr int exit_hash = 3;
constexpr int exit_config = 64;  // EX_USAGE

int serve(const cdisc::PipelineConfig& cfg, const std::string& bundle_dir, const std::string& bind, int port) {
    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    const auto bundle = cdisc::load_bundle(bundle_dir.empty() ? cfg.artifact_dir : std::filesystem::path(bundle_dir));
    cdisc::Server server(bundle);
    const int bound = server.bind(bind, port);
    std::thread worker([&] { server.serve(); });
    server.wait_until_ready();
    std::cerr << "serving " << bundle.dir.string() << " on http://" << bind << ":" << bound << std::endl;

    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
    worker.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concept discovery and attribute-feedback retrieval"};
    app.require_subcommand(1);

    std::string config_path;
    std::string artifact_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("-c,--config", config_path, "YAML config; built-in defaults when omitted");
    app.add_option("--artifact-dir", artifact_dir, "Override the config's artifact_dir");
    app.add_option("--seed", seed, "Override the master seed");

    std::vector<std::pair<CLI::App*, cdisc::Stage>> stage_commands;
    for (cdisc::Stage s : cdisc::all_stages()) {
        auto* sub = app.add_subcommand(std::string(cdisc::stage_name(s)));
        stage_commands.emplace_back(sub, s);
    }
    const char* blurbs[] = {"Generate the synthetic corpus, or ingest dataset_source",
                            "Train skip-gram word vectors on the descriptions",
                            "Train the joint image/description embedding",
                            "Compute attribute activation maps",
                            "Cluster attributes into concepts",
                            "Train one subspace classifier per concept",
                            "Write clustering, top-k and diagnostics reports"};
    for (std::size_t i = 0; i < stage_commands.size(); ++i) stage_commands[i].first->description(blurbs[i]);
    auto* run_all = app.add_subcommand("run-all", "Run every stage in order");
    auto* show_config = app.add_subcommand("show-config", "Print the effective config as YAML");

    auto* serve_cmd = app.add_subcommand("serve", "Serve a bundle over HTTP");
    std::string bundle_dir;
    std::string bind = "127.0.0.1";
    int port = 8080;
    serve_cmd->add_option("--bundle", bundle_dir, "Bundle directory; defaults to the artifact dir");
    serve_cmd->add_option("--port", port, "Port, 0 picks a free one")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--bind", bind, "Bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        cdisc::PipelineConfig cfg =
            config_path.empty() ? cdisc::default_pipeline_config() : cdisc::load_config(config_path);
        if (!artifact_dir.empty()) cfg.artifact_dir = artifact_dir;
        if (seed) cfg.seed = *seed;
        cdisc::validate_config(cfg);

        if (*show_config) {
            std::cout << cdisc::render_config(cfg);
            return 0;
        }
        if (*serve_cmd) return serve(cfg, bundle_dir, bind, port);
        if (*run_all) {
            cdisc::run_all(cfg, std::cerr);
            return 0;
        }
        for (const auto& [sub, stage] : stage_commands) {
            if (*sub) cdisc::run_stage(stage, cfg, std::cerr);
        }
        return 0;
    } catch (const cdisc::MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_missing;
    } catch (const cdisc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const cdisc::HashMismatchError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_hash;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_other;
    }
}
