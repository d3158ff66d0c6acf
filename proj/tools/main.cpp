// nms: run, validate and list experiments. Exit codes: 0 ok, 1 usage, 2 config,
// 3 solver, 4 experiment checks failed.
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nms/cache.hpp"
#include "nms/errors.hpp"
#include "nms/experiments.hpp"
#include "nms/parallel.hpp"

namespace {

constexpr int kOk = 0, kUsage = 1, kConfig = 2, kSolver = 3, kChecks = 4;

int fail(const std::string& kind, const std::string& message, int code) {
    nlohmann::json rec{{"error", kind}, {"message", message}};
    std::cerr << rec.dump() << "\n";
    return code;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const nms::ConfigError& e) {
        return fail(e.kind(), e.what(), kConfig);
    } catch (const nms::Error& e) {
        return fail(e.kind(), e.what(), kSolver);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail("filesystem", e.what(), kConfig);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kSolver);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional minimal surface experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, cache_dir;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run an experiment and write <id>.csv and <id>.json");
    run->add_option("config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    run->add_option("--cache", cache_dir, "kernel table cache directory")->envname("NMS_CACHE_DIR");

    auto* val = app.add_subcommand("validate", "parse and resolve a configuration without running it");
    val->add_option("config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);

    auto* list = app.add_subcommand("list-experiments", "print the experiment ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (list->parsed()) {
        for (const auto& id : nms::experiment_ids()) std::cout << id << "\n";
        return kOk;
    }
    if (val->parsed()) {
        return guarded([&] {
            const auto cfg = nms::ExperimentConfig::load(config_path);
            std::cout << nlohmann::json{{"valid", true}, {"experiment", cfg.experiment}, {"config_hash", cfg.hash()}}.dump()
                      << "\n";
            return kOk;
        });
    }
    return guarded([&] {
        const auto cfg = nms::ExperimentConfig::load(config_path);
        nms::set_thread_count(threads);
        if (!cache_dir.empty()) nms::set_cache_directory(cache_dir);
        const auto report = nms::run(cfg);
        const std::filesystem::path dir = out_dir.empty() ? cfg.output : out_dir;
        nms::write_report(report, dir);
        std::cout << nlohmann::json{{"experiment", report.experiment},
                                    {"config_hash", report.config_hash},
                                    {"rows", report.rows.size()},
                                    {"wall_time_s", report.wall_time},
                                    {"checks", report.checks},
                                    {"output", dir.string()}}
                         .dump()
                  << "\n";
        if (!report.checks_passed()) return fail("check", "one or more experiment checks failed", kChecks);
        return kOk;
    });
}
