#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "eft/report.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& file, bool seed_set, std::uint64_t seed,
            const std::string& out_dir, const std::string& format, bool svg, bool check) {
    eft::ExperimentScenario sc;
    try {
        sc = eft::parse_scenario_file(file);
    } catch (const eft::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    if (seed_set) sc.seed = seed;

    const eft::RunReport report = eft::run_scenario(sc);
    const eft::OutputFormat fmt =
        (format == "json") ? eft::OutputFormat::Json : eft::OutputFormat::Csv;
    const fs::path dir = eft::write_outputs(sc, report, out_dir, fmt, svg);
    std::cout << "ran scenario '" << sc.name << "' (kind " << eft::to_string(sc.kind)
              << ", seed " << sc.seed << ")\noutputs: " << dir.string() << "\n";

    if (check) {
        const eft::CheckOutcome outcome = eft::check_report(sc, report);
        if (outcome.passed) {
            std::cout << "checks: PASS\n";
        } else {
            std::cout << "checks: FAIL\n";
            for (const auto& f : outcome.failures) std::cout << "  - " << f << "\n";
            return 3;
        }
    }
    return 0;
}

int cmd_validate(const std::string& file) {
    try {
        const eft::ExperimentScenario sc = eft::parse_scenario_file(file);
        std::cout << "OK: " << sc.name << " (kind " << eft::to_string(sc.kind) << ", seed "
                  << sc.seed << ")\n";
        return 0;
    } catch (const eft::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}

int cmd_list(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        std::cerr << "not a directory: " << dir << "\n";
        return 2;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            const eft::ExperimentScenario sc = eft::parse_scenario_file(f.string());
            std::printf("%-24s %-14s seed %-12llu %s\n", sc.name.c_str(),
                        eft::to_string(sc.kind).c_str(),
                        static_cast<unsigned long long>(sc.seed), f.string().c_str());
        } catch (const eft::ConfigError&) {
            std::printf("%-24s %-14s %s\n", "(invalid)", "-", f.string().c_str());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eftsim - deterministic simulator of time-bin error-free transmission"};
    app.require_subcommand(1);
    app.set_version_flag("--version", eft::kVersion);

    std::string run_file, out_dir = "out", format = "csv";
    std::uint64_t seed = 0;
    bool svg = false, check = false;
    auto* run = app.add_subcommand("run", "run a scenario file and write its outputs");
    run->add_option("scenario-file", run_file, "scenario JSON file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_dir, "output directory root (default: out)");
    run->add_option("--format", format, "tabular output format")
        ->check(CLI::IsMember({"csv", "json"}));
    run->add_flag("--svg", svg, "also write SVG charts");
    run->add_flag("--check", check, "run built-in consistency checks (exit 3 on failure)");

    std::string validate_file;
    auto* validate = app.add_subcommand("validate", "parse and validate a scenario file");
    validate->add_option("scenario-file", validate_file, "scenario JSON file")->required();

    std::string list_dir = "scenarios";
    auto* list = app.add_subcommand("list-scenarios", "list scenario files in a directory");
    list->add_option("--dir", list_dir, "directory to scan (default: scenarios)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(run_file, seed_opt->count() > 0, seed, out_dir, format, svg, check);
        }
        if (validate->parsed()) return cmd_validate(validate_file);
        if (list->parsed()) return cmd_list(list_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
