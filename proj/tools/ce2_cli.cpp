// Command-line front end over the C library API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ce2/ce2.h"

int main(int argc, char** argv) {
    CLI::App app{"cluster-edge exploration experiments"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string config_path;
    std::string out_dir;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("config", config_path, "experiment config file")->required();
    run_cmd->add_option("-o,--out", out_dir, "override the output directory");

    std::string eval_config;
    std::string policy_path;
    auto* eval_cmd = app.add_subcommand("eval", "re-evaluate a saved policy");
    eval_cmd->add_option("config", eval_config, "experiment config file")->required();
    eval_cmd->add_option("policy", policy_path, "saved policy.json")->required();

    std::vector<std::string> summaries;
    std::string table_out;
    auto* compare_cmd = app.add_subcommand("compare", "tabulate summary.json files");
    compare_cmd->add_option("summaries", summaries, "summary.json paths")->required();
    compare_cmd->add_option("-o,--out", table_out, "write the table to a file");

    std::string snapshots_path;
    std::string csv_path;
    auto* export_cmd =
        app.add_subcommand("export-snapshots", "flatten snapshots.json to a CSV");
    export_cmd->add_option("snapshots", snapshots_path, "snapshots.json path")->required();
    export_cmd->add_option("csv", csv_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    char err[1024] = {0};
    if (run_cmd->parsed()) {
        const ce2_status rc =
            ce2_run(config_path.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), err,
                    sizeof(err));
        if (rc != CE2_OK) {
            std::fprintf(stderr, "run failed: %s\n", err);
            return rc == CE2_ERR_CONFIG ? 2 : 1;
        }
        std::printf("run complete\n");
        return 0;
    }
    if (eval_cmd->parsed()) {
        double success = 0.0;
        const ce2_status rc =
            ce2_eval(eval_config.c_str(), policy_path.c_str(), &success, err, sizeof(err));
        if (rc != CE2_OK) {
            std::fprintf(stderr, "eval failed: %s\n", err);
            return rc == CE2_ERR_CONFIG ? 2 : 1;
        }
        std::printf("success_rate %.6f\n", success);
        return 0;
    }
    if (compare_cmd->parsed()) {
        std::vector<const char*> paths;
        paths.reserve(summaries.size());
        for (const auto& s : summaries) paths.push_back(s.c_str());
        const ce2_status rc = ce2_compare(paths.data(), paths.size(),
                                          table_out.empty() ? nullptr : table_out.c_str(), err,
                                          sizeof(err));
        if (rc != CE2_OK) {
            std::fprintf(stderr, "compare failed: %s\n", err);
            return 1;
        }
        return 0;
    }
    if (export_cmd->parsed()) {
        const ce2_status rc =
            ce2_export_snapshots(snapshots_path.c_str(), csv_path.c_str(), err, sizeof(err));
        if (rc != CE2_OK) {
            std::fprintf(stderr, "export-snapshots failed: %s\n", err);
            return 1;
        }
        std::printf("wrote %s\n", csv_path.c_str());
        return 0;
    }
    return 2;
}
