#include "agrlab/cli.hpp"

#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "agrlab/errors.hpp"
#include "agrlab/experiment.hpp"

namespace agrlab {

namespace {

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> seeds;
    size_t start = 0;
    while (start <= text.size()) {
        const size_t comma = text.find(',', start);
        const std::string item = text.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            try {
                seeds.push_back(std::stoull(item));
            } catch (const std::exception&) {
                throw ConfigError("--seed: '" + item + "' is not an integer");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw ConfigError("--seed: empty seed list");
    return seeds;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"desk-scale multi-task LSTM laboratory for subject-verb agreement"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seed_list;
    std::function<void(const ExperimentConfig&)> action;

    for (const auto& [name, desc, fn] :
         std::initializer_list<std::tuple<const char*, const char*,
                                          void (*)(const ExperimentConfig&)>>{
             {"gen", "generate synthetic JSONL corpora plus stats", &cmd_gen},
             {"train", "train checkpoints (single / joint / pretrain regimes)", &cmd_train},
             {"eval", "evaluate checkpoints: reports, summary CSV and SVG plots", &cmd_eval},
             {"trace", "word-by-word prediction and unit-activation traces", &cmd_trace}}) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "override out_dir from the config");
        sub->add_option("--seed", seed_list, "override seeds (comma-separated list)");
        sub->callback([&action, fn] { action = fn; });
    }

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::cout << app.help() << std::flush;
            return 0;
        }
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        CliOverrides overrides;
        if (!out_dir.empty()) overrides.out_dir = out_dir;
        if (!seed_list.empty()) overrides.seeds = parse_seed_list(seed_list);
        const ExperimentConfig cfg =
            apply_overrides(load_experiment_config(config_path), overrides);
        action(cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const TemplateError& e) {
        std::cerr << "template error: " << e.what() << '\n';
        return 2;
    } catch (const RangeError& e) {
        std::cerr << "range error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {  // data, vocabulary, checkpoint, compatibility
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace agrlab
