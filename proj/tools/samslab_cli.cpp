// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

// samslab command line: data generation, warm-up/pretraining, training in the
// three selection modes, checkpoint evaluation and run comparison.

#include "samslab/errors.hpp"
#include "samslab/harness/checkpoint.hpp"
#include "samslab/harness/compare.hpp"
#include "samslab/harness/config.hpp"
#include "samslab/harness/dataset.hpp"
#include "samslab/harness/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace samslab;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::string out_dir = ".";
    std::string data_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_mode) {
    cmd->add_option("--config", o.config_path, "JSON run configuration");
    cmd->add_option("--seed", o.seed, "Override the seed");
    if (with_mode) cmd->add_option("--mode", o.mode, "dpo-full, dpo-random-k or dpo-sams");
    cmd->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
}

RunConfig resolve(const CommonOptions& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.mode) c.mode = parse_mode(*o.mode);
    validate(c);
    return c;
}

fs::path data_dir_of(const CommonOptions& o) { return o.data_dir.empty() ? fs::path(o.out_dir) : fs::path(o.data_dir); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

int cmd_generate(const CommonOptions& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.seed) c.data.seed = *o.seed;
    validate(c.data);
    fs::create_directories(o.out_dir);
    const GeneratedData d = generate_dataset(c.data);
    write_dataset(fs::path(o.out_dir) / "train.jsonl", d.train);
    write_dataset(fs::path(o.out_dir) / "test.jsonl", d.test);
    std::size_t noisy = 0;
    for (const auto& s : d.train) noisy += s.noise_flag ? 1 : 0;
    fmt::print("wrote {} train ({} noisy) and {} test samples to {}\n", d.train.size(), noisy, d.test.size(),
               o.out_dir);
    return 0;
}

int cmd_pretrain(const CommonOptions& o) {
    const RunConfig c = resolve(o);
    const auto train = read_dataset(data_dir_of(o) / "train.jsonl");
    fs::create_directories(o.out_dir);
    const PretrainResult r = run_pretraining(c, train);
    const fs::path out(o.out_dir);
    write_checkpoint(out / "reference.ckpt", policy_checkpoint(r.reference, config_hash(c)));
    write_checkpoint(out / "scheduler.ckpt", scheduler_checkpoint(r.scheduler, config_hash(c)));
    std::string csv = "round,sft_loss,exploit_loss,explore_loss\n";
    for (std::size_t i = 0; i < r.sft_losses.size(); ++i) {
        const bool trained = i >= 1 && i - 1 < r.report.exploit_losses.size();
        csv += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", i, r.sft_losses[i],
                           trained ? r.report.exploit_losses[i - 1] : std::nan(""),
                           trained ? r.report.explore_losses[i - 1] : std::nan(""));
    }
    write_text(out / "pretrain.csv", csv);
    fmt::print("pretrained over {} SFT rounds; checkpoints in {}\n", r.sft_losses.size(), o.out_dir);
    return 0;
}

int cmd_train(const CommonOptions& o, const std::string& from_pretrained) {
    const RunConfig c = resolve(o);
    const fs::path data = data_dir_of(o);
    const auto train = read_dataset(data / "train.jsonl");
    const auto test = read_dataset(data / "test.jsonl");
    fs::create_directories(o.out_dir);
    const fs::path out(o.out_dir);

    TrainingInputs inputs;
    inputs.abort_dump_dir = out;
    if (!from_pretrained.empty()) {
        inputs.reference = policy_from_checkpoint(read_checkpoint(fs::path(from_pretrained) / "reference.ckpt"));
        if (c.mode == TrainMode::Sams) {
            SchedulerState s(scheduler_config(c));
            load_scheduler_checkpoint(read_checkpoint(fs::path(from_pretrained) / "scheduler.ckpt"), s);
            inputs.scheduler = std::move(s);
        }
    }
    const TrainingResult r = run_training(c, train, test, std::move(inputs));
    write_metrics_csv(out / "metrics.csv", r.rows);
    write_text(out / "summary.json", training_summary_json(c, r) + "\n");
    write_checkpoint(out / "policy.ckpt", policy_checkpoint(r.policy, config_hash(c)));
    write_checkpoint(out / "reference.ckpt", policy_checkpoint(r.reference, config_hash(c)));
    if (r.scheduler) write_checkpoint(out / "scheduler.ckpt", scheduler_checkpoint(*r.scheduler, config_hash(c)));
    if (c.dump_schedule && !r.schedule.empty()) write_schedule_csv(out / "schedule.csv", r.schedule);
    if (r.ragged_rounds > 0) {
        fmt::print(stderr, "note: {} rounds had fewer than K samples; all were selected\n", r.ragged_rounds);
    }
    fmt::print("{} seed {}: final test accuracy {:.4f}, last-quarter selected noise {:.4f}\n", mode_name(c.mode),
               c.seed, r.final_test_accuracy, last_quartile_noise_fraction(r.rows));
    return 0;
}

int cmd_evaluate(const std::string& policy, const std::string& reference, const std::string& test_path, double beta,
                 const std::string& out_path) {
    const PolicyParams p = policy_from_checkpoint(read_checkpoint(policy));
    const PolicyParams ref = policy_from_checkpoint(read_checkpoint(reference));
    const auto test = read_dataset(test_path);
    const std::string csv = evaluation_csv(evaluate_policy(p, ref, test, beta));
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_text(out_path, csv);
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& specs, const std::string& out_path) {
    std::vector<MetricsTable> runs;
    for (const auto& spec : specs) {
        // label=path groups runs into seed families; a bare path uses the mode column.
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            runs.push_back(read_metrics_csv(spec));
        } else {
            runs.push_back(read_metrics_csv(spec.substr(eq + 1), spec.substr(0, eq)));
        }
    }
    const std::string csv = report_csv(compare_runs(runs));
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_text(out_path, csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"samslab: preference optimization with learned sample scheduling"};
    app.require_subcommand(1);

    CommonOptions gen_opts;
    auto* gen = app.add_subcommand("generate-data", "Write synthetic train/test preference data");
    add_common(gen, gen_opts, false);

    CommonOptions pre_opts;
    auto* pre = app.add_subcommand("pretrain", "Supervised warm-up plus scheduler pretraining");
    add_common(pre, pre_opts, true);
    pre->add_option("--data-dir", pre_opts.data_dir, "Directory holding train.jsonl (default: --out-dir)");

    CommonOptions train_opts;
    std::string from_pretrained;
    auto* train = app.add_subcommand("train", "Run DPO training in the configured mode");
    add_common(train, train_opts, true);
    train->add_option("--data-dir", train_opts.data_dir, "Directory holding train.jsonl and test.jsonl");
    train->add_option("--from-pretrained", from_pretrained, "Directory written by `pretrain`");

    std::string eval_policy;
    std::string eval_reference;
    std::string eval_test;
    std::string eval_out;
    double eval_beta = 0.1;
    auto* eval = app.add_subcommand("evaluate", "Score a policy checkpoint against a reference on a test file");
    eval->add_option("--policy", eval_policy, "Policy checkpoint")->required();
    eval->add_option("--reference", eval_reference, "Reference checkpoint")->required();
    eval->add_option("--test", eval_test, "Test dataset (JSON Lines)")->required();
    eval->add_option("--beta", eval_beta, "DPO temperature")->capture_default_str();
    eval->add_option("--out", eval_out, "Write the summary row here instead of stdout");

    std::vector<std::string> compare_files;
    std::string compare_out;
    auto* cmp = app.add_subcommand("compare", "Compare metrics files ([label=]path ...)");
    cmp->add_option("files", compare_files, "Metrics CSV files")->required();
    cmp->add_option("--out", compare_out, "Write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) return cmd_generate(gen_opts);
        if (*pre) return cmd_pretrain(pre_opts);
        if (*train) return cmd_train(train_opts, from_pretrained);
        if (*eval) return cmd_evaluate(eval_policy, eval_reference, eval_test, eval_beta, eval_out);
        if (*cmp) return cmd_compare(compare_files, compare_out);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        fmt::print(stderr, "numerical error: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 1;
}
