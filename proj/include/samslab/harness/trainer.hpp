// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/harness/config.hpp"
#include "samslab/policy.hpp"
#include "samslab/sample.hpp"
#include "samslab/scheduler/scheduler.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace samslab {

struct MetricRow {
    std::size_t round = 0;
    TrainMode mode = TrainMode::Full;
    double mean_batch_dpo_loss = 0.0;
    double test_accuracy = 0.0;
    double mean_chosen_reward = 0.0;
    double mean_chosen_logp = 0.0;
    // Rewards observed this round belong to the previous round's subset; NaN
    // on the first round.
    double batch_level_reward = 0.0;
    double mean_combined_reward = 0.0;
    double selected_noise_fraction = 0.0;
    double wall_clock_ms = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricRow& row);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows);

// Per-candidate scheduler diagnostics, one row per sample scored in dpo-sams.
struct ScheduleRow {
    std::size_t round = 0;
    SampleId sample_id = 0;
    double score = 0.0;
    double exploit = 0.0;
    double explore = 0.0;
    bool selected = false;
    double reward = 0.0;  // NaN unless selected and observed one round later
};

void write_schedule_csv(const std::filesystem::path& path, std::span<const ScheduleRow> rows);

// Epoch-wise shuffled stream of fixed-size batches; batches straddle epoch
// boundaries, so only a dataset smaller than the batch size yields short ones.
class BatchStream {
public:
    BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);
    std::vector<std::size_t> next();

private:
    std::size_t size_;
    std::size_t batch_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

struct SftPhaseResult {
    PolicyParams policy;
    std::vector<double> losses;        // pre-step mean SFT loss per round
    std::vector<SftRoundTrace> trace;  // empty unless requested
};

// Full-batch supervised warm-up on the chosen responses.
SftPhaseResult run_sft_phase(const RunConfig& config, std::span<const PreferenceSample> train, bool record_trace);

struct PretrainResult {
    PolicyParams reference;
    SchedulerState scheduler;
    PretrainReport report;
    std::vector<double> sft_losses;
};

// Warm-up plus scheduler pretraining, as used by dpo-sams with pretraining on.
PretrainResult run_pretraining(const RunConfig& config, std::span<const PreferenceSample> train);

struct TrainingInputs {
    std::optional<PolicyParams> reference;     // skips the warm-up when set
    std::optional<SchedulerState> scheduler;   // used as-is in dpo-sams
    std::optional<std::filesystem::path> abort_dump_dir;
};

struct TrainingResult {
    std::vector<MetricRow> rows;
    PolicyParams policy;
    PolicyParams reference;
    std::optional<SchedulerState> scheduler;
    PretrainReport pretrain;
    std::vector<std::uint64_t> policy_fingerprints;   // after each round's update
    std::vector<std::uint64_t> encoder_fingerprints;  // per DPO round, dpo-sams only
    std::vector<std::vector<SampleId>> selections;    // per round, ascending batch order
    std::vector<ScheduleRow> schedule;                // filled when dump_schedule is set
    std::size_t ragged_rounds = 0;                    // rounds whose batch held fewer than K samples
    double final_test_accuracy = 0.0;
};

TrainingResult run_training(const RunConfig& config, std::span<const PreferenceSample> train,
                            std::span<const PreferenceSample> test, TrainingInputs inputs = {});

// Mean selected-noise fraction over the last quarter of rounds (at least one).
double last_quartile_noise_fraction(std::span<const MetricRow> rows);

// Summary JSON: final accuracy, aggregate noise figures and the config echo.
std::string training_summary_json(const RunConfig& config, const TrainingResult& result);

struct EvaluationSummary {
    std::size_t samples = 0;
    double test_accuracy = 0.0;
    double mean_loss = 0.0;
    double mean_margin = 0.0;
    double mean_chosen_reward = 0.0;
    double mean_chosen_logp = 0.0;
};

// ConfigError if the two policies or the data disagree on the vocabulary.
EvaluationSummary evaluate_policy(const PolicyParams& policy, const PolicyParams& reference,
                                  std::span<const PreferenceSample> test, double beta);

std::string evaluation_csv(const EvaluationSummary& summary);

}  // namespace samslab
