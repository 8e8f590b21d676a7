// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/adam.hpp"
#include "samslab/numeric/mlp.hpp"
#include "samslab/rewards.hpp"
#include "samslab/scheduler/batch_pool.hpp"
#include "samslab/scheduler/encoder.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace samslab {

struct SchedulerConfig {
    EncoderShape encoder{};
    std::size_t exploit_width = 64;
    std::size_t exploit_depth = 4;
    std::size_t downsample = 4;
    double exploration_weight = 1.0;  // lambda
    double exploit_lr = 1e-3;
    double explore_lr = 1e-3;
    double encoder_lr = 1e-3;
    std::size_t pool_capacity = 256;
    // Use the exploitation features captured at scheduling time as the
    // exploration-net input instead of recomputing them after the f^S step.
    bool stale_exploration_features = false;
    std::uint64_t seed = 0;
};

// Mean over consecutive groups of `factor` coordinates.
Vector downsample_mean(std::span<const double> values, std::size_t factor);

// Indices of the min(K, n) largest scores, ties to the lower index, returned
// in ascending index order.
std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k);

// Uniform min(K, n)-subset of 0..n-1, ascending.
std::vector<std::size_t> random_k_subset(std::size_t n, std::size_t k, std::mt19937_64& rng);

struct ScheduleEstimate {
    std::vector<double> scores;   // exploit + lambda * explore
    std::vector<double> exploit;  // f^S
    std::vector<double> explore;  // f^S'
    std::vector<Vector> hidden;   // downsampled f^S features, the f^S' input
};

struct SchedulerTrainReport {
    double exploit_loss = 0.0;  // pre-step
    double explore_loss = 0.0;  // pre-step; 0 when exploration training is off
    std::size_t online_records = 0;
    std::size_t offline_records = 0;
    std::vector<double> exploration_labels;  // reward - post-step f^S, per training record
    bool explore_trained = false;
};

class SchedulerState {
public:
    explicit SchedulerState(const SchedulerConfig& config);

    const SchedulerConfig& config() const { return config_; }

    ArmContext encode(const DenseMatrix& layer_states, SampleId id) const;

    ScheduleEstimate estimate(std::span<const ArmContext> contexts) const;

    // Builds a pending record for a sample scheduled at `round`.
    TransitionRecord make_record(const ArmContext& context, const DenseMatrix& layer_states, const Vector& hidden,
                                 std::size_t round) const;

    // One exploitation step on the previous subset plus `offline_batches` pool
    // batches, exploration labels under the post-step exploitation net, one
    // exploration step, then the previous subset goes into the pool.
    // `current_round` must exceed every record's round.
    SchedulerTrainReport observe_and_train(std::span<const TransitionRecord> prev_subset, std::size_t offline_batches,
                                           std::size_t current_round);

    bool exploration_enabled() const { return config_.exploration_weight > 0.0; }

    void freeze_encoder() { encoder_.frozen = true; }
    void set_encoder_frozen(bool frozen) { encoder_.frozen = frozen; }
    bool encoder_frozen() const { return encoder_.frozen; }

    void mark_dpo_started() { dpo_started_ = true; }
    bool dpo_started() const { return dpo_started_; }

    EncoderParams& encoder() { return encoder_; }
    const EncoderParams& encoder() const { return encoder_; }
    ResidualMlpParams& exploit_net() { return exploit_; }
    const ResidualMlpParams& exploit_net() const { return exploit_; }
    ResidualMlpParams& explore_net() { return explore_; }
    const ResidualMlpParams& explore_net() const { return explore_; }
    BatchPool& pool() { return pool_; }
    const BatchPool& pool() const { return pool_; }
    AdamOptimizer& exploit_optimizer() { return exploit_opt_; }
    AdamOptimizer& explore_optimizer() { return explore_opt_; }
    AdamOptimizer& encoder_optimizer() { return encoder_opt_; }

    // Downsampled exploitation-net features for one context.
    Vector exploit_features(const Vector& context) const;

    // Context used for training: the stored one when the encoder is frozen,
    // otherwise a fresh encoding of the raw layer states.
    Vector training_context(const TransitionRecord& record) const;

private:
    SchedulerConfig config_;
    EncoderParams encoder_;
    ResidualMlpParams exploit_;
    ResidualMlpParams explore_;
    AdamOptimizer encoder_opt_;
    AdamOptimizer exploit_opt_;
    AdamOptimizer explore_opt_;
    BatchPool pool_;
    bool dpo_started_ = false;
};

// Per-round trace of the policy's SFT phase: what the scheduler needs to train
// without touching the policy.
struct SftRoundTrace {
    std::size_t round = 0;
    std::vector<SftSignal> signals;
    std::vector<DenseMatrix> layer_states;
};

struct PretrainOptions {
    std::size_t select_k = 32;
    double gamma = 0.5;
    std::size_t offline_batches = 8;
    std::uint64_t seed = 0;
};

struct PretrainReport {
    std::vector<double> exploit_losses;  // one per trained round
    std::vector<double> explore_losses;
};

// Runs the reward/train/select loop over an SFT trace with SFT-based rewards and
// freezes the encoder afterwards. Throws LifecycleError once DPO has started.
PretrainReport pretrain_scheduler(SchedulerState& state, std::span<const SftRoundTrace> trace,
                                  const PretrainOptions& options);

}  // namespace samslab
