// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/sample.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace samslab {

// Per-sample losses of one full batch under the policy that had not yet seen it.
struct RoundLossSummary {
    std::size_t round = 0;
    std::vector<double> losses;
};

struct SampleSignal {
    SampleId sample_id = 0;
    double margin = 0.0;
    double chosen_logp = 0.0;
};

// Losses above this are clamped before exponentiation.
inline constexpr double kExpLossClamp = 30.0;

double sigmoid(double x);

// (v - min) / (max - min); every entry becomes 0.5 when max == min.
std::vector<double> minmax_normalize(std::span<const double> values);

// (A - B) / max(A, B) with A, B the mean of exp(loss) over the previous and
// current batch. The sign is positive iff the exponentiated loss went down.
double batch_reward(const RoundLossSummary& prev, const RoundLossSummary& curr);

// Same quantity with sums instead of means; equal to batch_reward for equal
// batch sizes.
double batch_reward_summed(const RoundLossSummary& prev, const RoundLossSummary& curr);

// Number of losses clamped since process start (diagnostic).
std::size_t exp_clamp_count();

// g(margin_i) + (1 - g(chosen_logp_i)), with g computed over `signals`.
double sample_reward(std::span<const SampleSignal> signals, std::size_t index);
std::vector<double> sample_rewards(std::span<const SampleSignal> signals);

// gamma * sigmoid(r_batch) + (1 - gamma) * sigmoid(r_sample).
double combined_reward(double r_batch, double r_sample, double gamma);

double subset_reward(std::span<const double> per_sample);

// Pretraining-phase signals: the SFT loss stands in for both the DPO loss of
// the batch-level reward and the margin of the sample-level reward.
struct SftSignal {
    SampleId sample_id = 0;
    double sft_loss = 0.0;
    double chosen_logp = 0.0;
};

struct SftPhaseRewards {
    double batch = 0.0;
    std::vector<double> per_sample;
};

SftPhaseRewards sft_phase_rewards(const RoundLossSummary& prev, const RoundLossSummary& curr,
                                  std::span<const SftSignal> subset_signals);

}  // namespace samslab
