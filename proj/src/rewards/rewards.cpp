// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/rewards.hpp"

#include "samslab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

namespace samslab {

namespace {

std::atomic<std::size_t> g_clamped{0};

double mean_exp_loss(const RoundLossSummary& s, bool mean) {
    if (s.losses.empty()) throw ContractViolation("loss summary for round " + std::to_string(s.round) + " is empty");
    double total = 0.0;
    for (double l : s.losses) {
        if (!std::isfinite(l)) throw NumericalError("non-finite loss in round " + std::to_string(s.round));
        if (l > kExpLossClamp) {
            g_clamped.fetch_add(1, std::memory_order_relaxed);
            l = kExpLossClamp;
        }
        total += std::exp(l);
    }
    return mean ? total / static_cast<double>(s.losses.size()) : total;
}

double normalized_drop(double a, double b) { return (a - b) / std::max(a, b); }

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> minmax_normalize(std::span<const double> values) {
    if (values.empty()) throw ContractViolation("min-max normalization of an empty list");
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericalError("min-max normalization of a non-finite value");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<double> out(values.size(), 0.5);
    if (hi > lo) {
        const double range = hi - lo;
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / range;
    }
    return out;
}

double batch_reward(const RoundLossSummary& prev, const RoundLossSummary& curr) {
    return normalized_drop(mean_exp_loss(prev, true), mean_exp_loss(curr, true));
}

double batch_reward_summed(const RoundLossSummary& prev, const RoundLossSummary& curr) {
    return normalized_drop(mean_exp_loss(prev, false), mean_exp_loss(curr, false));
}

std::size_t exp_clamp_count() { return g_clamped.load(std::memory_order_relaxed); }

std::vector<double> sample_rewards(std::span<const SampleSignal> signals) {
    if (signals.empty()) throw ContractViolation("sample-level reward over an empty subset");
    std::vector<double> margins;
    std::vector<double> logps;
    margins.reserve(signals.size());
    logps.reserve(signals.size());
    for (const auto& s : signals) {
        margins.push_back(s.margin);
        logps.push_back(s.chosen_logp);
    }
    const auto g_margin = minmax_normalize(margins);
    const auto g_logp = minmax_normalize(logps);
    std::vector<double> out(signals.size());
    for (std::size_t i = 0; i < signals.size(); ++i) out[i] = g_margin[i] + (1.0 - g_logp[i]);
    return out;
}

double sample_reward(std::span<const SampleSignal> signals, std::size_t index) {
    if (index >= signals.size()) {
        throw ContractViolation("sample index " + std::to_string(index) + " outside subset of " +
                                std::to_string(signals.size()));
    }
    return sample_rewards(signals)[index];
}

double combined_reward(double r_batch, double r_sample, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!std::isfinite(r_batch) || !std::isfinite(r_sample)) throw NumericalError("non-finite reward component");
    return gamma * sigmoid(r_batch) + (1.0 - gamma) * sigmoid(r_sample);
}

double subset_reward(std::span<const double> per_sample) {
    double total = 0.0;
    for (double r : per_sample) total += r;
    return total;
}

SftPhaseRewards sft_phase_rewards(const RoundLossSummary& prev, const RoundLossSummary& curr,
                                  std::span<const SftSignal> subset_signals) {
    if (subset_signals.empty()) throw ContractViolation("SFT-phase reward over an empty subset");
    SftPhaseRewards out;
    out.batch = batch_reward(prev, curr);
    std::vector<double> losses;
    std::vector<double> logps;
    for (const auto& s : subset_signals) {
        losses.push_back(s.sft_loss);
        logps.push_back(s.chosen_logp);
    }
    const auto g_loss = minmax_normalize(losses);
    const auto g_logp = minmax_normalize(logps);
    out.per_sample.resize(subset_signals.size());
    for (std::size_t i = 0; i < subset_signals.size(); ++i) out.per_sample[i] = g_loss[i] + (1.0 - g_logp[i]);
    return out;
}

}  // namespace samslab
