// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/adam.hpp"
#include "samslab/policy.hpp"
#include "samslab/sample.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace samslab {

// Frozen snapshot of a policy used as pi_ref. Log-probabilities are memoized per
// sample id, which is valid because the snapshot never changes. Each entry also
// keeps a hash of the sample's tokens so a reused id with new content is
// recomputed rather than served stale.
class ReferencePolicy {
public:
    explicit ReferencePolicy(PolicyParams params);

    const PolicyParams& params() const { return params_; }
    const PolicyShape& shape() const { return params_.shape; }
    std::uint64_t fingerprint() const { return params_.fingerprint(); }

    ResponseLogps logps(const PreferenceSample& sample) const;

private:
    PolicyParams params_;
    struct CacheEntry {
        std::uint64_t content = 0;
        ResponseLogps logps;
    };
    mutable std::unordered_map<SampleId, CacheEntry> cache_;
};

struct DpoForwardRecord {
    SampleId sample_id = 0;
    double loss = 0.0;
    double chosen_log_ratio = 0.0;    // beta * (log pi(y_w|x) - log pi_ref(y_w|x))
    double rejected_log_ratio = 0.0;  // beta * (log pi(y_l|x) - log pi_ref(y_l|x))
    double margin = 0.0;              // chosen_log_ratio - rejected_log_ratio
    double chosen_logp = 0.0;         // log pi(y_w|x)
    DenseMatrix layer_states;         // empty unless requested
};

// -log sigmoid(m), evaluated without overflow for large |m|.
double dpo_loss_from_margin(double margin);

double dpo_loss(double beta, double policy_chosen, double policy_rejected, double ref_chosen, double ref_rejected);

struct DpoForwardOptions {
    bool layer_states = true;
};

std::vector<DpoForwardRecord> dpo_forward(const PolicyParams& policy, const ReferencePolicy& reference,
                                          std::span<const PreferenceSample> samples, double beta,
                                          DpoForwardOptions options = {});

// Mean per-sample loss.
double batch_dpo_loss(std::span<const DpoForwardRecord> records);

// Mean DPO loss over batch[subset] and its gradient, accumulated into `grads`.
double dpo_subset_gradient(const PolicyParams& policy, const ReferencePolicy& reference,
                           std::span<const PreferenceSample> batch, std::span<const std::size_t> subset, double beta,
                           PolicyParams& grads);

// One optimizer step on the mean DPO loss of batch[subset]; samples outside the
// subset are never touched. Returns the pre-step subset loss.
double dpo_update(PolicyParams& policy, AdamOptimizer& opt, std::span<const PreferenceSample> batch,
                  std::span<const std::size_t> subset, const ReferencePolicy& reference, double beta);

// Fraction of samples whose margin is strictly positive; ties count as wrong.
double test_accuracy(const PolicyParams& policy, const ReferencePolicy& reference,
                     std::span<const PreferenceSample> dataset, double beta);

double accuracy_from_margins(std::span<const double> margins);

struct DpoMetrics {
    double mean_chosen_reward = 0.0;
    double mean_chosen_logp = 0.0;
    double mean_loss = 0.0;
    double mean_margin = 0.0;
};

DpoMetrics aggregate_metrics(std::span<const DpoForwardRecord> records);

}  // namespace samslab
