// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/dpo.hpp"

#include "samslab/errors.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

namespace samslab {

namespace {

void check_compatible(const PolicyParams& policy, const ReferencePolicy& reference) {
    if (!(policy.shape == reference.shape())) {
        throw ConfigError("policy and reference models differ in shape (vocab " + std::to_string(policy.shape.vocab) +
                          " vs " + std::to_string(reference.shape().vocab) + ")");
    }
}

std::uint64_t token_hash(const PreferenceSample& s) {
    // FNV-1a over the three sequences, each terminated by a value no token takes.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::int64_t v) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 0x100000001b3ULL;
    };
    for (const auto* seq : {&s.prompt, &s.chosen, &s.rejected}) {
        for (TokenId t : *seq) mix(t);
        mix(-1);
    }
    return h;
}

void check_beta(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive and finite");
}

}  // namespace

ReferencePolicy::ReferencePolicy(PolicyParams params) : params_(std::move(params)) {}

ResponseLogps ReferencePolicy::logps(const PreferenceSample& sample) const {
    const std::uint64_t content = token_hash(sample);
    if (auto it = cache_.find(sample.id); it != cache_.end() && it->second.content == content) return it->second.logps;
    const ResponseLogps lp = response_logps(params_, sample);
    cache_[sample.id] = {content, lp};
    return lp;
}

double dpo_loss_from_margin(double margin) {
    // -log sigmoid(m) = log(1 + e^{-m})
    if (margin > 0.0) return std::log1p(std::exp(-margin));
    return -margin + std::log1p(std::exp(margin));
}

double dpo_loss(double beta, double policy_chosen, double policy_rejected, double ref_chosen, double ref_rejected) {
    check_beta(beta);
    return dpo_loss_from_margin(beta * (policy_chosen - ref_chosen) - beta * (policy_rejected - ref_rejected));
}

std::vector<DpoForwardRecord> dpo_forward(const PolicyParams& policy, const ReferencePolicy& reference,
                                          std::span<const PreferenceSample> samples, double beta,
                                          DpoForwardOptions options) {
    check_beta(beta);
    check_compatible(policy, reference);
    if (samples.empty()) throw ContractViolation("DPO forward on an empty batch");

    std::vector<DpoForwardRecord> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        DpoForwardRecord rec;
        rec.sample_id = s.id;
        double chosen = 0.0;
        double rejected = 0.0;
        if (options.layer_states) {
            PolicyReadout readout = policy_readout(policy, s);
            chosen = readout.logp_chosen;
            rejected = readout.logp_rejected;
            rec.layer_states = std::move(readout.layer_states);
        } else {
            validate_sample(policy.shape, s);
            const ResponseLogps lp = response_logps(policy, s);
            chosen = lp.chosen;
            rejected = lp.rejected;
        }
        const ResponseLogps ref = reference.logps(s);
        rec.chosen_log_ratio = beta * (chosen - ref.chosen);
        rec.rejected_log_ratio = beta * (rejected - ref.rejected);
        rec.margin = rec.chosen_log_ratio - rec.rejected_log_ratio;
        rec.loss = dpo_loss_from_margin(rec.margin);
        rec.chosen_logp = chosen;
        out.push_back(std::move(rec));
    }
    return out;
}

double batch_dpo_loss(std::span<const DpoForwardRecord> records) {
    if (records.empty()) throw ContractViolation("batch DPO loss of an empty record set");
    double sum = 0.0;
    for (const auto& r : records) sum += r.loss;
    return sum / static_cast<double>(records.size());
}

double dpo_subset_gradient(const PolicyParams& policy, const ReferencePolicy& reference,
                           std::span<const PreferenceSample> batch, std::span<const std::size_t> subset, double beta,
                           PolicyParams& grads) {
    check_beta(beta);
    check_compatible(policy, reference);
    if (subset.empty()) throw ContractViolation("DPO update needs a nonempty subset");
    const double inv_k = 1.0 / static_cast<double>(subset.size());

    double total = 0.0;
    for (std::size_t idx : subset) {
        if (idx >= batch.size()) {
            throw ContractViolation("subset index " + std::to_string(idx) + " outside batch of " +
                                    std::to_string(batch.size()));
        }
        const auto& s = batch[idx];
        validate_sample(policy.shape, s);
        const ResponseLogps ref = reference.logps(s);
        const ResponsePass chosen(policy, s.prompt, s.chosen);
        const ResponsePass rejected(policy, s.prompt, s.rejected);
        const double margin = beta * (chosen.logp() - ref.chosen) - beta * (rejected.logp() - ref.rejected);
        total += dpo_loss_from_margin(margin);
        // dL/dm = sigmoid(m) - 1 = -sigmoid(-m)
        const double dm = -1.0 / (1.0 + std::exp(margin));
        chosen.backward(inv_k * dm * beta, grads);
        rejected.backward(-inv_k * dm * beta, grads);
    }
    return total * inv_k;
}

double dpo_update(PolicyParams& policy, AdamOptimizer& opt, std::span<const PreferenceSample> batch,
                  std::span<const std::size_t> subset, const ReferencePolicy& reference, double beta) {
    PolicyParams grads(policy.shape);
    const double loss = dpo_subset_gradient(policy, reference, batch, subset, beta, grads);
    if (!std::isfinite(loss)) throw NumericalError("DPO subset loss is not finite");
    opt.step(policy.parameters(), std::as_const(grads).parameters());
    return loss;
}

double accuracy_from_margins(std::span<const double> margins) {
    if (margins.empty()) throw ContractViolation("accuracy over an empty set");
    std::size_t correct = 0;
    for (double m : margins) correct += m > 0.0 ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(margins.size());
}

double test_accuracy(const PolicyParams& policy, const ReferencePolicy& reference,
                     std::span<const PreferenceSample> dataset, double beta) {
    if (dataset.empty()) throw ContractViolation("test accuracy over an empty dataset");
    const auto records = dpo_forward(policy, reference, dataset, beta, {.layer_states = false});
    std::vector<double> margins;
    margins.reserve(records.size());
    for (const auto& r : records) margins.push_back(r.margin);
    return accuracy_from_margins(margins);
}

DpoMetrics aggregate_metrics(std::span<const DpoForwardRecord> records) {
    if (records.empty()) throw ContractViolation("metrics over an empty record set");
    DpoMetrics m;
    for (const auto& r : records) {
        m.mean_chosen_reward += r.chosen_log_ratio;
        m.mean_chosen_logp += r.chosen_logp;
        m.mean_loss += r.loss;
        m.mean_margin += r.margin;
    }
    const double n = static_cast<double>(records.size());
    m.mean_chosen_reward /= n;
    m.mean_chosen_logp /= n;
    m.mean_loss /= n;
    m.mean_margin /= n;
    return m;
}

}  // namespace samslab
