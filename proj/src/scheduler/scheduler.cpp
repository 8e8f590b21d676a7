// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/scheduler/scheduler.hpp"

#include "samslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

namespace samslab {

namespace {

MlpShape exploration_shape(const SchedulerConfig& c) {
    if (c.downsample == 0) throw ConfigError("downsample factor must be at least 1");
    if (c.exploit_depth < 2) throw ConfigError("exploitation network depth must be at least 2");
    const std::size_t features = (c.exploit_depth - 1) * c.exploit_width;
    if (features % c.downsample != 0) {
        throw ConfigError("exploitation features (" + std::to_string(features) + ") not divisible by downsample factor " +
                          std::to_string(c.downsample));
    }
    const std::size_t in = features / c.downsample;
    return {.input_dim = in, .width = in, .depth = c.exploit_depth, .output_dim = 1};
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

std::vector<std::size_t> random_k(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(k, n);
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

Vector downsample_mean(std::span<const double> values, std::size_t factor) {
    if (factor == 0) throw ConfigError("downsample factor must be at least 1");
    if (values.size() % factor != 0) {
        throw ShapeError("cannot downsample " + std::to_string(values.size()) + " values by " + std::to_string(factor));
    }
    Vector out(static_cast<Eigen::Index>(values.size() / factor));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < factor; ++j) s += values[static_cast<std::size_t>(i) * factor + j];
        out[i] = s / static_cast<double>(factor);
    }
    return out;
}

std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k) {
    if (k == 0) throw ContractViolation("top-K selection needs K >= 1");
    for (double s : scores) {
        if (std::isnan(s)) throw NumericalError("NaN score in top-K selection");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(k, scores.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<std::size_t> random_k_subset(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    if (k == 0) throw ContractViolation("random subset needs K >= 1");
    return random_k(n, k, rng);
}

SchedulerState::SchedulerState(const SchedulerConfig& config)
    : config_(config),
      encoder_opt_(AdamConfig{.learning_rate = config.encoder_lr}),
      exploit_opt_(AdamConfig{.learning_rate = config.exploit_lr}),
      explore_opt_(AdamConfig{.learning_rate = config.explore_lr}),
      pool_(config.pool_capacity, config.seed ^ 0x9e3779b97f4a7c15ULL) {
    if (!(config.exploration_weight >= 0.0) || !std::isfinite(config.exploration_weight)) {
        throw ConfigError("exploration weight lambda must be finite and >= 0");
    }
    const MlpShape explore_shape = exploration_shape(config);
    auto rng = seeded(config.seed, 1);
    encoder_ = EncoderParams::initialized(config.encoder, rng);
    exploit_ = ResidualMlpParams::initialized(
        {.input_dim = config.encoder.context_dim, .width = config.exploit_width, .depth = config.exploit_depth,
         .output_dim = 1},
        rng);
    explore_ = ResidualMlpParams::initialized(explore_shape, rng);
}

ArmContext SchedulerState::encode(const DenseMatrix& layer_states, SampleId id) const {
    return encode_context(encoder_, layer_states, id);
}

Vector SchedulerState::exploit_features(const Vector& context) const {
    const MlpForward fwd = mlp_forward(exploit_, flat(context));
    Vector concat(static_cast<Eigen::Index>(fwd.hidden.size() * config_.exploit_width));
    for (std::size_t l = 0; l < fwd.hidden.size(); ++l) {
        concat.segment(static_cast<Eigen::Index>(l * config_.exploit_width),
                       static_cast<Eigen::Index>(config_.exploit_width)) = fwd.hidden[l];
    }
    return downsample_mean(flat(concat), config_.downsample);
}

ScheduleEstimate SchedulerState::estimate(std::span<const ArmContext> contexts) const {
    if (contexts.empty()) throw ContractViolation("scheduler estimate over an empty candidate set");
    ScheduleEstimate out;
    out.scores.reserve(contexts.size());
    for (const auto& c : contexts) {
        if (c.values.size() != static_cast<Eigen::Index>(config_.encoder.context_dim)) {
            throw ShapeError("arm context of sample " + std::to_string(c.sample_id) + " has dimension " +
                             std::to_string(c.values.size()));
        }
        const MlpForward fwd = mlp_forward(exploit_, flat(c.values));
        Vector concat(static_cast<Eigen::Index>(fwd.hidden.size() * config_.exploit_width));
        for (std::size_t l = 0; l < fwd.hidden.size(); ++l) {
            concat.segment(static_cast<Eigen::Index>(l * config_.exploit_width),
                           static_cast<Eigen::Index>(config_.exploit_width)) = fwd.hidden[l];
        }
        Vector hidden = downsample_mean(flat(concat), config_.downsample);
        const double exploit = fwd.output[0];
        const double explore = mlp_forward(explore_, flat(hidden)).output[0];
        out.exploit.push_back(exploit);
        out.explore.push_back(explore);
        out.scores.push_back(exploit + config_.exploration_weight * explore);
        out.hidden.push_back(std::move(hidden));
    }
    return out;
}

TransitionRecord SchedulerState::make_record(const ArmContext& context, const DenseMatrix& layer_states,
                                             const Vector& hidden, std::size_t round) const {
    TransitionRecord r;
    r.context = context;
    r.layer_states = layer_states;
    r.exploit_hidden = hidden;
    r.round = round;
    return r;
}

Vector SchedulerState::training_context(const TransitionRecord& record) const {
    if (encoder_.frozen) return record.context.values;
    return encode_context(encoder_, record.layer_states, record.context.sample_id).values;
}

SchedulerTrainReport SchedulerState::observe_and_train(std::span<const TransitionRecord> prev_subset,
                                                       std::size_t offline_batches, std::size_t current_round) {
    for (const auto& r : prev_subset) {
        if (!(r.reward > 0.0 && r.reward < 1.0)) {
            throw ContractViolation("transition reward " + std::to_string(r.reward) + " for sample " +
                                    std::to_string(r.context.sample_id) + " outside (0, 1)");
        }
        if (r.round >= current_round) {
            throw ContractViolation("record from round " + std::to_string(r.round) + " used for training in round " +
                                    std::to_string(current_round));
        }
    }

    std::vector<const TransitionRecord*> train;
    train.reserve(prev_subset.size() * (offline_batches + 1));
    for (const auto& r : prev_subset) train.push_back(&r);
    SchedulerTrainReport report;
    report.online_records = train.size();
    for (const TransitionBatch* b : pool_.sample(offline_batches)) {
        for (const auto& r : *b) train.push_back(&r);
    }
    report.offline_records = train.size() - report.online_records;
    if (train.empty()) return report;

    // Exploitation step, optionally backpropagating into the encoder.
    const bool train_encoder = !encoder_.frozen;
    const double inv_n = 1.0 / static_cast<double>(train.size());
    ResidualMlpParams exploit_grads(exploit_.shape);
    EncoderParams encoder_grads(encoder_.shape);
    double sq = 0.0;
    EncoderTape tape;
    for (const TransitionRecord* r : train) {
        const Vector ctx = train_encoder ? encode_with_tape(encoder_, r->layer_states, tape) : r->context.values;
        const MlpForward fwd = mlp_forward(exploit_, flat(ctx));
        const double resid = fwd.output[0] - r->reward;
        sq += resid * resid;
        const double d = resid * inv_n;
        const Vector d_ctx = mlp_backward(exploit_, flat(ctx), fwd, std::span<const double>(&d, 1), exploit_grads);
        if (train_encoder) encoder_backward(encoder_, r->layer_states, tape, d_ctx, encoder_grads);
    }
    report.exploit_loss = 0.5 * sq * inv_n;
    if (!std::isfinite(report.exploit_loss)) throw NumericalError("scheduler exploitation loss is not finite");
    exploit_opt_.step(exploit_.parameters(), std::as_const(exploit_grads).parameters());
    if (train_encoder) encoder_opt_.step(encoder_.parameters(), std::as_const(encoder_grads).parameters());

    // Exploration step on labels reward - f^S under the updated parameters.
    if (exploration_enabled()) {
        std::vector<Vector> inputs;
        inputs.reserve(train.size());
        report.exploration_labels.reserve(train.size());
        for (const TransitionRecord* r : train) {
            const Vector ctx = training_context(*r);
            const double pred = mlp_forward(exploit_, flat(ctx)).output[0];
            report.exploration_labels.push_back(r->reward - pred);
            inputs.push_back(config_.stale_exploration_features ? r->exploit_hidden : exploit_features(ctx));
        }
        report.explore_loss = mlp_train_step(explore_, explore_opt_, inputs, report.exploration_labels);
        report.explore_trained = true;
    }

    if (!prev_subset.empty()) pool_.insert(TransitionBatch(prev_subset.begin(), prev_subset.end()));
    return report;
}

PretrainReport pretrain_scheduler(SchedulerState& state, std::span<const SftRoundTrace> trace,
                                  const PretrainOptions& options) {
    if (state.dpo_started()) throw LifecycleError("scheduler pretraining requested after DPO started");
    if (options.select_k == 0) throw ContractViolation("pretraining needs K >= 1");
    auto rng = seeded(options.seed, 7);

    PretrainReport report;
    std::vector<std::size_t> prev_selected;
    std::vector<TransitionRecord> pending;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const SftRoundTrace& round = trace[t];
        if (round.signals.size() != round.layer_states.size() || round.signals.empty()) {
            throw ShapeError("SFT trace round " + std::to_string(round.round) + " is malformed");
        }
        if (t > 0 && !pending.empty()) {
            const SftRoundTrace& prev = trace[t - 1];
            RoundLossSummary prev_sum{prev.round, {}};
            RoundLossSummary curr_sum{round.round, {}};
            for (const auto& s : prev.signals) prev_sum.losses.push_back(s.sft_loss);
            for (const auto& s : round.signals) curr_sum.losses.push_back(s.sft_loss);
            std::vector<SftSignal> subset;
            for (std::size_t i : prev_selected) subset.push_back(prev.signals[i]);
            const SftPhaseRewards rewards = sft_phase_rewards(prev_sum, curr_sum, subset);
            for (std::size_t i = 0; i < pending.size(); ++i) {
                pending[i].reward = combined_reward(rewards.batch, rewards.per_sample[i], options.gamma);
            }
            const auto tr = state.observe_and_train(pending, options.offline_batches, round.round);
            report.exploit_losses.push_back(tr.exploit_loss);
            report.explore_losses.push_back(tr.explore_loss);
        }

        std::vector<ArmContext> contexts;
        contexts.reserve(round.signals.size());
        for (std::size_t i = 0; i < round.signals.size(); ++i) {
            contexts.push_back(state.encode(round.layer_states[i], round.signals[i].sample_id));
        }
        const ScheduleEstimate est = state.estimate(contexts);
        prev_selected = t == 0 ? random_k(contexts.size(), options.select_k, rng)
                               : select_top_k(est.scores, options.select_k);
        pending.clear();
        for (std::size_t i : prev_selected) {
            pending.push_back(state.make_record(contexts[i], round.layer_states[i], est.hidden[i], round.round));
        }
    }
    state.freeze_encoder();
    return report;
}

}  // namespace samslab
