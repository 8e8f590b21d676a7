// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/harness/trainer.hpp"

#include "samslab/dpo.hpp"
#include "samslab/errors.hpp"
#include "samslab/harness/checkpoint.hpp"
#include "samslab/rewards.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace samslab {

namespace {

using Json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
    return std::mt19937_64(seq);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint32_t id) { return stream(seed, id)(); }

enum Stream : std::uint32_t {
    kPolicyInit = 11,
    kSftBatches = 12,
    kDpoBatches = 13,
    kRandomSubset = 14,
    kPretrain = 15,
};

std::vector<PreferenceSample> gather(std::span<const PreferenceSample> data, std::span<const std::size_t> idx) {
    std::vector<PreferenceSample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data[i]);
    return out;
}

// Evaluation-only: reads the generator's hidden noise flags.
double noise_fraction(std::span<const PreferenceSample> batch, std::span<const std::size_t> subset) {
    if (subset.empty()) return 0.0;
    std::size_t noisy = 0;
    for (std::size_t i : subset) noisy += batch[i].noise_flag ? 1 : 0;
    return static_cast<double>(noisy) / static_cast<double>(subset.size());
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

void open_or_throw(std::ofstream& out, const std::filesystem::path& path) {
    out.open(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
}

SftRoundTrace trace_round(const PolicyParams& policy, std::span<const PreferenceSample> batch, std::size_t round) {
    SftRoundTrace tr;
    tr.round = round;
    tr.signals.reserve(batch.size());
    tr.layer_states.reserve(batch.size());
    for (const auto& s : batch) {
        PolicyReadout r = policy_readout(policy, s);
        tr.signals.push_back({.sample_id = s.id,
                              .sft_loss = -r.logp_chosen / static_cast<double>(s.chosen.size()),
                              .chosen_logp = r.logp_chosen});
        tr.layer_states.push_back(std::move(r.layer_states));
    }
    return tr;
}

}  // namespace

std::string metrics_csv_header() {
    return "round,mode,mean_batch_dpo_loss,test_accuracy,mean_chosen_reward,mean_chosen_logp,batch_level_reward,"
           "mean_combined_reward,selected_noise_fraction,wall_clock_ms";
}

std::string metrics_csv_line(const MetricRow& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{}", r.round, mode_name(r.mode), num(r.mean_batch_dpo_loss),
                       num(r.test_accuracy), num(r.mean_chosen_reward), num(r.mean_chosen_logp),
                       num(r.batch_level_reward), num(r.mean_combined_reward), num(r.selected_noise_fraction),
                       num(r.wall_clock_ms));
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows) {
    std::ofstream out;
    open_or_throw(out, path);
    out << metrics_csv_header() << '\n';
    for (const auto& r : rows) out << metrics_csv_line(r) << '\n';
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

void write_schedule_csv(const std::filesystem::path& path, std::span<const ScheduleRow> rows) {
    std::ofstream out;
    open_or_throw(out, path);
    out << "round,sample_id,score,exploit,explore,selected,reward\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{}\n", r.round, r.sample_id, num(r.score), num(r.exploit),
                           num(r.explore), r.selected ? 1 : 0, num(r.reward));
    }
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

BatchStream::BatchStream(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : size_(dataset_size), batch_(batch_size), rng_(seed), order_(dataset_size) {
    if (dataset_size == 0) throw ConfigError("cannot draw batches from an empty dataset");
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
}

std::vector<std::size_t> BatchStream::next() {
    const std::size_t want = std::min(batch_, size_);
    std::vector<std::size_t> out;
    out.reserve(want);
    while (out.size() < want) {
        if (cursor_ == size_) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            cursor_ = 0;
        }
        out.push_back(order_[cursor_++]);
    }
    return out;
}

SftPhaseResult run_sft_phase(const RunConfig& config, std::span<const PreferenceSample> train, bool record_trace) {
    auto init_rng = stream(config.seed, kPolicyInit);
    SftPhaseResult out{PolicyParams::initialized(config.policy, init_rng), {}, {}};
    AdamOptimizer opt(AdamConfig{.learning_rate = config.sft_lr});
    BatchStream batches(train.size(), config.batch_size, stream_seed(config.seed, kSftBatches));
    out.losses.reserve(config.sft_rounds);
    for (std::size_t r = 0; r < config.sft_rounds; ++r) {
        const auto batch = gather(train, batches.next());
        if (record_trace) out.trace.push_back(trace_round(out.policy, batch, r));
        const double loss = sft_train_step(out.policy, opt, batch);
        out.losses.push_back(loss);
    }
    return out;
}

PretrainResult run_pretraining(const RunConfig& config, std::span<const PreferenceSample> train) {
    validate(config);
    SftPhaseResult sft = run_sft_phase(config, train, true);
    SchedulerState state(scheduler_config(config));
    const PretrainReport report = pretrain_scheduler(state, sft.trace,
                                                     {.select_k = config.select_k,
                                                      .gamma = config.gamma,
                                                      .offline_batches = config.offline_batches,
                                                      .seed = stream_seed(config.seed, kPretrain)});
    return {std::move(sft.policy), std::move(state), report, std::move(sft.losses)};
}

TrainingResult run_training(const RunConfig& config, std::span<const PreferenceSample> train,
                            std::span<const PreferenceSample> test, TrainingInputs inputs) {
    validate(config);
    if (train.empty()) throw InputError("training split is empty");
    if (test.empty()) throw InputError("test split is empty");
    for (const auto& s : train) validate_sample(config.policy, s);
    for (const auto& s : test) validate_sample(config.policy, s);
    const bool sams = config.mode == TrainMode::Sams;

    TrainingResult result;
    std::optional<SchedulerState> scheduler;
    if (inputs.reference) {
        if (!(inputs.reference->shape == config.policy)) {
            throw ConfigError("pretrained reference does not match the configured policy shape");
        }
        result.reference = *inputs.reference;
        if (sams) {
            scheduler = inputs.scheduler ? std::move(*inputs.scheduler) : SchedulerState(scheduler_config(config));
        }
    } else {
        const bool trace = sams && config.pretrain && !inputs.scheduler;
        SftPhaseResult sft = run_sft_phase(config, train, trace);
        result.reference = std::move(sft.policy);
        if (sams) {
            if (inputs.scheduler) {
                scheduler = std::move(*inputs.scheduler);
            } else {
                scheduler.emplace(scheduler_config(config));
                if (config.pretrain) {
                    result.pretrain = pretrain_scheduler(*scheduler, sft.trace,
                                                         {.select_k = config.select_k,
                                                          .gamma = config.gamma,
                                                          .offline_batches = config.offline_batches,
                                                          .seed = stream_seed(config.seed, kPretrain)});
                }
            }
        }
    }
    if (scheduler) {
        if (!config.pretrain && !inputs.scheduler) scheduler->set_encoder_frozen(config.encoder_frozen);
        scheduler->mark_dpo_started();
    }

    PolicyParams policy = result.reference;
    const ReferencePolicy reference(result.reference);
    AdamOptimizer opt(AdamConfig{.learning_rate = config.policy_lr});
    BatchStream batches(train.size(), config.batch_size, stream_seed(config.seed, kDpoBatches));
    auto subset_rng = stream(config.seed, kRandomSubset);

    const auto started = std::chrono::steady_clock::now();
    double latest_accuracy = 0.0;
    std::optional<RoundLossSummary> prev_summary;
    std::vector<SampleSignal> prev_signals;  // cached signals of the previous subset
    std::vector<TransitionRecord> pending;   // previous subset, rewards still unobserved
    std::size_t pending_schedule_begin = 0;  // first schedule row of the previous round

    auto abort_with_dump = [&](std::size_t round, const std::string& what) {
        if (inputs.abort_dump_dir) {
            std::filesystem::create_directories(*inputs.abort_dump_dir);
            write_checkpoint(*inputs.abort_dump_dir / "abort_policy.ckpt", policy_checkpoint(policy, config_hash(config)));
            write_metrics_csv(*inputs.abort_dump_dir / "abort_metrics.csv", result.rows);
        }
        throw NumericalError(fmt::format("round {}: {}", round, what));
    };

    for (std::size_t t = 1; t <= config.rounds; ++t) {
        const auto batch = gather(train, batches.next());
        const auto records = dpo_forward(policy, reference, batch, config.beta, {.layer_states = sams});
        RoundLossSummary summary{t, {}};
        summary.losses.reserve(records.size());
        for (const auto& r : records) {
            if (!std::isfinite(r.loss)) abort_with_dump(t, fmt::format("non-finite DPO loss for sample {}", r.sample_id));
            summary.losses.push_back(r.loss);
        }

        MetricRow row;
        row.round = t;
        row.mode = config.mode;
        const DpoMetrics agg = aggregate_metrics(records);
        row.mean_batch_dpo_loss = agg.mean_loss;
        row.mean_chosen_reward = agg.mean_chosen_reward;
        row.mean_chosen_logp = agg.mean_chosen_logp;
        row.batch_level_reward = kNaN;
        row.mean_combined_reward = kNaN;

        // Rewards of the previous subset, from the previous and current forward summaries.
        if (prev_summary && !prev_signals.empty()) {
            const double rb = batch_reward(*prev_summary, summary);
            const std::vector<double> rs = sample_rewards(prev_signals);
            std::vector<double> combined(rs.size());
            for (std::size_t i = 0; i < rs.size(); ++i) combined[i] = combined_reward(rb, rs[i], config.gamma);
            row.batch_level_reward = rb;
            row.mean_combined_reward = subset_reward(combined) / static_cast<double>(combined.size());
            if (sams) {
                for (std::size_t i = 0; i < pending.size(); ++i) pending[i].reward = combined[i];
                if (config.dump_schedule) {
                    std::size_t k = 0;
                    for (std::size_t j = pending_schedule_begin; j < result.schedule.size(); ++j) {
                        if (result.schedule[j].selected) result.schedule[j].reward = combined[k++];
                    }
                }
                scheduler->observe_and_train(pending, config.offline_batches, t);
            }
        }

        std::vector<std::size_t> subset;
        const std::size_t n = batch.size();
        if (n < config.select_k) ++result.ragged_rounds;
        if (config.mode == TrainMode::Full) {
            subset.resize(n);
            std::iota(subset.begin(), subset.end(), std::size_t{0});
        } else if (config.mode == TrainMode::RandomK || t == 1) {
            subset = random_k_subset(n, config.select_k, subset_rng);
        }
        if (sams) {
            std::vector<ArmContext> contexts;
            contexts.reserve(n);
            for (const auto& r : records) contexts.push_back(scheduler->encode(r.layer_states, r.sample_id));
            const ScheduleEstimate est = scheduler->estimate(contexts);
            if (t > 1) subset = select_top_k(est.scores, config.select_k);
            pending.clear();
            for (std::size_t i : subset) {
                pending.push_back(scheduler->make_record(contexts[i], records[i].layer_states, est.hidden[i], t));
            }
            if (config.dump_schedule) {
                pending_schedule_begin = result.schedule.size();
                std::size_t k = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const bool chosen = k < subset.size() && subset[k] == i;
                    if (chosen) ++k;
                    result.schedule.push_back({t, batch[i].id, est.scores[i], est.exploit[i], est.explore[i], chosen,
                                               kNaN});
                }
            }
            result.encoder_fingerprints.push_back(scheduler->encoder().fingerprint());
        }

        double cached = 0.0;
        std::vector<SampleId> ids;
        ids.reserve(subset.size());
        prev_signals.clear();
        for (std::size_t i : subset) {
            cached += records[i].loss;
            ids.push_back(batch[i].id);
            prev_signals.push_back({records[i].sample_id, records[i].margin, records[i].chosen_logp});
        }
        cached /= static_cast<double>(subset.size());
        row.selected_noise_fraction = noise_fraction(batch, subset);

        double subset_loss = 0.0;
        try {
            subset_loss = dpo_update(policy, opt, batch, subset, reference, config.beta);
        } catch (const NumericalError& e) {
            abort_with_dump(t, e.what());
        }
        if (std::abs(subset_loss - cached) > 1e-10 * std::max(1.0, std::abs(cached))) {
            throw ContractViolation(fmt::format("round {}: subset loss {} disagrees with cached forward {}", t,
                                                subset_loss, cached));
        }
        if (!all_finite(std::as_const(policy).parameters())) abort_with_dump(t, "policy parameters became non-finite");

        if (t == 1 || t % config.eval_interval == 0 || t == config.rounds) {
            latest_accuracy = test_accuracy(policy, reference, test, config.beta);
        }
        row.test_accuracy = latest_accuracy;
        if (config.record_wall_clock) {
            row.wall_clock_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        }
        result.rows.push_back(row);
        result.selections.push_back(std::move(ids));
        result.policy_fingerprints.push_back(policy.fingerprint());
        prev_summary = std::move(summary);
    }

    result.final_test_accuracy = latest_accuracy;
    result.policy = std::move(policy);
    result.scheduler = std::move(scheduler);
    return result;
}

double last_quartile_noise_fraction(std::span<const MetricRow> rows) {
    if (rows.empty()) throw ContractViolation("no metric rows");
    const std::size_t count = std::max<std::size_t>(1, rows.size() / 4);
    double sum = 0.0;
    for (std::size_t i = rows.size() - count; i < rows.size(); ++i) sum += rows[i].selected_noise_fraction;
    return sum / static_cast<double>(count);
}

std::string training_summary_json(const RunConfig& config, const TrainingResult& result) {
    Json j;
    j["mode"] = std::string(mode_name(config.mode));
    j["seed"] = config.seed;
    j["rounds"] = result.rows.size();
    j["final_test_accuracy"] = result.final_test_accuracy;
    j["last_quartile_noise_fraction"] = result.rows.empty() ? 0.0 : last_quartile_noise_fraction(result.rows);
    j["ragged_rounds"] = result.ragged_rounds;
    j["policy_fingerprint"] = fmt::format("{:016x}", result.policy.fingerprint());
    j["reference_fingerprint"] = fmt::format("{:016x}", result.reference.fingerprint());
    j["config_hash"] = fmt::format("{:016x}", config_hash(config));
    j["config"] = Json::parse(run_config_to_json(config));
    return j.dump(2);
}

EvaluationSummary evaluate_policy(const PolicyParams& policy, const PolicyParams& reference,
                                  std::span<const PreferenceSample> test, double beta) {
    if (policy.shape.vocab != reference.shape.vocab) {
        throw ConfigError(fmt::format("policy vocab {} does not match reference vocab {}", policy.shape.vocab,
                                      reference.shape.vocab));
    }
    if (!(policy.shape == reference.shape)) throw ConfigError("policy and reference checkpoints differ in shape");
    if (test.empty()) throw InputError("evaluation set is empty");
    for (const auto& s : test) {
        try {
            validate_sample(policy.shape, s);
        } catch (const InputError& e) {
            throw ConfigError(fmt::format("test sample {} is incompatible with the checkpoint: {}", s.id, e.what()));
        }
    }
    const ReferencePolicy ref(reference);
    const auto records = dpo_forward(policy, ref, test, beta, {.layer_states = false});
    std::vector<double> margins;
    margins.reserve(records.size());
    for (const auto& r : records) margins.push_back(r.margin);
    const DpoMetrics m = aggregate_metrics(records);
    return {.samples = records.size(),
            .test_accuracy = accuracy_from_margins(margins),
            .mean_loss = m.mean_loss,
            .mean_margin = m.mean_margin,
            .mean_chosen_reward = m.mean_chosen_reward,
            .mean_chosen_logp = m.mean_chosen_logp};
}

std::string evaluation_csv(const EvaluationSummary& s) {
    return fmt::format("samples,test_accuracy,mean_loss,mean_margin,mean_chosen_reward,mean_chosen_logp\n{},{},{},{},{},{}\n",
                       s.samples, num(s.test_accuracy), num(s.mean_loss), num(s.mean_margin),
                       num(s.mean_chosen_reward), num(s.mean_chosen_logp));
}

}  // namespace samslab
