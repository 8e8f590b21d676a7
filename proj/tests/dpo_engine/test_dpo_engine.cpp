// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/dpo.hpp"
#include "samslab/errors.hpp"
#include "samslab/harness/dataset.hpp"
#include "samslab/numeric/grad_check.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

using namespace samslab;
using namespace samslab::testing;

namespace {

double neg_log_sigmoid(double m) { return std::log1p(std::exp(-m)); }

struct Fixture {
    PolicyShape shape = small_policy_shape();
    PolicyParams policy;
    ReferencePolicy reference;
    std::vector<PreferenceSample> batch;

    explicit Fixture(std::uint64_t seed, std::size_t n = 12)
        : policy(random_policy(shape, seed)), reference(random_policy(shape, seed)) {
        jitter(policy, seed + 5, 0.1);
        std::mt19937_64 rng(seed);
        batch = random_batch(rng, shape, n);
    }
};

}  // namespace

TEST_SUITE("dpo_forward") {
    TEST_CASE("policy equal to reference gives margin 0 and loss ln 2") {
        const auto shape = small_policy_shape();
        const auto p = random_policy(shape, 1);
        const ReferencePolicy ref(p);
        std::mt19937_64 rng(1);
        const auto batch = random_batch(rng, shape, 10);
        for (const auto& r : dpo_forward(p, ref, batch, 0.1)) {
            CHECK(std::abs(r.margin) <= 1e-12);
            CHECK(std::abs(r.loss - std::log(2.0)) <= 1e-12);
        }
    }

    TEST_CASE("beta 0.1 with log-ratios +1 and -1 gives loss -ln sigmoid(0.2)") {
        const double loss = dpo_loss(0.1, -2.0, -6.0, -3.0, -5.0);
        CHECK(loss == doctest::Approx(0.598139).epsilon(1e-6));
        CHECK(std::abs(loss - neg_log_sigmoid(0.2)) < 1e-15);
    }

    TEST_CASE("loss falls monotonically to zero as the margin grows") {
        double prev = dpo_loss_from_margin(-50.0);
        for (double m = -49.0; m <= 800.0; m += 1.0) {
            const double l = dpo_loss_from_margin(m);
            CHECK(l <= prev);
            CHECK(l >= 0.0);
            prev = l;
        }
        CHECK(prev < 1e-300);
        CHECK(std::isfinite(dpo_loss_from_margin(-800.0)));
        CHECK(dpo_loss_from_margin(-800.0) == doctest::Approx(800.0));
    }

    TEST_CASE("records are internally consistent") {
        Fixture f(3, 20);
        const double beta = 0.25;
        const auto records = dpo_forward(f.policy, f.reference, f.batch, beta);
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            const auto lp = response_logps(f.policy, f.batch[i]);
            const auto rp = response_logps(f.reference.params(), f.batch[i]);
            CHECK(r.sample_id == f.batch[i].id);
            CHECK(std::abs(r.chosen_log_ratio - beta * (lp.chosen - rp.chosen)) < 1e-12);
            CHECK(std::abs(r.rejected_log_ratio - beta * (lp.rejected - rp.rejected)) < 1e-12);
            CHECK(r.margin == r.chosen_log_ratio - r.rejected_log_ratio);
            CHECK(std::abs(r.loss - neg_log_sigmoid(r.margin)) < 1e-12);
            CHECK(r.loss > 0.0);
            CHECK(std::abs(r.chosen_logp - lp.chosen) < 1e-12);
            CHECK(r.layer_states.rows() == static_cast<Eigen::Index>(f.shape.layers));
        }
        for (const auto& r : dpo_forward(f.policy, f.reference, f.batch, beta, {.layer_states = false})) {
            CHECK(r.layer_states.size() == 0);
        }
    }

    TEST_CASE("configuration errors") {
        Fixture f(4);
        const ReferencePolicy other(random_policy({.vocab = 7, .max_len = 10, .dim = 8, .layers = 3}, 1));
        CHECK_THROWS_AS(dpo_forward(f.policy, other, f.batch, 0.1), ConfigError);
        CHECK_THROWS_AS(dpo_forward(f.policy, f.reference, f.batch, 0.0), ConfigError);
        CHECK_THROWS_AS(dpo_forward(f.policy, f.reference, {}, 0.1), ContractViolation);
    }
}

TEST_SUITE("batch_dpo_loss") {
    TEST_CASE("identical losses average to themselves") {
        std::vector<DpoForwardRecord> rs(5);
        for (auto& r : rs) r.loss = 0.37;
        CHECK(batch_dpo_loss(rs) == doctest::Approx(0.37).epsilon(1e-15));
        std::vector<DpoForwardRecord> two(2);
        two[0].loss = two[1].loss = std::log(2.0);
        CHECK(batch_dpo_loss(two) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    }

    TEST_CASE("random records match a summation oracle to 1e-12") {
        Fixture f(5, 30);
        const auto records = dpo_forward(f.policy, f.reference, f.batch, 0.1);
        long double s = 0.0L;
        for (const auto& r : records) s += r.loss;
        CHECK(std::abs(batch_dpo_loss(records) - static_cast<double>(s / records.size())) < 1e-12);
    }

    TEST_CASE("empty input is a contract violation") { CHECK_THROWS_AS(batch_dpo_loss({}), ContractViolation); }
}

TEST_SUITE("dpo_update") {
    TEST_CASE("zero learning rate leaves parameters unchanged") {
        Fixture f(6);
        AdamOptimizer opt(AdamConfig{.learning_rate = 0.0});
        const auto before = f.policy.fingerprint();
        const std::vector<std::size_t> subset{0, 3, 5};
        dpo_update(f.policy, opt, f.batch, subset, f.reference, 0.1);
        CHECK(f.policy.fingerprint() == before);
    }

    TEST_CASE("full subset equals the plain full-batch step") {
        Fixture a(7), b(7);
        std::vector<std::size_t> all(a.batch.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        AdamOptimizer oa(AdamConfig{.learning_rate = 1e-2}), ob(AdamConfig{.learning_rate = 1e-2});
        dpo_update(a.policy, oa, a.batch, all, a.reference, 0.1);
        PolicyParams g(b.shape);
        dpo_subset_gradient(b.policy, b.reference, b.batch, all, 0.1, g);
        ob.step(b.policy.parameters(), std::as_const(g).parameters());
        CHECK(a.policy.fingerprint() == b.policy.fingerprint());
    }

    TEST_CASE("samples outside the subset never influence the update") {
        std::mt19937_64 rng(100);
        for (int trial = 0; trial < 20; ++trial) {
            Fixture f(200 + trial, 10);
            std::vector<std::size_t> subset;
            for (std::size_t i = 0; i < f.batch.size(); ++i) {
                if (std::bernoulli_distribution(0.5)(rng)) subset.push_back(i);
            }
            if (subset.empty()) subset.push_back(0);
            std::vector<PreferenceSample> only;
            for (std::size_t i : subset) only.push_back(f.batch[i]);
            std::vector<std::size_t> all(only.size());
            std::iota(all.begin(), all.end(), std::size_t{0});

            PolicyParams p1 = f.policy, p2 = f.policy;
            AdamOptimizer o1(AdamConfig{.learning_rate = 1e-2}), o2(AdamConfig{.learning_rate = 1e-2});
            const double l1 = dpo_update(p1, o1, f.batch, subset, f.reference, 0.1);
            const double l2 = dpo_update(p2, o2, only, all, f.reference, 0.1);
            CHECK(l1 == l2);
            CHECK(flatten(std::as_const(p1).parameters()) == flatten(std::as_const(p2).parameters()));
        }
    }

    TEST_CASE("returns the pre-step subset loss") {
        Fixture f(8);
        const std::vector<std::size_t> subset{1, 2, 7};
        const auto records = dpo_forward(f.policy, f.reference, f.batch, 0.1);
        const double expected = (records[1].loss + records[2].loss + records[7].loss) / 3.0;
        AdamOptimizer opt(AdamConfig{.learning_rate = 1e-2});
        CHECK(std::abs(dpo_update(f.policy, opt, f.batch, subset, f.reference, 0.1) - expected) < 1e-12);
        CHECK(opt.step_count() == 1);
    }

    TEST_CASE("subset gradient passes the finite-difference oracle") {
        Fixture f(9, 8);
        const std::vector<std::size_t> subset{0, 2, 3, 6};
        const double beta = 0.5;
        const DifferentiableObjective obj{[&] {
                                              const auto rs = dpo_forward(f.policy, f.reference, f.batch, beta,
                                                                          {.layer_states = false});
                                              double s = 0.0;
                                              for (std::size_t i : subset) s += rs[i].loss;
                                              return s / static_cast<double>(subset.size());
                                          },
                                          [&] {
                                              PolicyParams g(f.shape);
                                              dpo_subset_gradient(f.policy, f.reference, f.batch, subset, beta, g);
                                              return flatten(std::as_const(g).parameters());
                                          }};
        CHECK(finite_diff_check(obj, f.policy.parameters(), 128, 1e-5, 4).max_relative_error <= 1e-4);
    }

    TEST_CASE("empty or out-of-range subsets are contract violations") {
        Fixture f(10);
        AdamOptimizer opt;
        CHECK_THROWS_AS(dpo_update(f.policy, opt, f.batch, {}, f.reference, 0.1), ContractViolation);
        const std::vector<std::size_t> bad{f.batch.size()};
        CHECK_THROWS_AS(dpo_update(f.policy, opt, f.batch, bad, f.reference, 0.1), ContractViolation);
    }

    TEST_CASE("the reference is untouched by training") {
        Fixture f(11);
        const auto ref_hash = f.reference.fingerprint();
        AdamOptimizer opt(AdamConfig{.learning_rate = 1e-2});
        const std::vector<std::size_t> subset{0, 1, 2};
        for (int i = 0; i < 10; ++i) dpo_update(f.policy, opt, f.batch, subset, f.reference, 0.1);
        CHECK(f.reference.fingerprint() == ref_hash);
        for (const auto& s : f.batch) {
            const auto a = f.reference.logps(s);
            const auto b = response_logps(f.reference.params(), s);
            CHECK(a.chosen == b.chosen);
            CHECK(a.rejected == b.rejected);
        }
    }

    TEST_CASE("a reused sample id with new tokens is recomputed, not served from the cache") {
        const auto shape = small_policy_shape();
        const ReferencePolicy ref(random_policy(shape, 8));
        std::mt19937_64 rng(8);
        auto a = random_sample(rng, shape, 5);
        auto b = random_sample(rng, shape, 5);
        b.chosen.push_back(0);
        CHECK(ref.logps(a).chosen == response_logps(ref.params(), a).chosen);
        CHECK(ref.logps(b).chosen == response_logps(ref.params(), b).chosen);
        CHECK(ref.logps(a).rejected == response_logps(ref.params(), a).rejected);
    }
}

TEST_SUITE("test_accuracy") {
    TEST_CASE("policy equal to reference scores zero by the tie rule") {
        const auto shape = small_policy_shape();
        const auto p = random_policy(shape, 2);
        const ReferencePolicy ref(p);
        std::mt19937_64 rng(2);
        CHECK(test_accuracy(p, ref, random_batch(rng, shape, 25), 0.1) == 0.0);
    }

    TEST_CASE("margins {+1, +1, -1, 0} give one half") {
        const std::vector<double> m{1.0, 1.0, -1.0, 0.0};
        CHECK(accuracy_from_margins(m) == 0.5);
    }

    TEST_CASE("matches a per-sample recount") {
        Fixture f(12, 40);
        const auto records = dpo_forward(f.policy, f.reference, f.batch, 0.1);
        std::size_t wins = 0;
        for (const auto& r : records) wins += r.margin > 0.0 ? 1 : 0;
        CHECK(test_accuracy(f.policy, f.reference, f.batch, 0.1) == static_cast<double>(wins) / 40.0);
    }

    TEST_CASE("empty dataset is a contract violation") {
        Fixture f(13);
        CHECK_THROWS_AS(test_accuracy(f.policy, f.reference, {}, 0.1), ContractViolation);
    }

    TEST_CASE("full-batch DPO on clean separable data passes 0.9 accuracy") {
        double total = 0.0;
        const int seeds = 2;
        for (int seed = 0; seed < seeds; ++seed) {
            // Utility is a per-token sum, so equal response lengths make the
            // preference exactly representable by sequence log-probabilities.
            GeneratorSpec spec;
            spec.noise_rate = 0.0;
            spec.paired_lengths = true;
            spec.train_size = 400;
            spec.test_size = 200;
            spec.response_min = 3;
            spec.response_max = 6;
            spec.seed = static_cast<std::uint64_t>(40 + seed);
            const auto data = generate_dataset(spec);
            const PolicyShape shape{.vocab = spec.vocab, .max_len = 24, .dim = 16, .layers = 2};
            auto policy = random_policy(shape, 70 + static_cast<std::uint64_t>(seed));
            const ReferencePolicy ref(policy);
            std::vector<std::size_t> all(data.train.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            AdamOptimizer opt(AdamConfig{.learning_rate = 3e-3});
            for (int step = 0; step < 500; ++step) dpo_update(policy, opt, data.train, all, ref, 0.1);
            total += test_accuracy(policy, ref, data.test, 0.1);
        }
        CHECK(total / seeds > 0.9);
    }
}

TEST_SUITE("aggregate_metrics") {
    TEST_CASE("single record aggregates to its own fields") {
        DpoForwardRecord r;
        r.loss = 0.4;
        r.chosen_log_ratio = 0.3;
        r.rejected_log_ratio = -0.2;
        r.margin = 0.5;
        r.chosen_logp = -7.0;
        const std::vector<DpoForwardRecord> rs{r};
        const auto m = aggregate_metrics(rs);
        CHECK(m.mean_loss == 0.4);
        CHECK(m.mean_chosen_reward == 0.3);
        CHECK(m.mean_margin == 0.5);
        CHECK(m.mean_chosen_logp == -7.0);
    }

    TEST_CASE("policy equal to reference has zero mean chosen reward") {
        const auto shape = small_policy_shape();
        const auto p = random_policy(shape, 3);
        const ReferencePolicy ref(p);
        std::mt19937_64 rng(3);
        CHECK(std::abs(aggregate_metrics(dpo_forward(p, ref, random_batch(rng, shape, 9), 0.1)).mean_chosen_reward) <=
              1e-12);
    }

    TEST_CASE("two records match hand sums") {
        std::vector<DpoForwardRecord> rs(2);
        rs[0].loss = 1.0;
        rs[1].loss = 2.0;
        rs[0].chosen_log_ratio = 0.5;
        rs[1].chosen_log_ratio = -1.5;
        rs[0].chosen_logp = -3.0;
        rs[1].chosen_logp = -5.0;
        rs[0].margin = 0.25;
        rs[1].margin = 0.75;
        const auto m = aggregate_metrics(rs);
        CHECK(m.mean_loss == 1.5);
        CHECK(m.mean_chosen_reward == -0.5);
        CHECK(m.mean_chosen_logp == -4.0);
        CHECK(m.mean_margin == 0.5);
    }

    TEST_CASE("empty input is a contract violation") { CHECK_THROWS_AS(aggregate_metrics({}), ContractViolation); }
}
