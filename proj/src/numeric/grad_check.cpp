// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/numeric/grad_check.hpp"

#include "samslab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace samslab {

namespace {

double* coordinate(const ParamList& params, std::size_t flat_index) {
    for (const auto& block : params) {
        if (flat_index < block.size()) return block.data() + flat_index;
        flat_index -= block.size();
    }
    return nullptr;
}

}  // namespace

GradCheckReport finite_diff_check(const DifferentiableObjective& objective, const ParamList& params,
                                  std::size_t probe_count, double step, std::uint64_t seed) {
    if (!(step > 0.0) || !std::isfinite(step)) throw ContractViolation("finite difference step must be positive");
    if (probe_count == 0) throw ContractViolation("finite difference check needs at least one probe");
    const std::size_t n = total_size(params);
    if (n == 0) throw ContractViolation("finite difference check over an empty parameter set");

    const std::vector<double> analytic = objective.gradient();
    if (analytic.size() != n) {
        throw ShapeError("analytic gradient has " + std::to_string(analytic.size()) + " entries, parameters have " +
                         std::to_string(n));
    }

    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (probe_count < n) {
        std::mt19937_64 rng(seed);
        // Partial Fisher-Yates: the first probe_count entries become a uniform sample.
        for (std::size_t i = 0; i < probe_count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(coords[i], coords[pick(rng)]);
        }
        coords.resize(probe_count);
    }

    GradCheckReport report;
    report.probes = coords.size();
    for (std::size_t c : coords) {
        double* p = coordinate(params, c);
        const double saved = *p;
        *p = saved + step;
        const double up = objective.loss();
        *p = saved - step;
        const double down = objective.loss();
        *p = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericalError("non-finite loss while probing coordinate " + std::to_string(c));
        }
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max(std::abs(analytic[c]), std::abs(numeric));
        const double abs_err = std::abs(analytic[c] - numeric);
        const double err = denom < 1e-8 ? abs_err : abs_err / denom;
        if (err >= report.max_relative_error) {
            report.max_relative_error = err;
            report.worst_coordinate = c;
            report.worst_analytic = analytic[c];
            report.worst_numeric = numeric;
        }
    }
    return report;
}

}  // namespace samslab
