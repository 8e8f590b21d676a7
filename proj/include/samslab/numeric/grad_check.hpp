// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "samslab/numeric/dense.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace samslab {

// A scalar objective over a set of parameter blocks. `loss` must read the
// current contents of the blocks; `gradient` returns the analytic gradient at
// the current contents, flattened in block order.
struct DifferentiableObjective {
    std::function<double()> loss;
    std::function<std::vector<double>()> gradient;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t probes = 0;
};

// Central-difference check on `probe_count` randomly chosen coordinates (all
// coordinates when probe_count >= parameter count). The error at a coordinate is
// |analytic - numeric| / max(|analytic|, |numeric|), or the absolute error when
// that denominator is below 1e-8. Parameters are restored before returning.
GradCheckReport finite_diff_check(const DifferentiableObjective& objective, const ParamList& params,
                                  std::size_t probe_count, double step, std::uint64_t seed);

}  // namespace samslab
