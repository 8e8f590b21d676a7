// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/numeric/dense.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace samslab {

ConstParamList as_const(const ParamList& params) {
    ConstParamList out;
    out.reserve(params.size());
    for (const auto& p : params) out.emplace_back(p.data(), p.size());
    return out;
}

std::size_t total_size(const ParamList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.size();
    return n;
}

std::vector<double> flatten(const ConstParamList& params) {
    std::vector<double> out;
    for (const auto& p : params) out.insert(out.end(), p.begin(), p.end());
    return out;
}

void fill_zero(const ParamList& params) {
    for (const auto& p : params) std::fill(p.begin(), p.end(), 0.0);
}

bool all_finite(const ConstParamList& params) {
    for (const auto& p : params) {
        for (double x : p) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

std::uint64_t fingerprint(const ConstParamList& params) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : params) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
        for (std::size_t i = 0; i < p.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace samslab
