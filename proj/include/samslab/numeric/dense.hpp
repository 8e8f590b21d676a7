// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace samslab {

// Row-major so that a matrix's storage is exactly the rows x cols layout used
// by the checkpoint format.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A model exposes its trainable tensors as an ordered list of flat views. The
// gradient of a model is an object of the same type, so the two lists line up
// index by index.
using ParamList = std::vector<std::span<double>>;
using ConstParamList = std::vector<std::span<const double>>;

inline std::span<double> flat(DenseMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> flat(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> flat(const DenseMatrix& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> flat(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Eigen::Map<const Vector> as_vector(std::span<const double> s) {
    return {s.data(), static_cast<Eigen::Index>(s.size())};
}

ConstParamList as_const(const ParamList& params);

std::size_t total_size(const ParamList& params);

// Copies every block of `params` into one contiguous vector.
std::vector<double> flatten(const ConstParamList& params);

void fill_zero(const ParamList& params);

bool all_finite(const ConstParamList& params);

// FNV-1a over the raw bytes of every block; used to prove a model is untouched.
std::uint64_t fingerprint(const ConstParamList& params);

}  // namespace samslab
