// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace samslab {

// Dimension mismatch between a tensor and the layer or op consuming it.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (empty batch, K = 0, h = 0, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// NaN/Inf encountered where a finite value is required.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid hyperparameter or incompatible model pair.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed data: out-of-vocabulary tokens, bad dataset rows.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong phase of a run.
class LifecycleError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace samslab
