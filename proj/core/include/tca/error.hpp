// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tca {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (matmul inner dims, row-distance shapes, ...).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Out-of-range hyperparameter (sigma <= 0, M < 2, non power-of-two block, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation was violated at runtime, e.g. an empty
/// visible key set or an out-of-order decode position.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Head configuration table does not cover the inputs it is applied to.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem or serialization failure. Messages carry the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tca
