// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hodgegp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed simplicial complex: dangling references, duplicates, missing faces.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation's precondition (wrong degree, bad rate, bad ratio).
class UsageError : public Error {
public:
    using Error::Error;
};

/// A file could not be ingested.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// A synthetic generator could not satisfy its request.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Factorization failure, non-convergence, NaN losses, non-PSD kernels.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An eigenvector that is neither gradient, curl nor harmonic. The degenerate
/// eigenspace it belongs to has to be re-diagonalized by projecting onto
/// im(B1^T) and im(B2).
class ClassificationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace hodgegp
