#pragma once

#include <stdexcept>
#include <string>

namespace hjlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input or an unmet precondition (bad config, out-of-window query,
/// level below the admissible floor, window too small ...). Maps to exit code 2.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A mathematical invariant failed at runtime (bracket exit, certificate
/// mismatch, residual sign violation ...). Maps to exit code 1.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class BracketExit : public InvariantViolation {
public:
    using InvariantViolation::InvariantViolation;
};

class CertificateViolation : public InvariantViolation {
public:
    using InvariantViolation::InvariantViolation;
};

/// Raised when a glued bridge cannot satisfy its derivative/value bounds.
class BridgeBoundsViolation : public InvariantViolation {
public:
    using InvariantViolation::InvariantViolation;
};

class InstabilityError : public InvariantViolation {
public:
    using InvariantViolation::InvariantViolation;
};

/// Requested slope lies strictly inside the flat interval; no preimage exists.
class FlatPieceError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw PreconditionError(what);
}

}  // namespace hjlab
