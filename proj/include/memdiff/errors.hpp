#pragma once

#include <stdexcept>
#include <string>

namespace memdiff {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, out-of-range parameters, H0 violation.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Fields living on different grids.
class GridMismatch : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

// Solver did not converge, produced non-finite values, or hit a singular system.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

// The requested construction does not exist for these parameters
// (no Hopf crossing, vanishing denominators, subcritical target, ...).
class Degenerate : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

}  // namespace memdiff
