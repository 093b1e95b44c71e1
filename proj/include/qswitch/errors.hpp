#pragma once

#include <stdexcept>
#include <string>

namespace qswitch {

/// Malformed input: bad config, bad scenario file, out-of-range argument.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A materialization or solver size guard was hit.
class CapacityExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A policy was asked to run outside the regime it is defined for
/// (e.g. MEW2 with an odd number of memories).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace qswitch
