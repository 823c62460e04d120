#pragma once

#include <stdexcept>
#include <string>

namespace gallat {

// Shape disagreement between operands (message names both shapes).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A caller violated a documented precondition.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// A target slot's channel sequences would index before the first
// available snapshot. Callers typically skip such targets.
struct InsufficientHistoryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input content (bad header, unparseable row, ...).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gallat
