#pragma once

#include <stdexcept>
#include <string>

namespace wdncnn {

// Error taxonomy shared by every module. The CLI maps these onto its exit
// codes: ConfigError -> 1, NumericError -> 3, everything else here -> 2.

// Tensor/operand shapes do not line up.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A value is outside its documented domain (sigma range, weights, sizes).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A named thing (filter bank, parameter, column) does not exist.
struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stored data is damaged or inconsistent (checkpoints, filter tables).
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation produced non-finite values or cannot proceed numerically.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// User-supplied configuration is malformed or contradictory.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File system / stream failure while reading or writing artifacts.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wdncnn
