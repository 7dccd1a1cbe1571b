#pragma once

#include <stdexcept>
#include <string>

namespace aed {

/// Numeric failure during training/inference (non-finite loss or gradient).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing or malformed data files, checkpoint format problems.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace aed
