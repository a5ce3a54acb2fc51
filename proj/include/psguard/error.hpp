#pragma once

#include <stdexcept>
#include <string>

namespace psguard {

/// Raised for invalid input data or violated preconditions. The CLI maps it
/// to exit status 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace psguard
