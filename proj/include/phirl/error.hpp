#pragma once

#include <stdexcept>
#include <string>

namespace phirl {

// Raised for invalid inputs, violated preconditions and malformed bundles.
// Anything else escaping the library is treated as an internal error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace phirl
