#pragma once

#include <stdexcept>
#include <string>

namespace mqnmr {

// Invalid user input: a parameter outside its domain, a malformed grid.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mqnmr
