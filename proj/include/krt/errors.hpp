#pragma once

#include <stdexcept>
#include <string>

namespace krt {

// Malformed configuration or violated precondition on user input.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace krt
