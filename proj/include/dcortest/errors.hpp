#pragma once

#include <stdexcept>
#include <string>

namespace dcortest {

// Sample lengths disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Too few observations for the requested estimator.
class SizeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Invalid distribution or test parameter.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Correlation matrix cannot be inverted.
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data contains non-finite values or cannot be parsed.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dcortest
