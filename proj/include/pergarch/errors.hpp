#pragma once

#include <stdexcept>
#include <string>

namespace pergarch {

/// Invalid or inconsistent experiment/model configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulated quantity violated an invariant it must satisfy (e.g. V < 0).
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fixed-point solve was requested for a model that is not (second-order) stationary.
class StationarityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition of an estimator is not met by the model.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The requested analysis is not implemented for this model class.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pergarch
