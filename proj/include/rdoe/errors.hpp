#pragma once

#include <stdexcept>
#include <string>

namespace rdoe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model was evaluated where its closed form is undefined.
class SingularModelPoint : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Information matrix could not be inverted.
class SingularFim : public Error {
public:
    using Error::Error;
};

/// Every optimizer start produced a non-finite objective.
class AllStartsFailed : public Error {
public:
    using Error::Error;
};

/// Fewer scalar observations than unknown parameters.
class UnderdeterminedData : public Error {
public:
    using Error::Error;
};

/// Scenario tree violates weight consistency or allocation ordering.
class InconsistentTree : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rdoe
