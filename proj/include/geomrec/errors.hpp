#pragma once

#include <stdexcept>
#include <string>

namespace geomrec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (delta outside (0,1), m < 2, alpha outside (0,1), ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. x <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// No record above the threshold has been observed, or no blocks to estimate from.
class EmptySampleError : public Error {
public:
    using Error::Error;
};

/// The practical MLE does not exist (single block with no index information).
class MleNonexistenceError : public Error {
public:
    using Error::Error;
};

/// The sample carries no information (zero log-sum, constant series, ...).
class DegenerateSampleError : public Error {
public:
    using Error::Error;
};

/// Record values are not strictly increasing where the estimator needs them to be.
class OrderingError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A Monte Carlo trial exceeded its observation budget.
class TrialAbortError : public Error {
public:
    using Error::Error;
};

/// Every replication of a cell failed.
class AggregationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace geomrec
