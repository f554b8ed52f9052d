#pragma once

#include <stdexcept>
#include <string>

namespace alaam {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or malformed input files.
class InputError : public Error {
public:
    using Error::Error;
};

// Invalid effect / model / configuration for the given data.
class ModelError : public Error {
public:
    using Error::Error;
};

// Observed statistics on the boundary of the attainable range: the MLE does not exist.
class NonExistenceError : public Error {
public:
    using Error::Error;
};

// Estimated statistic covariance is singular; message names the effects involved.
class SingularCovarianceError : public Error {
public:
    using Error::Error;
};

// Incrementally maintained statistics disagree with a from-scratch recount.
class KernelInconsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace alaam
