#pragma once

#include <stdexcept>
#include <string>

namespace finedesign {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input, broken invariant, or precondition violation. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite loss or gradient during training. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace finedesign
