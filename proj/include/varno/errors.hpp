#pragma once
// Error taxonomy shared across the library.

#include <stdexcept>
#include <string>

namespace varno {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller passed values that violate a documented precondition.
struct InvalidArgument : Error {
    using Error::Error;
};

// Underlying filesystem failure (open/read/write).
struct IoError : Error {
    using Error::Error;
};

// Serialized data is structurally broken.
struct FormatError : Error {
    using Error::Error;
};
struct BadMagicError : FormatError {
    using FormatError::FormatError;
};
struct BadVersionError : FormatError {
    using FormatError::FormatError;
};
struct TruncatedError : FormatError {
    using FormatError::FormatError;
};

// A numeric procedure left its admissible region (divergence, non-finite loss).
struct NumericError : Error {
    using Error::Error;
};

}  // namespace varno
