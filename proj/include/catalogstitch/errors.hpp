#pragma once

#include <stdexcept>
#include <string>

namespace catalogstitch {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File missing, unreadable, or unwritable.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input file exists but is not an 8-bit PNG of a supported color type.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A mask operation required at least one foreground pixel.
class EmptyMaskError : public Error {
public:
    using Error::Error;
};

/// Two buffers that must share dimensions (or channel count) do not.
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

/// An aspect ratio passed to a metric was <= 0.
class NonPositiveRatioError : public Error {
public:
    using Error::Error;
};

/// Difference-based object localisation found no pixel above threshold.
class NoObjectFoundError : public Error {
public:
    using Error::Error;
};

/// External backend exited nonzero, crashed, or left outputs missing.
class BackendFailure : public Error {
public:
    using Error::Error;
};

/// Backend produced output that violates its stage contract.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Dataset root has no index.json.
class IndexMissingError : public Error {
public:
    using Error::Error;
};

/// index.json is malformed; message names the offending field.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// index.json references a file that does not exist.
class DanglingPathError : public Error {
public:
    using Error::Error;
};

} // namespace catalogstitch
