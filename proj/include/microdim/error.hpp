#pragma once

#include <stdexcept>
#include <string>

namespace microdim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed arguments, inconsistent files, infeasible specs.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A computation left the finite domain (divergence, degenerate fit).
class NumericalError : public Error {
public:
    using Error::Error;
};

enum class DatasetErrorKind {
    Io,
    MissingFile,
    Malformed,
    SizeMismatch,
    InvalidPixel,
};

const char* to_string(DatasetErrorKind kind);

/// Raised by dataset load/save; carries the offending path.
class DatasetError : public ValidationError {
public:
    DatasetError(DatasetErrorKind kind, std::string path, const std::string& what)
        : ValidationError(std::string(to_string(kind)) + ": " + what + " (" + path + ")"),
          kind_(kind),
          path_(std::move(path)) {}

    DatasetErrorKind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }

private:
    DatasetErrorKind kind_;
    std::string path_;
};

inline const char* to_string(DatasetErrorKind kind) {
    switch (kind) {
    case DatasetErrorKind::Io: return "io error";
    case DatasetErrorKind::MissingFile: return "missing file";
    case DatasetErrorKind::Malformed: return "malformed manifest";
    case DatasetErrorKind::SizeMismatch: return "size mismatch";
    case DatasetErrorKind::InvalidPixel: return "invalid pixel";
    }
    return "dataset error";
}

} // namespace microdim
