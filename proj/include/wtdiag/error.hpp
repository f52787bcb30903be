#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wtdiag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the physical or mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Cable or network geometry that cannot be evaluated.
class GeometryError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

/// Configuration or command-line value rejected by validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Base for persisted-file decoding failures.
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

/// A record that is structurally incomplete or unparsable.
class TruncatedRecordError : public FormatError {
public:
    TruncatedRecordError(std::size_t record, const std::string& what)
        : FormatError("record " + std::to_string(record) + ": " + what), record_(record) {}
    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

class ChecksumError : public FormatError {
public:
    ChecksumError(std::size_t record, const std::string& what)
        : FormatError("record " + std::to_string(record) + ": " + what), record_(record) {}
    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

/// Training set too small for its feature count, or otherwise unfit for training.
class InsufficientSamplesError : public Error {
public:
    using Error::Error;
};

class MissingObservationError : public Error {
public:
    using Error::Error;
};

class LocalizationUnavailableError : public Error {
public:
    using Error::Error;
};

/// More than one modem reported a localized degradation.
class AmbiguousDiagnosisError : public Error {
public:
    AmbiguousDiagnosisError(const std::string& what, std::vector<bool> votes)
        : Error(what), votes_(std::move(votes)) {}
    const std::vector<bool>& votes() const noexcept { return votes_; }

private:
    std::vector<bool> votes_;
};

}  // namespace wtdiag
