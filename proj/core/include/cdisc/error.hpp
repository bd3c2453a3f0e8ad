#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdisc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or hyperparameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed on-disk artifact. Carries the index of the offending record
// (line, item or row) when one can be named, otherwise npos.
class FormatError : public Error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit FormatError(const std::string& what, std::size_t record = npos)
        : Error(record == npos ? what : what + " (record " + std::to_string(record) + ")"),
          record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

// A precondition on the input data was violated (empty description,
// degenerate feature, empty support, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int epoch)
        : Error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

// An upstream artifact needed by a pipeline stage does not exist.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

// Artifacts were produced from different vocabularies or configurations.
class HashMismatchError : public Error {
public:
    using Error::Error;
};

// Lookup of an unknown id (item, attribute, concept).
class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace cdisc
