#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace kaczmarz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (sizes, ranges, parameters).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent solver / experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed Matrix Market input. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), path_(std::move(path)), line_(line)
    {
    }

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// File system failures, always naming the path involved.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace kaczmarz
