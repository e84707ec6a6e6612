#pragma once

#include <stdexcept>
#include <string>

namespace mhrag {

/// Broad failure class. The CLI maps each kind onto its exit code.
enum class ErrorKind {
    Input,           // malformed or invalid input data
    MissingArtifact, // an index, pack or file that should exist does not
    Provider,        // a pluggable model provider failed
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(const std::string& what) : Error(ErrorKind::MissingArtifact, what) {}
};

class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what) : Error(ErrorKind::Provider, what) {}
};

/// Parse failure tied to a line of a line-oriented file (1-based line).
class ParseError : public InputError {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : InputError(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}
    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace mhrag
