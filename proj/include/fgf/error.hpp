#pragma once

#include <stdexcept>
#include <string>

namespace fgf {

/// Process exit codes used by the command line driver.
enum class ExitCode : int { ok = 0, config = 2, data = 3, runtime = 4 };

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ExitCode code = ExitCode::runtime)
        : std::runtime_error(what), code_(code) {}

    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("configuration error: " + what, ExitCode::config) {}
};

/// Malformed input: feeds, record files, embedding tables, edge lists.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error("parse error: " + what, ExitCode::data) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error("validation error: " + what, ExitCode::data) {}
};

struct AssemblyError : Error {
    explicit AssemblyError(const std::string& what) : Error("assembly error: " + what, ExitCode::data) {}
};

/// A stage input (usually an upstream artifact) does not exist.
struct MissingInputError : Error {
    explicit MissingInputError(const std::string& what) : Error("missing input: " + what, ExitCode::data) {}
};

struct TransportError : Error {
    explicit TransportError(const std::string& what) : Error("transport error: " + what, ExitCode::runtime) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("i/o error: " + what, ExitCode::runtime) {}
};

/// Numerical routines reject inputs outside their domain.
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("domain error: " + what, ExitCode::runtime) {}
};

} // namespace fgf
