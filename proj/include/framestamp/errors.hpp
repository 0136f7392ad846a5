#pragma once

#include <stdexcept>
#include <string>

namespace framestamp {

// Base of every error raised by the library. kind() is a short stable tag
// used by the CLI when it reports failures on a single line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error("parse", what) {}
};

struct GenerationError : Error {
    explicit GenerationError(const std::string& what) : Error("generation", what) {}
};

struct EvaluationError : Error {
    explicit EvaluationError(const std::string& what) : Error("evaluation", what) {}
};

struct TrainingError : Error {
    explicit TrainingError(const std::string& what) : Error("training", what) {}
};

}  // namespace framestamp
