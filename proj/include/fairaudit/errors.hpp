#pragma once

#include <stdexcept>
#include <string>

namespace fairaudit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A supplied value violates a field-level contract (empty text, bad range, ...).
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& msg)
        : Error(msg), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// A data file violates structural integrity (duplicate ids, unknown references,
/// malformed records). Carries the offending line when known (0 = not line based).
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& msg, std::size_t line = 0)
        : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Normalized gateway failure taxonomy. Every provider failure maps onto
/// exactly one of these kinds before leaving the gateway module.
enum class GatewayErrorKind {
    Auth,
    RateLimited,
    Timeout,
    MalformedResponse,
    Config,
};

class GatewayError : public Error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& msg, int attempts = 1)
        : Error(msg), kind_(kind), attempts_(attempts) {}

    GatewayErrorKind kind() const { return kind_; }
    int attempts() const { return attempts_; }
    bool retryable() const {
        return kind_ == GatewayErrorKind::RateLimited || kind_ == GatewayErrorKind::Timeout;
    }

private:
    GatewayErrorKind kind_;
    int attempts_;
};

/// Failure modes of evaluator-output parsing.
enum class EvalParseErrorKind {
    NoScore,     // no extraction rule succeeded
    OutOfRange,  // an integer was extracted but lies outside 1..5
    Ambiguous,   // two distinct scores match the primary grammar
};

class EvalParseError : public Error {
public:
    EvalParseError(EvalParseErrorKind kind, const std::string& msg)
        : Error(msg), kind_(kind) {}

    EvalParseErrorKind kind() const { return kind_; }

private:
    EvalParseErrorKind kind_;
};

/// A statistic is undefined for the given input (empty, constant, length
/// mismatch, empty join). Never silently reported as zero.
class StatsError : public Error {
public:
    using Error::Error;
};

}  // namespace fairaudit
