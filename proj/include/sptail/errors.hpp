#pragma once

#include <stdexcept>
#include <string>

namespace sptail {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// No observation exceeds the threshold for the requested conditioning.
class NoExceedances : public Error {
public:
    explicit NoExceedances(const std::string& msg = "no exceedances over threshold") : Error(msg) {}
};

/// Invalid or out-of-domain parameters.
class InvalidParams : public Error {
public:
    explicit InvalidParams(const std::string& msg) : Error(msg) {}
};

/// Tail index must be strictly positive.
class InvalidAlpha : public Error {
public:
    explicit InvalidAlpha(const std::string& msg = "tail index alpha must be > 0") : Error(msg) {}
};

/// Log-excess sum degenerated to zero (all exceedances at the threshold).
class DegenerateLogs : public Error {
public:
    explicit DegenerateLogs(const std::string& msg = "degenerate log-excess sum") : Error(msg) {}
};

/// A weighted bootstrap denominator collapsed to zero (or below).
class ZeroDenominator : public Error {
public:
    explicit ZeroDenominator(const std::string& msg = "zero or nonpositive bootstrap denominator")
        : Error(msg) {}
};

/// Not enough bootstrap replicates to form quantiles.
class TooFewReplicates : public Error {
public:
    explicit TooFewReplicates(const std::string& msg = "need at least 2 bootstrap replicates")
        : Error(msg) {}
};

/// More than the tolerated share of bootstrap replicates had to be discarded.
class TooManyDiscards : public Error {
public:
    explicit TooManyDiscards(const std::string& msg) : Error(msg) {}
};

/// Exceedance-count ratio for the rescaled interval must be positive.
class InvalidRatio : public Error {
public:
    explicit InvalidRatio(const std::string& msg = "exceedance-count ratio must be > 0")
        : Error(msg) {}
};

/// Optimizer failed to converge within the iteration cap.
class NoConvergence : public Error {
public:
    explicit NoConvergence(const std::string& msg) : Error(msg) {}
};

/// Input data carries no usable variation.
class DegenerateData : public Error {
public:
    explicit DegenerateData(const std::string& msg) : Error(msg) {}
};

/// Malformed input file; carries the offending location.
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what_failed)
        : Error(file + ":" + std::to_string(line) + ": " + what_failed), file_(file), line_(line) {}

    [[nodiscard]] const std::string& file() const noexcept { return file_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// Input series too short for the requested operation.
class TooShort : public Error {
public:
    explicit TooShort(const std::string& msg) : Error(msg) {}
};

}  // namespace sptail
