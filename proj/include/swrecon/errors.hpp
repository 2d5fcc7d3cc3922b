#pragma once

#include <stdexcept>
#include <string>

namespace swrecon {

// Process exit codes used by the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitNumericError = 3,
    kExitSegmentationError = 4,
};

/// Bad configuration, malformed files, shape mismatches.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values, overflow, failed regressions.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Forward solve escaped the divergence guard.
class BlowUpError : public NumericError {
  public:
    BlowUpError(const std::string& msg, double when) : NumericError(msg), time(when) {}
    double time;  // first offending instant
};

/// Cluster ordering / anchoring failures.
class SegmentationError : public std::runtime_error {
  public:
    explicit SegmentationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace swrecon
