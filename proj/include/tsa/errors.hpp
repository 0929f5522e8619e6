#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsa {

/// Invalid user configuration (bad field, unit, or range). Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A numerical procedure failed to meet its tolerance. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), history_(std::move(history))
    {
    }
    /// Partial sums, residuals, or error estimates leading up to the failure.
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

} // namespace tsa
