// common.hpp - scalar aliases, unit conversion and error types shared by all modules

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wsf {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Frequencies and rates are stored as angular frequencies in rad/ns. Input files
// quote them in GHz meaning "times 2*pi rad/ns"; convert only at that boundary.
constexpr double from_ghz(double f) { return two_pi * f; }
constexpr double to_ghz(double w) { return w / two_pi; }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

// Raised by the non-degenerate perturbative branch when two bare levels are
// closer than the degeneracy threshold.
class DegenerateSpectrumError : public Error {
public:
    using Error::Error;
};

// Warnings go to stderr by default; tests may install a handler.
void warn(const std::string& message);
void set_warning_handler(void (*handler)(const std::string&));
// Emits `message` only the first time `key` is seen in this process.
void warn_once(const std::string& key, const std::string& message);

} // namespace wsf
