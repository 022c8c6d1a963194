#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace siswe {

inline constexpr double kGravityDefault = 9.81;   // m/s^2
inline constexpr double kDryThreshold = 1e-8;     // m, wet-domain floor

enum class Model { SWE, SVE };

// Raised for malformed run configurations (CLI exit code 3).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when the numerics cannot proceed (CLI exit code 2).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DryCellError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SolverError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Fixed-size array with ghost slots on both ends, indexed from -ghost()
// to inner()+ghost()-1. Used for cell averages and staggered slot values.
class ExtArray {
public:
    ExtArray() = default;
    ExtArray(int n_inner, int n_ghost) { resize(n_inner, n_ghost); }

    void resize(int n_inner, int n_ghost) {
        data_.assign(static_cast<std::size_t>(n_inner + 2 * n_ghost), 0.0);
        ng_ = n_ghost;
    }

    double& operator[](int i) { return data_[static_cast<std::size_t>(i + ng_)]; }
    double operator[](int i) const { return data_[static_cast<std::size_t>(i + ng_)]; }

    int ghost() const { return ng_; }
    int inner() const { return static_cast<int>(data_.size()) - 2 * ng_; }

private:
    std::vector<double> data_;
    int ng_ = 0;
};

// 3-point Gauss-Legendre average of f over [a, b], exact through degree 5.
template <typename F>
double gauss3_average(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double r = std::sqrt(0.6);
    const double w0 = 8.0 / 9.0, w1 = 5.0 / 9.0;
    return 0.5 * (w1 * f(mid - half * r) + w0 * f(mid) + w1 * f(mid + half * r));
}

inline double sqr(double x) { return x * x; }

} // namespace siswe
