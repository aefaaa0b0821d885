#pragma once
#include <cstddef>
#include <vector>

namespace gkdv {

// Natural cubic spline on a uniform grid x_i = x0 + i*h.
class UniformSpline {
public:
    UniformSpline() = default;
    UniformSpline(double x0, double h, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_begin() const { return x0_; }
    double x_end() const { return x0_ + h_ * double(y_.size() - 1); }
    bool empty() const { return y_.empty(); }

private:
    double x0_ = 0.0, h_ = 1.0;
    std::vector<double> y_, m_;  // values and second derivatives
};

}  // namespace gkdv
