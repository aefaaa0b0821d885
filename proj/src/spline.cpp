#include "gkdv/spline.hpp"

#include <algorithm>
#include <cmath>

#include "gkdv/errors.hpp"

namespace gkdv {

UniformSpline::UniformSpline(double x0, double h, std::vector<double> y)
    : x0_(x0), h_(h), y_(std::move(y)) {
    const std::size_t n = y_.size();
    if (n < 4 || !(h > 0))
        throw Error(ErrorKind::InvalidArgument, "spline needs >= 4 nodes and h > 0");
    m_.assign(n, 0.0);
    // Thomas algorithm for m_{i-1} + 4 m_i + m_{i+1} = 6 (y_{i-1} - 2y_i + y_{i+1}) / h^2
    std::vector<double> c(n, 0.0), d(n, 0.0);
    const double s = 6.0 / (h * h);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double rhs = s * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]);
        double denom = 4.0 - (i > 1 ? c[i - 1] : 0.0);
        c[i] = 1.0 / denom;
        d[i] = (rhs - (i > 1 ? d[i - 1] : 0.0)) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = d[i] - c[i] * m_[i + 1];
        if (i == 1) break;
    }
}

double UniformSpline::operator()(double x) const {
    const std::size_t n = y_.size();
    double t = (x - x0_) / h_;
    std::size_t i = std::size_t(std::clamp(std::floor(t), 0.0, double(n - 2)));
    double a = t - double(i);
    double b = 1.0 - a;
    return b * y_[i] + a * y_[i + 1] +
           h_ * h_ / 6.0 * ((b * b * b - b) * m_[i] + (a * a * a - a) * m_[i + 1]);
}

double UniformSpline::derivative(double x) const {
    const std::size_t n = y_.size();
    double t = (x - x0_) / h_;
    std::size_t i = std::size_t(std::clamp(std::floor(t), 0.0, double(n - 2)));
    double a = t - double(i);
    double b = 1.0 - a;
    return (y_[i + 1] - y_[i]) / h_ +
           h_ / 6.0 * ((1.0 - 3.0 * b * b) * m_[i] + (3.0 * a * a - 1.0) * m_[i + 1]);
}

}  // namespace gkdv
