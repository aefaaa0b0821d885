#include "gkdv/ode.hpp"

#include <algorithm>
#include <cmath>

#include "gkdv/errors.hpp"

namespace gkdv {

namespace {
// Butcher tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// dense output
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace

OdeState DenseStep::operator()(double t) const {
    const double h = t1 - t0;
    const double th = (t - t0) / h, th1 = 1.0 - th;
    OdeState y(rc_[0].size());
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = rc_[0][i] + th * (rc_[1][i] + th1 * (rc_[2][i] + th * (rc_[3][i] + th1 * rc_[4][i])));
    return y;
}

OdeResult DormandPrince::integrate(const OdeRhs& f, double t0, OdeState y, double t1, const StepObserver& obs) const {
    const std::size_t n = y.size();
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    OdeState k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y1(n);
    OdeResult res;
    double t = t0;
    f(t, y, k1);

    auto err_norm = [&](const OdeState& a, const OdeState& b, const OdeState& e) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sc = opt_.atol + opt_.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
            s += (e[i] / sc) * (e[i] / sc);
        }
        return std::sqrt(s / double(n));
    };

    double h = opt_.h0;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic, first-order version
        double d0 = 0, dd = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double sc = opt_.atol + opt_.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            dd += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / n);
        dd = std::sqrt(dd / n);
        h = (d0 < 1e-5 || dd < 1e-5) ? 1e-6 : 0.01 * d0 / dd;
        h = std::min(h, std::abs(t1 - t0));
    }
    h = std::abs(h);

    DenseStep dense;
    dense.rc_.assign(5, OdeState(n));
    bool last = false;
    while (!last) {
        if (res.steps + res.rejected >= opt_.max_steps) throw Error(ErrorKind::StepFailure, "too many steps");
        double hmin = opt_.h_min_rel * std::max(1.0, std::abs(t));
        if (h < hmin) throw Error(ErrorKind::StepFailure, "step size underflow at t = " + std::to_string(t));
        if ((t + dir * h - t1) * dir >= 0.0) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hs * a21 * k1[i];
        f(t + c2 * hs, yt, k2);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * hs, yt, k3);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * hs, yt, k4);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * hs, yt, k5);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double tn = last ? t1 : t + hs;
        f(tn, yt, k6);
        for (std::size_t i = 0; i < n; ++i)
            y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(tn, y1, k7);
        OdeState e(n);
        for (std::size_t i = 0; i < n; ++i)
            e[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        double err = err_norm(y, y1, e);
        if (!std::isfinite(err)) err = 1e10;

        if (err <= 1.0) {
            dense.t0 = t;
            dense.t1 = tn;
            for (std::size_t i = 0; i < n; ++i) {
                double ydiff = y1[i] - y[i];
                double bspl = hs * k1[i] - ydiff;
                dense.rc_[0][i] = y[i];
                dense.rc_[1][i] = ydiff;
                dense.rc_[2][i] = bspl;
                dense.rc_[3][i] = ydiff - hs * k7[i] - bspl;
                dense.rc_[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            t = tn;
            y.swap(y1);
            k1.swap(k7);  // FSAL
            ++res.steps;
            if (obs && !obs(dense, y)) {
                res.stopped = true;
                break;
            }
            double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 10.0;
            h *= std::clamp(fac, 0.2, 10.0);
        } else {
            ++res.rejected;
            last = false;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
    res.t = t;
    res.y = y;
    return res;
}

}  // namespace gkdv
