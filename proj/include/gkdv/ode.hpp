#pragma once
#include <functional>
#include <vector>

namespace gkdv {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(double t, const OdeState& y, OdeState& dydt)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-14;
    double h0 = 0.0;          // 0: pick from the first derivative
    double h_min_rel = 1e-14; // minimum step relative to |t|
    long max_steps = 10'000'000;
};

// Continuous extension of one accepted Dormand-Prince step.
class DenseStep {
public:
    double t0 = 0.0, t1 = 0.0;
    OdeState operator()(double t) const;

private:
    friend class DormandPrince;
    std::vector<OdeState> rc_;
};

// Observer sees every accepted step; return false to stop the integration there.
using StepObserver = std::function<bool(const DenseStep& step, const OdeState& y1)>;

struct OdeResult {
    double t = 0.0;
    OdeState y;
    long steps = 0, rejected = 0;
    bool stopped = false;  // observer asked to stop
};

// Explicit Runge-Kutta 5(4) of Dormand & Prince with the standard 4th-order dense output.
class DormandPrince {
public:
    explicit DormandPrince(OdeOptions opt = {}) : opt_(opt) {}
    OdeResult integrate(const OdeRhs& f, double t0, OdeState y0, double t1, const StepObserver& obs = nullptr) const;

private:
    OdeOptions opt_;
};

}  // namespace gkdv
