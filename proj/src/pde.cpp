#include "gkdv/pde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>

#include "gkdv/errors.hpp"

namespace gkdv {

using cplx = std::complex<double>;

namespace {
std::mutex& planner_mutex() {  // FFTW planning is not thread-safe
    static std::mutex m;
    return m;
}
}  // namespace

std::vector<double> PeriodicGrid::nodes() const {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = this->x(j);
    return x;
}

void PeriodicGrid::validate() const {
    if (n < 16 || (n & (n - 1)) != 0) throw Error(ErrorKind::InvalidArgument, "periodic grid needs n a power of two >= 16");
    if (!(L > 0)) throw Error(ErrorKind::InvalidArgument, "periodic grid needs L > 0");
}

// ------------------------------------------------------------------ transforms

struct Spectral::Plans {
    fftw_plan fwd = nullptr, bwd = nullptr;
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;
    mutable std::mutex m;  // the buffers are shared
};

Spectral::Spectral(const PeriodicGrid& g) : n_(g.n), plans_(std::make_unique<Plans>()) {
    g.validate();
    k_.resize(n_ / 2 + 1);
    for (std::size_t j = 0; j < k_.size(); ++j) k_[j] = 2.0 * M_PI * double(j) / g.L;
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans_->rbuf = fftw_alloc_real(n_);
    plans_->cbuf = fftw_alloc_complex(n_ / 2 + 1);
    plans_->fwd = fftw_plan_dft_r2c_1d(int(n_), plans_->rbuf, plans_->cbuf, FFTW_ESTIMATE);
    plans_->bwd = fftw_plan_dft_c2r_1d(int(n_), plans_->cbuf, plans_->rbuf, FFTW_ESTIMATE);
}

Spectral::~Spectral() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plans_->fwd);
    fftw_destroy_plan(plans_->bwd);
    fftw_free(plans_->rbuf);
    fftw_free(plans_->cbuf);
}

void Spectral::forward(const std::vector<double>& u, std::vector<cplx>& uh) const {
    std::lock_guard<std::mutex> lock(plans_->m);
    std::memcpy(plans_->rbuf, u.data(), n_ * sizeof(double));
    fftw_execute(plans_->fwd);
    uh.resize(n_ / 2 + 1);
    std::memcpy(reinterpret_cast<void*>(uh.data()), plans_->cbuf, uh.size() * sizeof(fftw_complex));
}

void Spectral::backward(const std::vector<cplx>& uh, std::vector<double>& u) const {
    std::lock_guard<std::mutex> lock(plans_->m);
    std::memcpy(plans_->cbuf, reinterpret_cast<const void*>(uh.data()), uh.size() * sizeof(fftw_complex));
    fftw_execute(plans_->bwd);  // c2r destroys its input, which is our scratch copy
    u.resize(n_);
    const double s = 1.0 / double(n_);
    for (std::size_t j = 0; j < n_; ++j) u[j] = plans_->rbuf[j] * s;
}

std::vector<double> Spectral::derivative(const std::vector<double>& u, int order) const {
    std::vector<cplx> uh;
    forward(u, uh);
    const cplx ik(0.0, 1.0);
    for (std::size_t j = 0; j < uh.size(); ++j) {
        cplx f = std::pow(ik * k_[j], order);
        uh[j] *= f;
    }
    if (n_ % 2 == 0 && order % 2 == 1) uh[n_ / 2] = 0.0;  // Nyquist mode has no odd derivative
    std::vector<double> out;
    backward(uh, out);
    return out;
}

// ------------------------------------------------------------------ evolution

namespace {

class Stepper {
public:
    Stepper(const PeriodicGrid& g, const SolverOptions& opt) : sp_(g), opt_(opt) {
        const std::size_t m = sp_.modes();
        mask_.assign(m, 1.0);
        if (opt.dealias)
            for (std::size_t j = sp_.dealias_cutoff() + 1; j < m; ++j) mask_[j] = 0.0;
        kkept_ = opt.dealias ? sp_.k()[sp_.dealias_cutoff()] : sp_.k().back();
    }

    const Spectral& sp() const { return sp_; }
    double k_kept() const { return kkept_; }

    void apply_mask(std::vector<cplx>& uh) const {
        for (std::size_t j = 0; j < uh.size(); ++j) uh[j] *= mask_[j];
    }

    // -ik (u^5)^
    void nonlinear(const std::vector<cplx>& uh, std::vector<cplx>& out) {
        sp_.backward(uh, u_);
        for (double& x : u_) x = x * x * x * x * x;
        sp_.forward(u_, out);
        const auto& k = sp_.k();
        for (std::size_t j = 0; j < out.size(); ++j) out[j] *= cplx(0.0, -k[j]) * mask_[j];
    }

    void step(std::vector<cplx>& uh, double dt) {
        if (opt_.scheme == Scheme::IntegratingFactorRK4)
            step_ifrk4(uh, dt);
        else
            step_etdrk4(uh, dt);
    }

private:
    struct IFCoef {
        std::vector<cplx> E, E2;
    };
    struct ETDCoef {
        std::vector<cplx> E, E2, Q, f1, f2, f3;
    };

    const IFCoef& if_coef(double dt) {
        auto it = ifc_.find(dt);
        if (it != ifc_.end()) return it->second;
        IFCoef c;
        const auto& k = sp_.k();
        for (double kj : k) {
            cplx L(0.0, kj * kj * kj);
            c.E.push_back(std::exp(L * (dt / 2)));
            c.E2.push_back(std::exp(L * dt));
        }
        if (ifc_.size() > 64) ifc_.clear();
        return ifc_.emplace(dt, std::move(c)).first->second;
    }

    const ETDCoef& etd_coef(double h) {
        auto it = etdc_.find(h);
        if (it != etdc_.end()) return it->second;
        ETDCoef c;
        const int M = 64;  // contour points on a full circle (L is imaginary)
        for (double kj : sp_.k()) {
            cplx L(0.0, kj * kj * kj);
            cplx Lh = L * h;
            cplx q = 0, a = 0, b = 0, d = 0;
            for (int j = 0; j < M; ++j) {
                cplx z = Lh + std::exp(cplx(0.0, 2.0 * M_PI * (j + 0.5) / M));
                cplx ez = std::exp(z), ez2 = std::exp(z / 2.0), z3 = z * z * z;
                q += (ez2 - 1.0) / z;
                a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                b += (2.0 + z + ez * (z - 2.0)) / z3;
                d += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            c.E.push_back(std::exp(Lh));
            c.E2.push_back(std::exp(Lh / 2.0));
            c.Q.push_back(h * q / double(M));
            c.f1.push_back(h * a / double(M));
            c.f2.push_back(h * b / double(M));
            c.f3.push_back(h * d / double(M));
        }
        if (etdc_.size() > 16) etdc_.clear();
        return etdc_.emplace(h, std::move(c)).first->second;
    }

    void step_ifrk4(std::vector<cplx>& uh, double dt) {
        const IFCoef& c = if_coef(dt);
        const std::size_t m = uh.size();
        a_.resize(m);
        b_.resize(m);
        c_.resize(m);
        d_.resize(m);
        w_.resize(m);
        nonlinear(uh, a_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = c.E[j] * (uh[j] + dt / 2 * a_[j]);
        nonlinear(w_, b_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = c.E[j] * uh[j] + dt / 2 * b_[j];
        nonlinear(w_, c_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = c.E2[j] * uh[j] + dt * c.E[j] * c_[j];
        nonlinear(w_, d_);
        for (std::size_t j = 0; j < m; ++j)
            uh[j] = c.E2[j] * uh[j] + dt / 6 * (c.E2[j] * a_[j] + 2.0 * c.E[j] * (b_[j] + c_[j]) + d_[j]);
        apply_mask(uh);
    }

    void step_etdrk4(std::vector<cplx>& v, double h) {
        const ETDCoef& c = etd_coef(h);
        const std::size_t m = v.size();
        a_.resize(m);
        b_.resize(m);
        c_.resize(m);
        d_.resize(m);
        w_.resize(m);
        std::vector<cplx> av(m), bv(m), Nv(m);
        nonlinear(v, Nv);
        for (std::size_t j = 0; j < m; ++j) av[j] = c.E2[j] * v[j] + c.Q[j] * Nv[j];
        nonlinear(av, a_);
        for (std::size_t j = 0; j < m; ++j) bv[j] = c.E2[j] * v[j] + c.Q[j] * a_[j];
        nonlinear(bv, b_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = c.E2[j] * av[j] + c.Q[j] * (2.0 * b_[j] - Nv[j]);
        nonlinear(w_, c_);
        for (std::size_t j = 0; j < m; ++j)
            v[j] = c.E[j] * v[j] + Nv[j] * c.f1[j] + 2.0 * (a_[j] + b_[j]) * c.f2[j] + c_[j] * c.f3[j];
        apply_mask(v);
    }

    Spectral sp_;
    SolverOptions opt_;
    std::vector<double> mask_, u_;
    double kkept_ = 0.0;
    std::vector<cplx> a_, b_, c_, d_, w_;
    std::map<double, IFCoef> ifc_;
    std::map<double, ETDCoef> etdc_;
};

double max_abs(const std::vector<double>& u) {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

std::vector<Field> evolve(const Field& field, const std::vector<double>& output_times, const SolverOptions& opt,
                          EvolveStats* stats, const FieldObserver& obs) {
    field.grid.validate();
    if (field.u.size() != field.grid.n) throw Error(ErrorKind::InvalidArgument, "field size does not match its grid");
    if (output_times.empty() || !(output_times.front() > field.t))
        throw Error(ErrorKind::InvalidArgument, "output times must lie after the initial time");
    for (std::size_t i = 1; i < output_times.size(); ++i)
        if (!(output_times[i] > output_times[i - 1])) throw Error(ErrorKind::InvalidArgument, "output times must increase");
    for (double x : field.u)
        if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "non-finite field values");

    Stepper st(field.grid, opt);
    std::vector<cplx> uh;
    st.sp().forward(field.u, uh);
    st.apply_mask(uh);
    std::vector<double> u;
    st.sp().backward(uh, u);
    const double umax0 = std::max(max_abs(u), 1e-300);
    // RK4 stability reaches 2.8 on the imaginary axis
    constexpr double kStability = 2.8;

    EvolveStats es;
    es.dt_min = std::numeric_limits<double>::infinity();
    double t = field.t;
    std::vector<Field> out;
    for (double t_out : output_times) {
        while (t < t_out) {
            double umax = max_abs(u);
            double rate = st.k_kept() * 5.0 * std::pow(umax, 4);
            double dt;
            if (opt.dt > 0) {
                dt = opt.dt;
                if (dt * rate > kStability)
                    throw Error(ErrorKind::CFLViolation, "dt * k * 5|u|^4 = " + std::to_string(dt * rate));
            } else {
                double bound = rate > 0 ? opt.cfl / rate : opt.dt_max;
                // quantize to dt_max / 2^m so that the exponential factors can be reused
                dt = opt.dt_max;
                while (dt > bound) dt *= 0.5;
            }
            bool clamped = false;
            if (t + dt > t_out - 1e-3 * dt) {  // absorb sliver remainders into the last step
                dt = t_out - t;
                clamped = true;
            }
            st.step(uh, dt);
            t = clamped ? t_out : t + dt;
            st.sp().backward(uh, u);
            ++es.steps;
            if (!clamped) {
                es.dt_min = std::min(es.dt_min, dt);
                es.dt_max = std::max(es.dt_max, dt);
            }
            double m = max_abs(u);
            if (!std::isfinite(m) || m > opt.blowup_factor * umax0)
                throw Error(ErrorKind::BlowupDetected, "max|u| = " + std::to_string(m) + " at t = " + std::to_string(t));
        }
        Field f{t, field.grid, u};
        out.push_back(f);
        if (obs && !obs(out.back())) break;
    }
    if (!std::isfinite(es.dt_min)) es.dt_min = es.dt_max;
    if (stats) *stats = es;
    return out;
}

Field evolve(const Field& field, double t_end, const SolverOptions& opt, EvolveStats* stats) {
    return evolve(field, std::vector<double>{t_end}, opt, stats).back();
}

Conserved conserved(const Field& f) {
    Spectral sp(f.grid);
    std::vector<double> ux = sp.derivative(f.u, 1);
    const double h = f.grid.h();
    Conserved c;
    double e = 0.0;
    for (std::size_t j = 0; j < f.u.size(); ++j) {
        double u2 = f.u[j] * f.u[j];
        c.mass += u2;
        e += 0.5 * ux[j] * ux[j] - u2 * u2 * u2 / 6.0;
    }
    c.mass *= h;
    c.energy = e * h;
    return c;
}

// ------------------------------------------------------------------ bubbles

double Peak::lambda_hat() const {
    double r = eval_Q(0.0) / height;
    return r * r;
}

std::vector<Peak> fit_bubbles(const Field& f, int K) {
    const std::size_t n = f.u.size();
    const double h = f.grid.h();
    struct Cand {
        std::size_t i;
        double a;
    };
    std::vector<Cand> cand;
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::abs(f.u[(i + n - 1) % n]), b = std::abs(f.u[i]), c = std::abs(f.u[(i + 1) % n]);
        if (b > a && b >= c) cand.push_back({i, b});
    }
    std::sort(cand.begin(), cand.end(), [](const Cand& x, const Cand& y) { return x.a > y.a || (x.a == y.a && x.i < y.i); });
    std::vector<Peak> peaks;
    for (const Cand& c : cand) {
        if (int(peaks.size()) == K) break;
        const std::size_t i = c.i;
        double a = std::abs(f.u[(i + n - 1) % n]), b = std::abs(f.u[i]), d3 = std::abs(f.u[(i + 1) % n]);
        double den = a - 2.0 * b + d3;
        double del = den != 0.0 ? 0.5 * (a - d3) / den : 0.0;
        Peak p;
        p.position = f.grid.x(i) + del * h;
        p.height = std::copysign(b - 0.25 * (a - d3) * del, f.u[i]);
        // a bubble of height H has width ~ (Q(0)/H)^2; demand several widths of clearance
        bool separated = true;
        for (const Peak& q : peaks) {
            double w = std::max(p.lambda_hat(), q.lambda_hat());
            double dx = std::abs(p.position - q.position);
            dx = std::min(dx, f.grid.L - dx);
            if (dx < 5.0 * w) separated = false;
        }
        if (separated) peaks.push_back(p);
    }
    if (int(peaks.size()) < K)
        throw Error(ErrorKind::BubbleCountMismatch, "found " + std::to_string(peaks.size()) + " separated peaks");
    std::sort(peaks.begin(), peaks.end(), [](const Peak& x, const Peak& y) { return x.position < y.position; });
    return peaks;
}

// ------------------------------------------------------------------ frames

FramePoint to_rescaled(double t, double x) {
    if (!(t > 0)) throw Error(ErrorKind::InvalidArgument, "t must be positive");
    return {-1.0 / (2.0 * t * t), x / t};
}

FramePoint to_physical(double s, double y) {
    if (!(s < 0)) throw Error(ErrorKind::InvalidArgument, "s must be negative");
    double t = 1.0 / std::sqrt(-2.0 * s);
    return {t, y * t};
}

double amplitude_to_rescaled(double s, double u) { return std::pow(-2.0 * s, -0.25) * u; }
double amplitude_to_physical(double s, double ut) { return std::pow(-2.0 * s, 0.25) * ut; }

Field ansatz_field(const BubbleConfig& cfg, const ParamState& st, const PeriodicGrid& xg, const ProfileTable& prof,
                   const FieldOptions& opt) {
    xg.validate();
    const double t = 1.0 / std::sqrt(-2.0 * st.s);
    std::vector<double> y(xg.n);
    for (std::size_t j = 0; j < xg.n; ++j) y[j] = xg.x(j) / t;
    AnsatzField a = build_field(cfg, st, y, prof, opt);
    Field f;
    f.t = t;
    f.grid = xg;
    f.u.resize(xg.n);
    for (std::size_t j = 0; j < xg.n; ++j) f.u[j] = amplitude_to_physical(st.s, a.v[j]);
    return f;
}

// ------------------------------------------------------------------ residual

ResidualResult residual(const BubbleConfig& cfg, const std::function<ParamState(double)>& state_at, double s,
                        const PeriodicGrid& yg, const ProfileTable& prof, const ResidualOptions& opt) {
    yg.validate();
    if (!(opt.ds_rel > 0) || opt.ds_rel > 1e-3)
        throw Error(ErrorKind::TrajectoryTooSparse, "relative s-step must lie in (0, 1e-3]");
    const double ds = opt.ds_rel * std::abs(s);
    const std::vector<double> y = yg.nodes();
    AnsatzField V0 = build_field(cfg, state_at(s), y, prof, opt.field);
    // fourth-order centered stencil; bubbles travel O(1) per unit s, so ds must stay small in absolute terms
    AnsatzField Vp = build_field(cfg, state_at(s + ds), y, prof, opt.field);
    AnsatzField Vm = build_field(cfg, state_at(s - ds), y, prof, opt.field);
    AnsatzField Vp2 = build_field(cfg, state_at(s + 2.0 * ds), y, prof, opt.field);
    AnsatzField Vm2 = build_field(cfg, state_at(s - 2.0 * ds), y, prof, opt.field);

    Spectral sp(yg);
    std::vector<double> Vy = sp.derivative(V0.v, 1);
    std::vector<double> flux(yg.n);
    std::vector<double> Vyy = sp.derivative(V0.v, 2);
    for (std::size_t j = 0; j < yg.n; ++j) flux[j] = Vyy[j] + std::pow(V0.v[j], 5);
    std::vector<double> dflux = sp.derivative(flux, 1);

    ResidualResult r;
    r.y = y;
    r.E.resize(yg.n);
    for (std::size_t j = 0; j < yg.n; ++j) {
        double Vs = (8.0 * (Vp.v[j] - Vm.v[j]) - (Vp2.v[j] - Vm2.v[j])) / (12.0 * ds);
        double LV = 0.5 * V0.v[j] + y[j] * Vy[j];
        r.E[j] = Vs + LV / (2.0 * s) + dflux[j];
    }
    const std::size_t m = V0.window_nodes;
    r.excluded = 2 * m;
    double acc = 0.0;
    for (std::size_t j = m; j + m < yg.n; ++j) acc += r.E[j] * r.E[j];
    r.l2 = std::sqrt(acc * yg.h());
    return r;
}

// ------------------------------------------------------------------ checkpoint

namespace {
constexpr char kFieldMagic[8] = {'G', 'K', 'D', 'V', 'F', 'L', 'D', '1'};
}

void save_field(const Field& f, const std::string& path) {
    static_assert(std::endian::native == std::endian::little);
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) throw Error(ErrorKind::BadFile, "cannot write " + path);
    o.write(kFieldMagic, 8);
    std::uint64_t n = f.u.size();
    o.write(reinterpret_cast<const char*>(&f.t), 8);
    o.write(reinterpret_cast<const char*>(&f.grid.L), 8);
    o.write(reinterpret_cast<const char*>(&n), 8);
    o.write(reinterpret_cast<const char*>(f.u.data()), std::streamsize(n * 8));
    if (!o) throw Error(ErrorKind::BadFile, "write failed: " + path);
}

Field load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::BadFile, "cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kFieldMagic, 8) != 0) throw Error(ErrorKind::BadFile, "magic mismatch in " + path);
    Field f;
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&f.t), 8);
    in.read(reinterpret_cast<char*>(&f.grid.L), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in || n == 0 || n > (1ull << 32)) throw Error(ErrorKind::BadFile, "corrupt header in " + path);
    f.grid.n = std::size_t(n);
    f.grid.x0 = -0.5 * f.grid.L;
    f.u.resize(n);
    in.read(reinterpret_cast<char*>(f.u.data()), std::streamsize(n * 8));
    if (!in) throw Error(ErrorKind::BadFile, "truncated field file " + path);
    return f;
}

}  // namespace gkdv
