#include "gkdv/modulation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include "gkdv/errors.hpp"

namespace gkdv {

ModulationModel::ModulationModel(BubbleConfig c, double l1) : cfg(std::move(c)), cls(classify(cfg)), l1_Q(l1) {
    if (!(l1 > 0)) throw Error(ErrorKind::InvalidArgument, "need |Q|_1 > 0");
}

const char* to_string(ExitReason r) {
    switch (r) {
    case ExitReason::ReachedEnd: return "reached_end";
    case ExitReason::BootstrapExit: return "bootstrap_exit";
    case ExitReason::InvalidState: return "invalid_state";
    }
    return "?";
}

std::vector<double> pack(const ParamState& st) {
    std::vector<double> v;
    v.reserve(4 * st.b.size());
    for (const auto& p : st.b) {
        v.push_back(p.tau);
        v.push_back(p.mu);
        v.push_back(p.y);
        v.push_back(p.a);
    }
    return v;
}

ParamState unpack(double s, const std::vector<double>& v) {
    ParamState st;
    st.s = s;
    for (std::size_t i = 0; i + 3 < v.size(); i += 4) st.b.push_back({v[i], v[i + 1], v[i + 2], v[i + 3]});
    return st;
}

ParamState init_params(const ModulationModel& m, double Sn, const std::vector<double>& xi,
                       const std::vector<double>& zeta, const InitOptions& opt) {
    const BubbleConfig& cfg = m.cfg;
    const DeltaLadder& L = m.cls.ladder;
    const int K = cfg.K();
    if (!(std::abs(Sn) >= 100.0) || !(Sn < 0)) throw Error(ErrorKind::InvalidArgument, "init needs S_n <= -100");
    if (xi.size() != m.cls.Kplus.size() || int(zeta.size()) != K)
        throw Error(ErrorKind::InvalidArgument, "xi must have one entry per unstable bubble, zeta one per bubble");
    double r2 = 0.0;
    for (double v : xi) r2 += v * v;
    for (double v : zeta) r2 += v * v;
    if (!(r2 <= 1.0 + 1e-12)) throw Error(ErrorKind::InvalidArgument, "(xi, zeta) must lie in the closed unit ball");
    const double as = std::abs(Sn);
    ParamState st;
    st.s = Sn;
    st.b.resize(K);
    for (int k = 0; k < K; ++k) {
        const double l = cfg.ells[k];
        double mu = l;
        for (std::size_t i = 0; i < m.cls.Kplus.size(); ++i)
            if (m.cls.Kplus[i] == k) mu = l * (1.0 + std::pow(as, -L.plus[k]) * xi[i]);
        st.b[k].tau = Sn / (l * l * l) * (1.0 + std::pow(as, -L.mid[k]) * zeta[k]);
        st.b[k].mu = mu;
        st.b[k].y = 2.0 * Sn / (l * l);
    }
    DerivedParams d = derive(cfg, st, m.l1_Q);
    for (int k = 0; k < K; ++k) {
        const double l = cfg.ells[k];
        auto& p = st.b[k];
        p.a = l * p.mu * p.mu * (0.5 + d.theta[k]) / Sn - 1.0 / (2.0 * p.tau) - 4.0 * d.r[k] / m.l1_Q;
        if (opt.enforce_a_band && std::abs(p.a) > std::pow(as, -1.0 - L.minus[k]))
            throw Error(ErrorKind::InitOutOfBand, "|a_" + std::to_string(k + 1) + "(S_n)| = " + std::to_string(std::abs(p.a)) +
                                                      " exceeds |S_n|^{-1-delta^-}");
    }
    return st;
}

std::vector<double> rhs(const ModulationModel& m, const ParamState& st) {
    const BubbleConfig& cfg = m.cfg;
    const int K = cfg.K();
    const double s = st.s, l1 = m.l1_Q;
    DerivedParams d = derive(cfg, st, l1);
    std::vector<double> out(4 * K);
    for (int k = 0; k < K; ++k) {
        const auto& p = st.b[k];
        const double mu3 = p.mu * p.mu * p.mu, mu2 = p.mu * p.mu;
        const double dtau = 1.0 / mu3;
        const double dmu = p.mu * (-1.0 / (2.0 * mu3 * p.tau) + 1.0 / (2.0 * s) - p.a / mu3);
        const double dy = p.y / (2.0 * s) + 1.0 / mu2 + cfg.c0 / (2.0 * mu2 * p.tau) -
                          3.0 * cfg.c1 / (4.0 * mu2 * p.tau * p.tau);
        const double dr = d.d[k] / mu3 - d.r[k] / (4.0 * mu3 * p.tau) - p.a * d.r[k] / (2.0 * mu3);
        // e_k = (s/mu^2) B held fixed
        const double B = p.a + 1.0 / (2.0 * p.tau) + 4.0 * d.r[k] / l1;
        const double da = -(1.0 / s - 2.0 * dmu / p.mu) * B + dtau / (2.0 * p.tau * p.tau) - 4.0 * dr / l1;
        out[4 * k] = dtau;
        out[4 * k + 1] = dmu;
        out[4 * k + 2] = dy;
        out[4 * k + 3] = da;
    }
    return out;
}

std::vector<double> exit_coordinates(const ModulationModel& m, const ParamState& st) {
    Bars b = bars(m.cfg, st);
    const double as = std::abs(st.s);
    const DeltaLadder& L = m.cls.ladder;
    std::vector<double> c;
    for (int k : m.cls.Kplus) c.push_back(std::pow(as, L.plus[k]) * (b.mu_bar[k] + b.y_bar[k]));
    for (int k = 0; k < m.cfg.K(); ++k) c.push_back(std::pow(as, L.mid[k]) * b.tau_bar[k]);
    return c;
}

double exit_norm(const ModulationModel& m, const ParamState& st) {
    double N = 0.0;
    for (double c : exit_coordinates(m, st)) N += c * c;
    return N;
}

namespace {

bool state_ok(const std::vector<double>& v) {
    for (std::size_t i = 0; i + 3 < v.size(); i += 4)
        if (!(v[i] < 0) || !(v[i + 1] > 0) || !std::isfinite(v[i + 2]) || !std::isfinite(v[i + 3])) return false;
    return true;
}

OdeRhs make_rhs(const ModulationModel& m) {
    return [&m](double s, const OdeState& y, OdeState& dy) {
        if (!state_ok(y)) {  // let the step controller reject it
            std::fill(dy.begin(), dy.end(), std::nan(""));
            return;
        }
        try {
            dy = rhs(m, unpack(s, y));
        } catch (const Error&) {
            std::fill(dy.begin(), dy.end(), std::nan(""));
        }
    };
}

TrajectoryPoint make_point(const ModulationModel& m, double s, const std::vector<double>& v) {
    TrajectoryPoint p;
    p.state = unpack(s, v);
    p.derived = derive(m.cfg, p.state, m.l1_Q);
    p.N = exit_norm(m, p.state);
    return p;
}

// first s in (step.t0, step.t1] where N crosses 1, by bisection on the dense output
double locate_exit(const ModulationModel& m, const DenseStep& step) {
    double a = step.t0, b = step.t1;
    for (int it = 0; it < 100 && b - a > 1e-13 * std::abs(b); ++it) {
        double c = 0.5 * (a + b);
        if (exit_norm(m, unpack(c, step(c))) > 1.0)
            b = c;
        else
            a = c;
    }
    return b;
}

}  // namespace

Trajectory integrate(const ModulationModel& m, const ParamState& init, double S0, const IntegrateOptions& opt) {
    const double Sn = init.s;
    if (!(Sn < S0 && S0 < 0)) throw Error(ErrorKind::InvalidArgument, "need S_n < S_0 < 0");
    init.validate();
    std::vector<double> sample(std::max(opt.samples, 2));
    const double la = std::log(-Sn), lb = std::log(-S0);
    for (std::size_t i = 0; i < sample.size(); ++i)
        sample[i] = -std::exp(la + (lb - la) * double(i) / double(sample.size() - 1));
    sample.front() = Sn;
    sample.back() = S0;

    Trajectory tr;
    tr.points.push_back(make_point(m, Sn, pack(init)));
    std::size_t next = 1;

    auto obs = [&](const DenseStep& step, const OdeState& y1) {
        if (!state_ok(y1)) {
            tr.reason = ExitReason::InvalidState;
            tr.exit_s = step.t1;
            return false;
        }
        double stop_at = step.t1;
        bool exiting = false;
        if (opt.stop_on_exit && exit_norm(m, unpack(step.t1, y1)) > 1.0) {
            stop_at = locate_exit(m, step);
            exiting = true;
        }
        while (next < sample.size() && sample[next] <= stop_at) {
            double s = sample[next++];
            tr.points.push_back(make_point(m, s, s == step.t1 ? y1 : step(s)));
        }
        if (exiting) {
            if (tr.points.back().state.s < stop_at) tr.points.push_back(make_point(m, stop_at, step(stop_at)));
            tr.reason = ExitReason::BootstrapExit;
            tr.exit_s = stop_at;
            tr.N_exit = tr.points.back().N;
            return false;
        }
        return true;
    };
    OdeResult r = DormandPrince(opt.ode).integrate(make_rhs(m), Sn, pack(init), S0, obs);
    tr.steps = r.steps;
    if (!r.stopped) {
        tr.reason = ExitReason::ReachedEnd;
        tr.exit_s = S0;
        if (tr.points.back().state.s < S0) tr.points.push_back(make_point(m, S0, r.y));
        tr.N_exit = tr.points.back().N;
    } else if (tr.reason == ExitReason::InvalidState) {
        tr.N_exit = std::numeric_limits<double>::infinity();
    }
    return tr;
}

DenseTrajectory::DenseTrajectory(const ModulationModel& m, const ParamState& init, double S0, const OdeOptions& ode)
    : s0_(init.s), s1_(S0) {
    auto obs = [&](const DenseStep& step, const OdeState&) {
        steps_.push_back(step);
        return true;
    };
    DormandPrince(ode).integrate(make_rhs(m), init.s, pack(init), S0, obs);
}

ParamState DenseTrajectory::at(double s) const {
    if (s < s0_ || s > s1_) throw Error(ErrorKind::InvalidArgument, "s outside the integrated interval");
    auto it = std::lower_bound(steps_.begin(), steps_.end(), s, [](const DenseStep& st, double v) { return st.t1 < v; });
    if (it == steps_.end()) --it;
    return unpack(s, (*it)(s));
}

// ------------------------------------------------------------------ shooting

namespace {

struct Shot {
    std::vector<double> F;  // exit coordinates at the end time
    double N_end = 0.0;
    double exit_s = 0.0;    // first crossing of N = 1, or the end time
    double N_exit = 0.0;
    bool ok = false;
};

Shot fire(const ModulationModel& m, double Sn, double S_end, const std::vector<double>& v) {
    const std::size_t np = m.cls.Kplus.size();
    std::vector<double> xi(v.begin(), v.begin() + long(np)), zeta(v.begin() + long(np), v.end());
    Shot out;
    try {
        ParamState init = init_params(m, Sn, xi, zeta, InitOptions{false});
        bool crossed = false;
        auto obs = [&](const DenseStep& step, const OdeState& y1) {
            if (!state_ok(y1)) return false;
            if (!crossed && exit_norm(m, unpack(step.t1, y1)) > 1.0) {
                crossed = true;
                out.exit_s = locate_exit(m, step);
            }
            return true;
        };
        OdeResult r = DormandPrince().integrate(make_rhs(m), Sn, pack(init), S_end, obs);
        if (r.stopped) return out;
        ParamState end = unpack(S_end, r.y);
        out.F = exit_coordinates(m, end);
        out.N_end = exit_norm(m, end);
        if (!crossed) out.exit_s = S_end;
        out.N_exit = crossed ? 1.0 : out.N_end;
        out.ok = std::all_of(out.F.begin(), out.F.end(), [](double x) { return std::isfinite(x); });
    } catch (const Error&) {
        out.ok = false;
    }
    return out;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return s;
}

void clamp_ball(std::vector<double>& v) {
    double n = std::sqrt(norm2(v));
    if (n > 1.0)
        for (double& x : v) x /= n;
}

}  // namespace

ShootResult shoot(const ModulationModel& m, double Sn, double S0, double tol, const ShootOptions& opt) {
    if (!(tol > 0 && tol < 1)) throw Error(ErrorKind::InvalidArgument, "tol must lie in (0,1)");
    if (!(Sn < S0 && S0 < 0)) throw Error(ErrorKind::InvalidArgument, "need S_n < S_0 < 0");
    const std::size_t np = m.cls.Kplus.size();
    const std::size_t dim = np + std::size_t(m.cfg.K());
    std::vector<double> v(dim, 0.0);
    ShootResult res;
    int iter = 0;

    auto record = [&](const Shot& sh) {
        ShootRow row;
        row.iteration = iter;
        row.xi.assign(v.begin(), v.begin() + long(np));
        row.zeta.assign(v.begin() + long(np), v.end());
        row.exit_s = sh.exit_s;
        row.N_exit = sh.N_exit;
        res.history.push_back(row);
    };

    // FD Jacobian; columns are independent runs
    auto jacobian = [&](double S_end, const Shot& base) {
        Eigen::MatrixXd J(dim, dim);
        std::vector<Shot> cols(dim);
        auto work = [&](std::size_t j) {
            std::vector<double> w = v;
            w[j] += opt.fd_step;
            cols[j] = fire(m, Sn, S_end, w);
        };
        int nt = std::max(1, opt.threads);
        for (std::size_t j0 = 0; j0 < dim; j0 += std::size_t(nt)) {
            std::vector<std::thread> pool;
            for (std::size_t j = j0; j < std::min(dim, j0 + std::size_t(nt)); ++j) {
                if (nt == 1)
                    work(j);
                else
                    pool.emplace_back(work, j);
            }
            for (auto& th : pool) th.join();
        }
        for (std::size_t j = 0; j < dim; ++j) {
            if (!cols[j].ok) return std::optional<Eigen::MatrixXd>{};
            for (std::size_t i = 0; i < dim; ++i) J(i, j) = (cols[j].F[i] - base.F[i]) / opt.fd_step;
        }
        return std::optional<Eigen::MatrixXd>{J};
    };

    // Newton with a trust region, continued in the end time from near S_n out to S_0
    const int stages = std::max(1, opt.continuation_stages);
    bool newton_ok = true;
    Shot cur;
    for (int stage = 1; stage <= stages && newton_ok; ++stage) {
        const double S_end = -std::exp(std::log(-Sn) + (std::log(-S0) - std::log(-Sn)) * double(stage) / stages);
        cur = fire(m, Sn, S_end, v);
        if (!cur.ok) {
            newton_ok = false;
            break;
        }
        if (stage == 1) record(cur);
        double radius = 0.25;
        while (iter < opt.max_iter) {
            if (cur.N_end <= 1e-20) break;
            auto J = jacobian(S_end, cur);
            if (!J) {
                newton_ok = false;
                break;
            }
            Eigen::VectorXd F = Eigen::Map<const Eigen::VectorXd>(cur.F.data(), Eigen::Index(dim));
            Eigen::VectorXd step = -J->colPivHouseholderQr().solve(F);
            bool accepted = false;
            while (radius > 1e-12) {
                Eigen::VectorXd st = step;
                if (st.norm() > radius) st *= radius / st.norm();
                std::vector<double> w = v;
                for (std::size_t i = 0; i < dim; ++i) w[i] += st[Eigen::Index(i)];
                clamp_ball(w);
                Shot trial = fire(m, Sn, S_end, w);
                if (trial.ok && trial.N_end < cur.N_end) {
                    v = w;
                    cur = trial;
                    accepted = true;
                    radius = std::min(1.0, 2.0 * radius);
                    break;
                }
                radius *= 0.25;
            }
            ++iter;
            record(cur);
            if (!accepted) break;  // stalled
            if (step.norm() < 1e-14) break;
        }
    }

    // Fallback: cyclic scalar bisection, each coordinate against its own exit component
    if (!(newton_ok && cur.ok && cur.N_end <= tol)) {
        cur = fire(m, Sn, S0, v);
        for (int sweep = 0; sweep < 20 && iter < opt.max_iter && !(cur.ok && cur.N_end <= tol); ++sweep) {
            for (std::size_t j = 0; j < dim; ++j) {
                auto comp = [&](double x) {
                    std::vector<double> w = v;
                    w[j] = x;
                    Shot sh = fire(m, Sn, S0, w);
                    return sh.ok ? sh.F[j] : std::nan("");
                };
                double lim = std::sqrt(std::max(0.0, 1.0 - (norm2(v) - v[j] * v[j])));
                double a = -lim, b = lim, fa = comp(a), fb = comp(b);
                if (!(std::isfinite(fa) && std::isfinite(fb)) || fa * fb > 0) continue;
                for (int it = 0; it < 60; ++it) {
                    double c = 0.5 * (a + b), fc = comp(c);
                    if (!std::isfinite(fc)) break;
                    if ((fc < 0) == (fa < 0)) {
                        a = c;
                        fa = fc;
                    } else {
                        b = c;
                    }
                }
                v[j] = 0.5 * (a + b);
            }
            ++iter;
            cur = fire(m, Sn, S0, v);
            record(cur);
        }
    }

    res.iterations = iter;
    res.xi.assign(v.begin(), v.begin() + long(np));
    res.zeta.assign(v.begin() + long(np), v.end());
    ParamState init = init_params(m, Sn, res.xi, res.zeta, InitOptions{false});
    IntegrateOptions io;
    io.stop_on_exit = true;
    res.trajectory = integrate(m, init, S0, io);
    res.N_end = res.trajectory.back().N;
    res.converged = res.trajectory.reason == ExitReason::ReachedEnd && res.N_end <= tol;
    return res;
}

// ------------------------------------------------------------------ physical frame

PhysicalSeries to_physical(const Trajectory& tr, const BubbleConfig& cfg) {
    const int K = cfg.K();
    PhysicalSeries ps;
    ps.lambda.assign(K, {});
    ps.x.assign(K, {});
    ps.rho.assign(K, {});
    ps.max_lambda_dev.assign(K, 0.0);
    ps.max_x_dev.assign(K, 0.0);
    for (const auto& p : tr.points) {
        const double t = 1.0 / std::sqrt(-2.0 * p.state.s);
        ps.t.push_back(t);
        for (int k = 0; k < K; ++k) {
            const double l = cfg.ells[k];
            const double lam = t * p.derived.mu_tilde[k];
            const double x = t * p.state.b[k].y;
            ps.lambda[k].push_back(lam);
            ps.x[k].push_back(x);
            ps.rho[k].push_back(1.0 / std::sqrt(-2.0 * p.state.b[k].tau));
            ps.max_lambda_dev[k] = std::max(ps.max_lambda_dev[k], std::abs(lam - l * t) / std::pow(t, 23.0 / 22.0));
            ps.max_x_dev[k] = std::max(ps.max_x_dev[k], std::abs(x + 1.0 / (l * l * t)) / std::pow(t, -21.0 / 22.0));
        }
    }
    return ps;
}

}  // namespace gkdv
