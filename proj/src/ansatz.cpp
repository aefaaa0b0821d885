#include "gkdv/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gkdv/errors.hpp"

namespace gkdv {

void BubbleConfig::validate() const {
    if (ells.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one bubble");
    if (signs.size() != ells.size()) throw Error(ErrorKind::InvalidArgument, "ells and signs differ in length");
    for (std::size_t k = 0; k < ells.size(); ++k) {
        if (!(ells[k] > 0) || !std::isfinite(ells[k])) throw Error(ErrorKind::InvalidArgument, "scales must be positive");
        if (k > 0 && !(ells[k] < ells[k - 1]))
            throw Error(ErrorKind::InvalidArgument, "scales must be strictly decreasing");
        if (signs[k] != 1 && signs[k] != -1) throw Error(ErrorKind::InvalidArgument, "signs must be +1 or -1");
    }
}

void ParamState::validate() const {
    if (!(s < 0)) throw Error(ErrorKind::InvalidArgument, "s must be negative");
    for (const auto& p : b)
        if (!(p.tau < 0) || !(p.mu > 0) || !std::isfinite(p.y) || !std::isfinite(p.a))
            throw Error(ErrorKind::InvalidArgument, "need tau < 0, mu > 0 and finite y, a");
}

ParamState ParamState::self_similar(const BubbleConfig& cfg, double s) {
    ParamState st;
    st.s = s;
    for (double l : cfg.ells) st.b.push_back({s / (l * l * l), l, 2.0 * s / (l * l), 0.0});
    return st;
}

Bars bars(const BubbleConfig& cfg, const ParamState& st) {
    Bars out;
    for (int k = 0; k < cfg.K(); ++k) {
        double l = cfg.ells[k];
        const auto& p = st.b[k];
        out.mu_bar.push_back(p.mu / l - 1.0);
        out.tau_bar.push_back(p.tau / (st.s / (l * l * l)) - 1.0);
        out.y_bar.push_back(p.y / (2.0 * st.s / (l * l)) - 1.0);
    }
    return out;
}

std::vector<double> theta(const BubbleConfig& cfg) {
    std::vector<double> th(cfg.K(), 0.0);
    for (int k = 0; k < cfg.K(); ++k)
        for (int j = 0; j < k; ++j) th[k] += cfg.signs[k] * cfg.signs[j] * std::sqrt(cfg.ells[k] / cfg.ells[j]);
    return th;
}

// ------------------------------------------------------------ classification

double DeltaLadder::chain_margin() const {
    std::vector<double> chain{delta_Kp1, delta_Kp1_plus};
    for (std::size_t k = mid.size(); k-- > 0;) {
        chain.push_back(minus[k]);
        chain.push_back(mid[k]);
        chain.push_back(plus[k]);
    }
    chain.push_back(delta0_minus);
    chain.push_back(delta0);
    // delta0 <= 1/42 is not strict
    double m = delta0 > 1.0 / 42.0 ? 1.0 / 42.0 - delta0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < chain.size(); ++i) m = std::min(m, chain[i] - chain[i - 1]);
    return m;
}

bool Classification::unstable(int k) const { return std::find(Kplus.begin(), Kplus.end(), k) != Kplus.end(); }

Classification classify(const BubbleConfig& cfg) {
    cfg.validate();
    const int K = cfg.K();
    std::vector<double> th = theta(cfg);
    Classification c;
    double dplus = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        double rate = 0.5 * (1.0 + 3.0 * th[k]);
        c.rate.push_back(rate);
        if (rate > 1.0 / 43.0) {
            c.Kplus.push_back(k);
            dplus = std::min(dplus, rate);
        } else {
            c.Kminus.push_back(k);
        }
    }
    DeltaLadder& L = c.ladder;
    L.delta0 = std::min(1.0 / 42.0, dplus);
    if (!(L.delta0 > 1.0 / 43.0)) throw Error(ErrorKind::DegenerateLadder, "delta0 <= 1/43");
    const double step = (L.delta0 - 1.0 / 43.0) / double(3 * K + 3);
    auto t = [&](int i) { return 1.0 / 43.0 + double(i) * step; };
    L.delta_Kp1 = t(0);
    L.delta_Kp1_plus = t(1);
    L.minus.assign(K, 0.0);
    L.mid.assign(K, 0.0);
    L.plus.assign(K, 0.0);
    for (int k = K; k >= 1; --k) {
        int base = 2 + 3 * (K - k);
        L.minus[k - 1] = t(base);
        L.mid[k - 1] = t(base + 1);
        L.plus[k - 1] = t(base + 2);
    }
    L.delta0_minus = t(3 * K + 2);
    L.delta0 = t(3 * K + 3);
    return c;
}

// ------------------------------------------------------------ derived params

DerivedParams derive(const BubbleConfig& cfg, const ParamState& st, double l1) {
    const int K = cfg.K();
    if (int(st.b.size()) != K) throw Error(ErrorKind::InvalidArgument, "state/config bubble count mismatch");
    st.validate();
    if (std::abs(st.s) < 10.0) throw Error(ErrorKind::InvalidArgument, "derive needs |s| >= 10");
    const double s = st.s;
    DerivedParams d;
    d.theta = theta(cfg);
    Bars br = bars(cfg, st);
    d.mu_tilde.resize(K);
    d.z.resize(K);
    for (int k = 0; k < K; ++k) {
        const auto& p = st.b[k];
        d.mu_tilde[k] = p.mu / (1.0 + cfg.lambda0 / (2.0 * p.tau));
        d.z[k] = p.y + p.mu * (-2.0 * p.tau + cfg.c0 - cfg.c1 / (2.0 * p.tau));
    }
    d.r.assign(K, 0.0);
    d.d.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < k; ++j) {
            const auto& pj = st.b[j];
            double dist = std::abs(st.b[k].y - d.z[j]);
            if (dist < 1.0) throw Error(ErrorKind::BubbleCollision, "bubble tails overlap");
            double A = -0.5 * cfg.signs[j] * l1 * pj.mu * std::sqrt(-2.0 * pj.tau);
            d.r[k] += A * std::pow(dist, -1.5);
            d.d[k] += A * 1.5 * std::pow(dist, -2.5);
        }
        d.r[k] *= cfg.signs[k] * std::sqrt(d.mu_tilde[k]);
        d.d[k] *= cfg.signs[k] * std::pow(d.mu_tilde[k], 1.5);
    }
    d.r_closed.resize(K);
    d.e.resize(K);
    d.f.resize(K);
    for (int k = 0; k < K; ++k) {
        double l = cfg.ells[k];
        d.r_closed[k] = l1 / (4.0 * s) * l * l * l * d.theta[k] * (1.0 + 0.5 * br.mu_bar[k] - 1.5 * br.y_bar[k]);
        const auto& p = st.b[k];
        d.e[k] = s / (p.mu * p.mu) * (p.a + 1.0 / (2.0 * p.tau) + 4.0 * d.r[k] / l1);
        d.f[k] = br.mu_bar[k] + br.y_bar[k];
    }
    return d;
}

// ------------------------------------------------------------ field

double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double chi(double z, double gamma) { return smoothstep((z + 2.0 * gamma) / gamma); }

double gamma_of(const BubbleConfig& cfg) {
    const int K = cfg.K();
    if (K == 1) {
        // no neighbour; use the same expression against a virtual scale 0 -> 1/(4 l^3)
        double l = cfg.ells[0];
        return 1.0 / (4.0 * l * l * l);
    }
    double g = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < K; ++k) {
        double a = cfg.ells[k], b = cfg.ells[k + 1];
        g = std::min(g, (1.0 / (4.0 * a)) * (1.0 / (b * b) - 1.0 / (a * a)));
    }
    return g;
}

AnsatzField build_field(const BubbleConfig& cfg, const ParamState& st, const std::vector<double>& y,
                        const ProfileTable& prof, const FieldOptions& opt) {
    cfg.validate();
    const int K = cfg.K();
    const std::size_t n = y.size();
    if (n < 16) throw Error(ErrorKind::InvalidArgument, "field grid too small");
    DerivedParams dp = derive(cfg, st, prof.norms.l1_Q);
    const double s = st.s, as = std::abs(s);
    const double gam = gamma_of(cfg);
    const double l1 = prof.norms.l1_Q;

    for (int k = 0; k < K; ++k) {
        double w = 20.0 * dp.mu_tilde[k];
        if (st.b[k].y - w < y.front() || st.b[k].y + w > y.back())
            throw Error(ErrorKind::GridTooNarrow, "grid must contain y_k +- 20 mu_k for every bubble");
    }

    AnsatzField out;
    out.y = y;
    out.v.assign(n, 0.0);
    std::vector<char> outside(n, 0);
    for (int k = 0; k < K; ++k) {
        const auto& p = st.b[k];
        const double eps = cfg.signs[k];
        const double mt = dp.mu_tilde[k];
        const double amp = eps / std::sqrt(mt);
        const double b0 = p.y - gam * cfg.ells[k] * as;        // pure tail to the left of b0
        const double b1 = p.y - 0.5 * gam * cfg.ells[k] * as;  // pure near field to the right of b1
        const double A = -0.5 * eps * l1 * p.mu * std::sqrt(-2.0 * p.tau);
        const double bcorr = opt.p_correction ? 1.0 / (2.0 * p.tau) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = y[i];
            const double zeta = (yi - p.y) / mt;
            bool off = false;
            double Pz = prof.P(zeta, &off);
            double Rz = prof.R(zeta, &off);
            // Q is exponentially small across the crossover band, so only the
            // P-correction is traded for the tail there.
            double w = smoothstep((yi - b0) / (b1 - b0));
            double W = amp * eval_Q(zeta) + w * amp * bcorr * Pz;
            if (opt.p_correction && yi < b1) W += (1.0 - w) * A * std::pow(std::max(dp.z[k] - yi, 1e-300), -1.5);
            double Pk = amp * Pz * chi(zeta / as, gam);
            out.v[i] += W + dp.r[k] * amp * Rz + p.a * Pk;
            // only count fallbacks that carry weight: P inside the near/crossover zone
            if (off && yi > b0 && (Pz != 0.0 || Rz != 0.0)) outside[i] = 1;
        }
    }
    for (char c : outside) out.outside_lookups += std::size_t(c);
    if (opt.strict_profile_domain && out.outside_lookups > n / 100)
        throw Error(ErrorKind::ProfileDomainExceeded, std::to_string(out.outside_lookups) + " nodes beyond the profile table");

    // half-cosine taper on both ends
    const std::size_t m = std::size_t(opt.window * double(n));
    out.window_nodes = m;
    const double h = (y.back() - y.front()) / double(n - 1);
    for (std::size_t i = 0; i < m; ++i) {
        double w = 0.5 - 0.5 * std::cos(M_PI * double(i) / double(m));
        for (std::size_t idx : {i, n - 1 - i}) {
            out.taper_mass += out.v[idx] * out.v[idx] * (1.0 - w * w) * h;
            out.v[idx] *= w;
        }
    }
    return out;
}

AnsatzField build_field(const BubbleConfig& cfg, const ParamState& st, const Grid1D& grid, const ProfileTable& prof,
                        const FieldOptions& opt) {
    grid.validate();
    std::vector<double> y(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) y[i] = grid.x(i);
    return build_field(cfg, st, y, prof, opt);
}

// ------------------------------------------------------------ predictions

MassEnergy predict_mass_energy(const BubbleConfig& cfg, const ProfileNorms& norms) {
    cfg.validate();
    const int K = cfg.K();
    std::vector<double> th = theta(cfg);
    MassEnergy me;
    me.mass = K * norms.l2sq_Q;
    double e = 0.0;
    for (int k = 0; k < K; ++k) e += cfg.ells[k] * (1.0 + 2.0 * th[k]);
    const double scale = norms.l1_Q * norms.l1_Q / 16.0;
    me.energy = scale * e;
    // Abel summation of the same sum
    double abel = 0.0, partial = 0.0;
    std::vector<double> S(K);
    for (int k = 0; k < K; ++k) {
        partial += cfg.signs[k] / std::sqrt(cfg.ells[k]);
        S[k] = partial;
    }
    for (int k = 0; k + 1 < K; ++k) abel += (cfg.ells[k] * cfg.ells[k] - cfg.ells[k + 1] * cfg.ells[k + 1]) * S[k] * S[k];
    abel += cfg.ells[K - 1] * cfg.ells[K - 1] * S[K - 1] * S[K - 1];
    me.energy_abel = scale * abel;
    return me;
}

std::vector<double> omega(const BubbleConfig& cfg, const ParamState& st, const DerivedParams& dp, double l1) {
    std::vector<double> out(cfg.K());
    for (int k = 0; k < cfg.K(); ++k) {
        const auto& p = st.b[k];
        double mu3 = p.mu * p.mu * p.mu;
        out[k] = l1 * l1 / (8.0 * mu3) * (p.a / p.tau + p.a * p.a) + l1 / mu3 * dp.d[k];
    }
    return out;
}

}  // namespace gkdv
