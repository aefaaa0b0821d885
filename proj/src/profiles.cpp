#include "gkdv/profiles.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "gkdv/errors.hpp"

namespace gkdv {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

bool Grid1D::is_symmetric() const { return std::abs(x_min + x_max) <= 1e-12 * std::max(1.0, x_max); }

void Grid1D::validate() const {
    if (n < 16) throw Error(ErrorKind::InvalidArgument, "grid needs n >= 16");
    if (!(x_min < 0.0 && 0.0 < x_max)) throw Error(ErrorKind::InvalidArgument, "grid must satisfy x_min < 0 < x_max");
}

double l1_norm_Q() {
    const double beta = std::tgamma(0.25) * std::sqrt(M_PI) / std::tgamma(0.75);
    return 0.5 * std::pow(3.0, 0.25) * beta;
}

double l2sq_norm_Q() { return std::sqrt(3.0) * M_PI / 2.0; }

double eval_Q(double x) {
    // (3/cosh^2(2x))^{1/4} = 3^{1/4} / sqrt(cosh 2x), written to avoid overflow
    double a = std::abs(2.0 * x);
    double sech = 2.0 * std::exp(-a) / (1.0 + std::exp(-2.0 * a));
    return std::pow(3.0, 0.25) * std::sqrt(sech);
}

double eval_Q_prime(double x) { return -std::tanh(2.0 * x) * eval_Q(x); }

double eval_Lambda_Q(double x) { return 0.5 * eval_Q(x) + x * eval_Q_prime(x); }

// ---------------------------------------------------------------- quadrature

double simpson(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (f[0] + f[1]);
    auto simp = [&](std::size_t a, std::size_t b) {  // b - a even
        double s = f[a] + f[b];
        for (std::size_t i = a + 1; i < b; ++i) s += (i - a) % 2 ? 4.0 * f[i] : 2.0 * f[i];
        return s * h / 3.0;
    };
    if ((n - 1) % 2 == 0) return simp(0, n - 1);
    // odd interval count: Simpson 3/8 on the last three intervals
    double tail = 3.0 * h / 8.0 * (f[n - 4] + 3.0 * f[n - 3] + 3.0 * f[n - 2] + f[n - 1]);
    return (n - 4 > 0 ? simp(0, n - 4) : 0.0) + tail;
}

double inner(const std::vector<double>& f, const std::vector<double>& g, double h) {
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) w[i] = f[i] * g[i];
    return simpson(w, h);
}

std::vector<double> d1_4th(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> g(n, 0.0);
    g[0] = (f[1] - f[0]) / h;
    g[n - 1] = (f[n - 1] - f[n - 2]) / h;
    g[1] = (f[2] - f[0]) / (2 * h);
    g[n - 2] = (f[n - 1] - f[n - 3]) / (2 * h);
    for (std::size_t i = 2; i + 2 < n; ++i) g[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
    return g;
}

std::vector<double> d2_6th(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> g(n, 0.0);
    const double h2 = h * h;
    for (std::size_t i = 1; i + 1 < n && i < 3; ++i) g[i] = (f[i - 1] - 2 * f[i] + f[i + 1]) / h2;
    for (std::size_t i = n - 3; i + 1 < n; ++i) g[i] = (f[i - 1] - 2 * f[i] + f[i + 1]) / h2;
    for (std::size_t i = 3; i + 3 < n; ++i)
        g[i] = (f[i - 3] / 90 - 3 * f[i - 2] / 20 + 1.5 * f[i - 1] - 49.0 / 18 * f[i] + 1.5 * f[i + 1] -
                3 * f[i + 2] / 20 + f[i + 3] / 90) /
               h2;
    return g;
}

// ---------------------------------------------------------------- solves

namespace {

struct RawSolve {
    std::vector<double> p, r;
    double residual = 0.0;  // augmented system, relative
};

RawSolve solve_raw(const Grid1D& g) {
    const std::size_t n = g.n;
    const double h = g.h();
    std::vector<double> x(n), q(n), qp(n), lq(n), V(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = g.x(i);
        q[i] = eval_Q(x[i]);
        qp[i] = eval_Q_prime(x[i]);
        lq[i] = eval_Lambda_Q(x[i]);
        V[i] = 1.0 - 5.0 * std::pow(q[i], 4);
    }

    // D(x) = -∫_x^{x_max} ΛQ,  with ΛQ = (xQ)' - Q/2.  ∫Q by endpoint-corrected trapezoid.
    std::vector<double> intQ(n, 0.0);  // ∫_{x_i}^{x_max} Q
    for (std::size_t i = n - 1; i-- > 0;)
        intQ[i] = intQ[i + 1] + 0.5 * h * (q[i] + q[i + 1]) - h * h / 12.0 * (qp[i + 1] - qp[i]);
    std::vector<double> D(n);
    for (std::size_t i = 0; i < n; ++i) D[i] = -((g.x_max * q[n - 1] - x[i] * q[i]) - 0.5 * intQ[i]);

    const double ih2 = 1.0 / (h * h);
    using SpMat = Eigen::SparseMatrix<double>;
    using Trip = Eigen::Triplet<double>;

    // P: bordered system [A c; c^T 0] [P; lambda] = [D; 0]
    std::vector<Trip> tr;
    tr.reserve(5 * n);
    tr.emplace_back(0, 0, 2 * ih2 + V[0]);
    tr.emplace_back(0, 1, -2 * ih2);  // Neumann via ghost node
    for (std::size_t i = 1; i + 1 < n; ++i) {
        tr.emplace_back(i, i - 1, -ih2);
        tr.emplace_back(i, i, 2 * ih2 + V[i]);
        tr.emplace_back(i, i + 1, -ih2);
    }
    tr.emplace_back(n - 1, n - 1, 1.0);  // Dirichlet
    for (std::size_t i = 0; i < n; ++i) {
        tr.emplace_back(i, n, qp[i] * h);
        tr.emplace_back(n, i, qp[i] * h);
    }
    SpMat B(n + 1, n + 1);
    B.setFromTriplets(tr.begin(), tr.end());
    Eigen::VectorXd rhs(n + 1);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = D[i];
    rhs[n - 1] = 0.0;
    rhs[n] = 0.0;

    Eigen::SparseLU<SpMat> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "LU factorization of the P system failed");
    Eigen::VectorXd sol = lu.solve(rhs);
    RawSolve out;
    out.residual = (B * sol - rhs).norm() / rhs.norm();
    if (!(out.residual <= 1e-6))
        throw Error(ErrorKind::SingularSystem, "constrained solve residual " + std::to_string(out.residual));
    out.p.assign(sol.data(), sol.data() + n);

    // R: Dirichlet both ends, tridiagonal
    std::vector<double> a(n, 0.0), b(n), c(n, 0.0), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = 2 * ih2 + V[i];
        a[i] = c[i] = -ih2;
        d[i] = 5.0 * std::pow(q[i], 4);
    }
    b[0] = b[n - 1] = 1.0;
    c[0] = a[n - 1] = 0.0;
    d[0] = d[n - 1] = 0.0;
    // L is indefinite, so use the sparse LU rather than an unpivoted sweep
    std::vector<Trip> tr2;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && a[i] != 0.0) tr2.emplace_back(i, i - 1, a[i]);
        tr2.emplace_back(i, i, b[i]);
        if (i + 1 < n && c[i] != 0.0) tr2.emplace_back(i, i + 1, c[i]);
    }
    SpMat A2(n, n);
    A2.setFromTriplets(tr2.begin(), tr2.end());
    Eigen::SparseLU<SpMat> lu2;
    lu2.compute(A2);
    if (lu2.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "LU factorization of the R system failed");
    Eigen::VectorXd dv = Eigen::Map<Eigen::VectorXd>(d.data(), Eigen::Index(n));
    Eigen::VectorXd rs = lu2.solve(dv);
    double res2 = (A2 * rs - dv).norm() / dv.norm();
    if (!(res2 <= 1e-6)) throw Error(ErrorKind::SingularSystem, "R solve residual " + std::to_string(res2));
    out.r.assign(rs.data(), rs.data() + n);
    return out;
}

}  // namespace

ProfileTable build_profiles(const Grid1D& grid, const BuildOptions& opt) {
    grid.validate();
    if (!grid.is_symmetric()) throw Error(ErrorKind::InvalidArgument, "profile grid must be symmetric");
    if (grid.h() > 0.02 + 1e-15) throw Error(ErrorKind::InvalidArgument, "profile grid needs h <= 0.02");

    const std::size_t n = grid.n;
    const double h = grid.h();
    ProfileTable t;
    t.grid = grid;
    t.q.resize(n);
    t.q_prime.resize(n);
    t.lambda_q.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = grid.x(i);
        t.q[i] = eval_Q(x);
        t.q_prime[i] = eval_Q_prime(x);
        t.lambda_q[i] = eval_Lambda_Q(x);
    }

    RawSolve coarse = solve_raw(grid);
    if (opt.richardson) {
        RawSolve fine = solve_raw(Grid1D{grid.x_min, grid.x_max, 2 * n - 1});
        t.p.resize(n);
        t.r.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.p[i] = (4.0 * fine.p[2 * i] - coarse.p[i]) / 3.0;
            t.r[i] = (4.0 * fine.r[2 * i] - coarse.r[i]) / 3.0;
        }
    } else {
        t.p = std::move(coarse.p);
        t.r = std::move(coarse.r);
    }

    // evenness of R
    for (std::size_t i = 0; i < n / 2; ++i) {
        double m = 0.5 * (t.r[i] + t.r[n - 1 - i]);
        t.r[i] = t.r[n - 1 - i] = m;
    }

    t.norms.l1_Q = simpson(t.q, h);
    t.norms.l2sq_Q = inner(t.q, t.q, h);

    // restate <P,Q'> = 0 in the Simpson inner product
    double c = inner(t.p, t.q_prime, h) / inner(t.q_prime, t.q_prime, h);
    for (std::size_t i = 0; i < n; ++i) t.p[i] -= c * t.q_prime[i];

    double plateau_gap = std::abs(t.p[0] - 0.5 * t.norms.l1_Q);
    if (plateau_gap > 1e-3)
        throw Error(ErrorKind::DomainTooSmall, "|P(x_min) - l1/2| = " + std::to_string(plateau_gap));

    t.finalize();
    return t;
}

void ProfileTable::finalize() {
    p_spline_ = UniformSpline(grid.x_min, grid.h(), p);
    r_spline_ = UniformSpline(grid.x_min, grid.h(), r);
}

double ProfileTable::P(double x, bool* outside) const {
    if (x < grid.x_min) {
        if (outside) *outside = true;
        return 0.5 * norms.l1_Q;
    }
    if (x > grid.x_max) {
        if (outside) *outside = true;
        return 0.0;
    }
    return p_spline_(x);
}

double ProfileTable::R(double x, bool* outside) const {
    if (x < grid.x_min || x > grid.x_max) {
        if (outside) *outside = true;
        return 0.0;
    }
    return r_spline_(x);
}

// ---------------------------------------------------------------- spectrum

namespace {

// diag d (m entries), constant off-diagonal e
int sturm_count(const std::vector<double>& d, double e, double sigma) {
    int count = 0;
    double q = 1.0;
    const double e2 = e * e;
    for (std::size_t i = 0; i < d.size(); ++i) {
        q = d[i] - sigma - (i ? e2 / q : 0.0);
        if (q == 0.0) q = -1e-300;
        if (q < 0) ++count;
    }
    return count;
}

std::vector<double> lowest_eigenvalues(const std::vector<double>& d, double e, int k, double tol) {
    double lo = *std::min_element(d.begin(), d.end()) - 2 * std::abs(e);
    double hi = *std::max_element(d.begin(), d.end()) + 2 * std::abs(e);
    std::vector<double> out(k);
    for (int j = 0; j < k; ++j) {
        double a = lo, b = hi;
        // smallest sigma with count(sigma) >= j+1
        for (int it = 0; it < 200 && b - a > tol * std::max(1.0, std::abs(a)); ++it) {
            double mid = 0.5 * (a + b);
            if (sturm_count(d, e, mid) >= j + 1)
                b = mid;
            else
                a = mid;
        }
        out[j] = 0.5 * (a + b);
        lo = a;
    }
    return out;
}

std::vector<double> tridiag_matrix_diag(const Grid1D& g, double& e) {
    const double h = g.h();
    e = -1.0 / (h * h);
    std::vector<double> d(g.n - 2);
    for (std::size_t i = 1; i + 1 < g.n; ++i) d[i - 1] = 2.0 / (h * h) + 1.0 - 5.0 * std::pow(eval_Q(g.x(i)), 4);
    return d;
}

// inverse iteration with a fixed shift; Thomas sweep with scaled pivots
std::vector<double> inverse_iteration(const std::vector<double>& d, double e, double lambda, double tol, int max_iter) {
    const std::size_t m = d.size();
    double shift = lambda + 1e-10 * std::max(1.0, std::abs(lambda));
    std::vector<double> v(m), w(m), cp(m), dp(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 + 0.1 * std::sin(0.37 * double(i));  // deterministic start
    for (int it = 0; it < max_iter; ++it) {
        double b0 = d[0] - shift;
        if (b0 == 0.0) b0 = 1e-300;
        cp[0] = e / b0;
        dp[0] = v[0] / b0;
        for (std::size_t i = 1; i < m; ++i) {
            double den = d[i] - shift - e * cp[i - 1];
            if (den == 0.0) den = 1e-300;
            cp[i] = e / den;
            dp[i] = (v[i] - e * dp[i - 1]) / den;
        }
        w[m - 1] = dp[m - 1];
        for (std::size_t i = m - 1; i-- > 0;) w[i] = dp[i] - cp[i] * w[i + 1];
        double nw = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            w[i] /= nw;
            dot += w[i] * v[i];
        }
        double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        double change = 1.0 - std::abs(dot) / nv;
        v = w;
        if (it > 0 && change < tol) return v;
    }
    throw Error(ErrorKind::ConvergenceFailure, "inverse iteration did not converge near " + std::to_string(lambda));
}

}  // namespace

std::vector<Eigenpair> spectrum_L(const Grid1D& grid, int n_eigs, const SpectrumOptions& opt) {
    grid.validate();
    if (n_eigs < 1 || std::size_t(n_eigs) > grid.n - 2) throw Error(ErrorKind::InvalidArgument, "bad eigenvalue count");
    double e = 0.0;
    std::vector<double> d = tridiag_matrix_diag(grid, e);
    std::vector<double> lam = lowest_eigenvalues(d, e, n_eigs, opt.tol);

    std::vector<Eigenpair> out(n_eigs);
    const double h = grid.h();
    for (int j = 0; j < n_eigs; ++j) {
        std::vector<double> v = inverse_iteration(d, e, lam[j], 1e-14, opt.max_iter);
        double s = 0.0;
        for (double x : v) s += x * x * h;
        s = 1.0 / std::sqrt(s);
        out[j].vector.assign(grid.n, 0.0);
        // fix the sign: first sizeable entry positive
        double sign = 1.0;
        for (double x : v)
            if (std::abs(x) > 1e-8) {
                sign = x > 0 ? 1.0 : -1.0;
                break;
            }
        for (std::size_t i = 0; i < v.size(); ++i) out[j].vector[i + 1] = sign * s * v[i];
        out[j].value = lam[j];
    }
    if (opt.richardson) {
        double e2 = 0.0;
        std::vector<double> d2 = tridiag_matrix_diag(Grid1D{grid.x_min, grid.x_max, 2 * grid.n - 1}, e2);
        std::vector<double> lam2 = lowest_eigenvalues(d2, e2, n_eigs, opt.tol);
        for (int j = 0; j < n_eigs; ++j) out[j].value = (4.0 * lam2[j] - lam[j]) / 3.0;
    }
    return out;
}

// ---------------------------------------------------------------- identities

bool IdentityReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.pass; });
}

IdentityReport check_identities(const ProfileTable& t) {
    const std::size_t n = t.grid.n;
    const double h = t.grid.h();
    const double l1 = t.norms.l1_Q;
    const double l1sq = l1 * l1;
    std::vector<double> dp = d1_4th(t.p, h), dr = d1_4th(t.r, h);
    std::vector<double> LP(n), LR(n), q3p2(n), q3pr(n), pq3(n), q3r2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = t.grid.x(i), q3 = t.q[i] * t.q[i] * t.q[i];
        LP[i] = 0.5 * t.p[i] + x * dp[i];
        LR[i] = 0.5 * t.r[i] + x * dr[i];
        q3p2[i] = q3 * t.p[i] * t.p[i];
        q3pr[i] = q3 * t.p[i] * t.r[i];
        pq3[i] = t.p[i] * q3;
        q3r2[i] = q3 * t.r[i] * t.r[i];
    }
    auto ip = [&](const std::vector<double>& f, const std::vector<double>& g) { return inner(f, g, h); };

    IdentityReport rep;
    auto add = [&](std::string name, double value, double target, double scale, double tol) {
        IdentityCheck c;
        c.name = std::move(name);
        c.value = value;
        c.target = target;
        c.error = std::abs(value - target) / scale;
        c.tolerance = tol;
        c.pass = c.error <= tol;
        rep.checks.push_back(c);
    };
    add("<P,Q>/|Q|_1^2", ip(t.p, t.q) / l1sq, 1.0 / 16.0, 1.0 / 16.0, 1e-5);
    add("<Q,R>/|Q|_1", ip(t.q, t.r) / l1, -0.75, 0.75, 1e-5);
    add("(<ΛP,Q> - 10<Q^3P^2,Q'>) 8/|Q|_1^2", (ip(LP, t.q) - 10.0 * ip(q3p2, t.q_prime)) * 8.0 / l1sq, 1.0, 1.0, 1e-4);
    add("<ΛR,Q> - 20<Q^3PR,Q'> - 20<PQ^3,Q'>", ip(LR, t.q) - 20.0 * ip(q3pr, t.q_prime) - 20.0 * ip(pq3, t.q_prime), 0.0,
        l1sq, 1e-4);
    add("<Q^3R^2,Q'>", ip(q3r2, t.q_prime), 0.0, l1sq, 1e-10);
    double pn = std::sqrt(ip(t.p, t.p)), qn = std::sqrt(ip(t.q_prime, t.q_prime));
    add("<P,Q'>", ip(t.p, t.q_prime), 0.0, pn * qn, 1e-8);
    return rep;
}

namespace {
constexpr std::size_t kEdge = 10;  // interior = away from the boundary stencils
}

double ground_state_residual(const ProfileTable& t) {
    std::vector<double> q2 = d2_6th(t.q, t.grid.h());
    double m = 0.0;
    for (std::size_t i = kEdge; i + kEdge < t.grid.n; ++i)
        m = std::max(m, std::abs(q2[i] + std::pow(t.q[i], 5) - t.q[i]));
    return m;
}

double scaling_residual(const ProfileTable& t) {
    std::vector<double> l2 = d2_6th(t.lambda_q, t.grid.h());
    double m = 0.0;
    for (std::size_t i = kEdge; i + kEdge < t.grid.n; ++i) {
        double L = -l2[i] + t.lambda_q[i] - 5.0 * std::pow(t.q[i], 4) * t.lambda_q[i];
        m = std::max(m, std::abs(L + 2.0 * t.q[i]));
    }
    return m;
}

double p_equation_residual(const ProfileTable& t) {
    const std::size_t n = t.grid.n;
    std::vector<double> p2 = d2_6th(t.p, t.grid.h());
    std::vector<double> LP(n);
    for (std::size_t i = 0; i < n; ++i) LP[i] = -p2[i] + t.p[i] - 5.0 * std::pow(t.q[i], 4) * t.p[i];
    std::vector<double> dLP = d1_4th(LP, t.grid.h());
    double m = 0.0;
    for (std::size_t i = kEdge; i + kEdge < n; ++i) m = std::max(m, std::abs(dLP[i] - t.lambda_q[i]));
    return m;
}

double energy_of_Q(const ProfileTable& t) {
    std::vector<double> a(t.grid.n), b(t.grid.n);
    for (std::size_t i = 0; i < t.grid.n; ++i) {
        a[i] = t.q_prime[i] * t.q_prime[i];
        b[i] = std::pow(t.q[i], 6);
    }
    return 0.5 * simpson(a, t.grid.h()) - simpson(b, t.grid.h()) / 6.0;
}

// ---------------------------------------------------------------- cache file

namespace {
constexpr char kMagic[8] = {'G', 'K', 'D', 'V', 'P', 'R', 'O', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_profiles(const ProfileTable& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::BadFile, "cannot write " + path);
    f.write(kMagic, 8);
    put(f, kVersion);
    put(f, t.grid.x_min);
    put(f, t.grid.h());
    put(f, std::uint64_t(t.grid.n));
    for (const auto* arr : {&t.q, &t.q_prime, &t.lambda_q, &t.p, &t.r})
        f.write(reinterpret_cast<const char*>(arr->data()), std::streamsize(arr->size() * sizeof(double)));
    put(f, t.norms.l2sq_Q);
    put(f, t.norms.l1_Q);
    if (!f) throw Error(ErrorKind::BadFile, "write failed: " + path);
}

ProfileTable load_profiles(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::BadFile, "cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorKind::BadFile, "magic mismatch in " + path);
    std::uint32_t version = 0;
    get(f, version);
    if (version != kVersion) throw Error(ErrorKind::BadFile, "unsupported profile cache version " + std::to_string(version));
    double x_min = 0, h = 0;
    std::uint64_t n = 0;
    get(f, x_min);
    get(f, h);
    get(f, n);
    if (!f || n < 16 || n > (1ull << 32) || !(h > 0)) throw Error(ErrorKind::BadFile, "corrupt header in " + path);
    ProfileTable t;
    t.grid = Grid1D{x_min, x_min + h * double(n - 1), std::size_t(n)};
    for (auto* arr : {&t.q, &t.q_prime, &t.lambda_q, &t.p, &t.r}) {
        arr->resize(n);
        f.read(reinterpret_cast<char*>(arr->data()), std::streamsize(n * sizeof(double)));
    }
    get(f, t.norms.l2sq_Q);
    get(f, t.norms.l1_Q);
    if (!f) throw Error(ErrorKind::BadFile, "truncated profile cache " + path);
    t.finalize();
    return t;
}

}  // namespace gkdv
