#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "gkdv/spline.hpp"

namespace gkdv {

// Uniform grid with both endpoints included: h = (x_max - x_min)/(n - 1).
struct Grid1D {
    double x_min = -30.0;
    double x_max = 30.0;
    std::size_t n = 6001;

    static Grid1D symmetric(double x_max, std::size_t n) { return {-x_max, x_max, n}; }

    double h() const { return (x_max - x_min) / double(n - 1); }
    double x(std::size_t i) const { return x_min + double(i) * h(); }
    bool is_symmetric() const;
    void validate() const;  // throws InvalidArgument
};

struct ProfileNorms {
    double l2sq_Q = 0.0;  // ||Q||_2^2
    double l1_Q = 0.0;    // ||Q||_1
};

// Sampled Q, Q', ΛQ, P, R.  Immutable once built.
struct ProfileTable {
    Grid1D grid;
    std::vector<double> q, q_prime, lambda_q, p, r;
    ProfileNorms norms;

    // Off-table lookups fall back to the known asymptotics: P -> l1/2 on the
    // left and 0 on the right, R -> 0.  `outside` (if given) is set when that happens
    // and left alone otherwise, so one flag can collect several lookups.
    double P(double x, bool* outside = nullptr) const;
    double R(double x, bool* outside = nullptr) const;

    void finalize();  // rebuild interpolants after filling the arrays

private:
    UniformSpline p_spline_, r_spline_;
};

// ground state, closed form
// closed forms: |Q|_1 = (3^{1/4}/2) B(1/4, 1/2), |Q|_2^2 = √3 π / 2
double l1_norm_Q();
double l2sq_norm_Q();

double eval_Q(double x);
double eval_Q_prime(double x);
double eval_Lambda_Q(double x);  // Q/2 + x Q'

struct BuildOptions {
    // combine solves at h and h/2 to cancel the O(h^2) error of the
    // three-point stencil; off gives the raw second-order solution
    bool richardson = true;
};

ProfileTable build_profiles(const Grid1D& grid, const BuildOptions& opt = {});

struct Eigenpair {
    double value = 0.0;
    std::vector<double> vector;  // on the full grid, zero at both ends, sum v^2 h = 1
};

struct SpectrumOptions {
    bool richardson = true;  // extrapolate eigenvalues from h and h/2
    double tol = 1e-13;
    int max_iter = 200;
};

std::vector<Eigenpair> spectrum_L(const Grid1D& grid, int n_eigs, const SpectrumOptions& opt = {});

struct IdentityCheck {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double error = 0.0;      // relative to target scale
    double tolerance = 0.0;
    bool pass = false;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    bool all_pass() const;
};

IdentityReport check_identities(const ProfileTable& t);

// Residual norms on the interior, high-order finite differences.
double ground_state_residual(const ProfileTable& t);  // |Q'' + Q^5 - Q|_inf
double scaling_residual(const ProfileTable& t);       // |L(ΛQ) + 2Q|_inf
double p_equation_residual(const ProfileTable& t);    // |(LP)' - ΛQ|_inf
double energy_of_Q(const ProfileTable& t);            // 1/2 int Q'^2 - 1/6 int Q^6

// Quadrature / differentiation helpers shared by the other modules.
double simpson(const std::vector<double>& f, double h);
double inner(const std::vector<double>& f, const std::vector<double>& g, double h);
std::vector<double> d1_4th(const std::vector<double>& f, double h);
std::vector<double> d2_6th(const std::vector<double>& f, double h);

void save_profiles(const ProfileTable& t, const std::string& path);
ProfileTable load_profiles(const std::string& path);

}  // namespace gkdv
