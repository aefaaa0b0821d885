#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "gkdv/errors.hpp"
#include "gkdv/profiles.hpp"

using namespace gkdv;

namespace {

const ProfileTable& table() {
    static const ProfileTable t = build_profiles(Grid1D::symmetric(30.0, 6001));
    return t;
}

// adaptive Simpson, independent of the library quadrature
double asr(const std::function<double(double)>& f, double a, double b, double eps, double whole, int depth) {
    double c = 0.5 * (a + b), l = 0.5 * (a + c), r = 0.5 * (c + b);
    double fa = f(a), fb = f(b), fc = f(c);
    double left = (c - a) / 6 * (fa + 4 * f(l) + fc), right = (b - c) / 6 * (fc + 4 * f(r) + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15 * eps) return left + right + (left + right - whole) / 15;
    return asr(f, a, c, eps / 2, left, depth - 1) + asr(f, c, b, eps / 2, right, depth - 1);
}
double integrate(const std::function<double(double)>& f, double a, double b) {
    double c = 0.5 * (a + b);
    return asr(f, a, b, 1e-13, (b - a) / 6 * (f(a) + 4 * f(c) + f(b)), 50);
}

}  // namespace

TEST_CASE("Q solves Q'' + Q^5 = Q") {
    const double h = 1e-3;
    for (double x : {-3.0, -1.0, -0.2, 0.0, 0.4, 2.5}) {
        double q2 = (eval_Q(x + h) - 2 * eval_Q(x) + eval_Q(x - h)) / (h * h);
        CHECK(std::abs(q2 + std::pow(eval_Q(x), 5) - eval_Q(x)) < 1e-5);  // O(h^2) stencil
        double dq = (eval_Q(x + h) - eval_Q(x - h)) / (2 * h);
        CHECK(eval_Q_prime(x) == doctest::Approx(dq).epsilon(1e-6));
    }
    CHECK(eval_Q(0.0) == doctest::Approx(std::pow(3.0, 0.25)));
}

TEST_CASE("norms of Q: closed forms, quadrature, table") {
    double l2 = integrate([](double x) { return eval_Q(x) * eval_Q(x); }, -40, 40);
    double l1 = integrate([](double x) { return eval_Q(x); }, -60, 60);
    CHECK(l2 == doctest::Approx(std::sqrt(3.0) * M_PI / 2).epsilon(1e-11));
    CHECK(l1 == doctest::Approx(3.450821807669).epsilon(1e-11));
    CHECK(l1_norm_Q() == doctest::Approx(l1).epsilon(1e-12));
    CHECK(l2sq_norm_Q() == doctest::Approx(l2).epsilon(1e-12));
    const auto& t = table();
    CHECK(t.norms.l2sq_Q == doctest::Approx(l2).epsilon(1e-9));
    CHECK(t.norms.l1_Q == doctest::Approx(l1).epsilon(1e-7));
}

TEST_CASE("corrector identities at the default grid") {
    const auto& t = table();
    double l1 = t.norms.l1_Q;
    CHECK(std::abs(inner(t.p, t.q, t.grid.h()) / (l1 * l1) / (1.0 / 16.0) - 1.0) < 1e-5);
    CHECK(std::abs(inner(t.q, t.r, t.grid.h()) / l1 / (-0.75) - 1.0) < 1e-5);
    auto rep = check_identities(t);
    CHECK(rep.all_pass());
    for (const auto& c : rep.checks) CHECK_MESSAGE(c.pass, c.name);
}

TEST_CASE("P plateau, R symmetry and profile equations") {
    const auto& t = table();
    CHECK(std::abs(t.p.front() - 0.5 * t.norms.l1_Q) < 1e-3);
    CHECK(std::abs(t.p.back()) < 1e-6);
    for (std::size_t i = 0; i < t.grid.n; i += 97) CHECK(t.r[i] == doctest::Approx(t.r[t.grid.n - 1 - i]).epsilon(1e-12));
    CHECK(ground_state_residual(t) < 1e-8);
    CHECK(scaling_residual(t) < 1e-6);
    CHECK(p_equation_residual(t) < 1e-4);
    CHECK(std::abs(energy_of_Q(t)) < 1e-10);

    bool outside = false;
    CHECK(t.P(-100.0, &outside) == doctest::Approx(0.5 * t.norms.l1_Q));
    CHECK(outside);
    outside = false;
    t.P(0.3, &outside);
    t.R(-0.3, &outside);
    CHECK_FALSE(outside);
}

TEST_CASE("second-order convergence of the raw discretization") {
    std::vector<double> err;
    for (std::size_t n : {3001u, 6001u}) {
        auto t = build_profiles(Grid1D::symmetric(30.0, n), {false});
        double l1 = t.norms.l1_Q;
        err.push_back(std::abs(inner(t.p, t.q, t.grid.h()) / (l1 * l1) - 1.0 / 16.0));
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("spectrum of L against a dense eigensolver") {
    Grid1D g = Grid1D::symmetric(15.0, 2001);
    const double h = g.h();
    const int m = int(g.n) - 2;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        double x = g.x(std::size_t(i + 1)), q = eval_Q(x);
        A(i, i) = 2.0 / (h * h) + 1.0 - 5.0 * q * q * q * q;
        if (i > 0) A(i, i - 1) = A(i - 1, i) = -1.0 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    SpectrumOptions so;
    so.richardson = false;
    auto eig = spectrum_L(g, 3, so);
    REQUIRE(eig.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(eig[k].value == doctest::Approx(es.eigenvalues()[k]).epsilon(1e-9).scale(1.0));

    auto ex = spectrum_L(Grid1D::symmetric(30.0, 6001), 3);
    CHECK(ex[0].value == doctest::Approx(-8.0).epsilon(1e-7));
    CHECK(std::abs(ex[1].value) < 1e-6);
    CHECK(ex[2].value > 0.5);
}

TEST_CASE("argument checks") {
    CHECK_THROWS_AS(build_profiles(Grid1D::symmetric(30.0, 1001)), Error);  // h > 0.02
    try {
        build_profiles(Grid1D::symmetric(5.0, 501));
        FAIL("expected DomainTooSmall");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DomainTooSmall);
    }
    try {
        build_profiles(Grid1D{-30.0, 20.0, 5001});
        FAIL("expected InvalidArgument");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
}

TEST_CASE("profile file round trip") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "gkdv_test_profiles.bin";
    const auto& t = table();
    save_profiles(t, p.string());
    auto u = load_profiles(p.string());
    CHECK(u.grid.n == t.grid.n);
    CHECK(u.p == t.p);
    CHECK(u.r == t.r);
    CHECK(u.norms.l1_Q == t.norms.l1_Q);
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    try {
        load_profiles(p.string());
        FAIL("expected BadFile");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BadFile);
    }
    fs::remove(p);
}
