#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gkdv/ansatz.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/pde.hpp"
#include "gkdv/profiles.hpp"

using namespace gkdv;

namespace {

Field soliton(const PeriodicGrid& g, double shift = 0.0) {
    Field f{0.0, g, {}};
    for (std::size_t j = 0; j < g.n; ++j) f.u.push_back(eval_Q(g.x(j) - shift));
    return f;
}

double l2_error_vs_Q(const Field& F, double shift) {
    double e = 0.0;
    for (std::size_t j = 0; j < F.grid.n; ++j) e += std::pow(F.u[j] - eval_Q(F.grid.x(j) - shift), 2);
    return std::sqrt(e * F.grid.h());
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::BadFile;
}

}  // namespace

TEST_CASE("spectral derivative of a smooth periodic function") {
    PeriodicGrid g{0.0, 2 * M_PI, 64};
    std::vector<double> u;
    for (std::size_t j = 0; j < g.n; ++j) u.push_back(std::sin(3 * g.x(j)));
    Spectral sp(g);
    auto d1 = sp.derivative(u, 1), d3 = sp.derivative(u, 3);
    for (std::size_t j = 0; j < g.n; ++j) {
        CHECK(d1[j] == doctest::Approx(3 * std::cos(3 * g.x(j))).scale(1.0).epsilon(1e-12));
        CHECK(d3[j] == doctest::Approx(-27 * std::cos(3 * g.x(j))).scale(27.0).epsilon(1e-12));
    }
}

TEST_CASE("soliton propagation") {
    PeriodicGrid g{-32.0, 64.0, 1024};
    auto f = soliton(g);
    auto c0 = conserved(f);
    CHECK(c0.mass == doctest::Approx(l2sq_norm_Q()).epsilon(1e-12));
    CHECK(std::abs(c0.energy) < 1e-12);
    for (Scheme sc : {Scheme::IntegratingFactorRK4, Scheme::ETDRK4}) {
        SolverOptions o;
        o.scheme = sc;
        o.dt = 2.5e-4;
        auto F = evolve(f, 1.0, o);
        CHECK(F.t == 1.0);
        CHECK(l2_error_vs_Q(F, 1.0) < 1e-6);
        auto c1 = conserved(F);
        CHECK(std::abs(c1.mass / c0.mass - 1) < 1e-10);
    }
    // adaptive step
    auto F = evolve(f, 1.0, SolverOptions{});
    CHECK(l2_error_vs_Q(F, 1.0) < 1e-6);
}

TEST_CASE("spectral convergence in space") {
    SolverOptions o;
    o.dt = 1e-4;
    o.scheme = Scheme::ETDRK4;
    std::vector<double> err;
    for (std::size_t n : {256u, 512u}) {
        PeriodicGrid g{-32.0, 64.0, n};
        err.push_back(l2_error_vs_Q(evolve(soliton(g), 0.2, o), 0.2));
    }
    CHECK(err[0] / err[1] >= 100.0);
}

TEST_CASE("zero data and translation") {
    PeriodicGrid g{-32.0, 64.0, 512};
    Field z{0.0, g, std::vector<double>(g.n, 0.0)};
    SolverOptions o;
    o.dt = 1e-3;
    auto Z = evolve(z, 0.5, o);
    for (double v : Z.u) CHECK(v == 0.0);

    // evolution commutes with shifts by whole grid cells
    auto f = soliton(g, -3.0);
    for (std::size_t j = 0; j < g.n; ++j) f.u[j] += 0.3 * std::exp(-std::pow(g.x(j) - 5.0, 2));
    const std::size_t m = 37;
    Field fs = f;
    for (std::size_t j = 0; j < g.n; ++j) fs.u[(j + m) % g.n] = f.u[j];
    auto A = evolve(f, 0.3, o), B = evolve(fs, 0.3, o);
    double worst = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) worst = std::max(worst, std::abs(B.u[(j + m) % g.n] - A.u[j]));
    CHECK(worst < 1e-12);
}

TEST_CASE("output series and errors") {
    PeriodicGrid g{-32.0, 64.0, 512};
    auto f = soliton(g);
    SolverOptions o;
    o.dt = 1e-3;
    int seen = 0;
    auto out = evolve(f, {0.1, 0.2, 0.3}, o, nullptr, [&](const Field&) { return ++seen < 2; });
    CHECK(out.size() == 2);
    CHECK(out[1].t == doctest::Approx(0.2));

    o.dt = 0.5;
    CHECK(kind_of([&] { evolve(f, 1.0, o); }) == ErrorKind::CFLViolation);
    CHECK(kind_of([&] { evolve(f, -1.0, SolverOptions{}); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { PeriodicGrid{0.0, 1.0, 1000}.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("fit_bubbles") {
    PeriodicGrid g{-40.0, 80.0, 8192};
    Field f{1.0, g, {}};
    // scales 0.5 at x = -10 (negative) and 2 at x = 15
    for (std::size_t j = 0; j < g.n; ++j) {
        double x = g.x(j);
        f.u.push_back(-std::pow(0.5, -0.5) * eval_Q((x + 10) / 0.5) + std::pow(2.0, -0.5) * eval_Q((x - 15) / 2.0));
    }
    auto pk = fit_bubbles(f, 2);
    REQUIRE(pk.size() == 2);
    CHECK(pk[0].position == doctest::Approx(-10.0).epsilon(1e-4));
    CHECK(pk[1].position == doctest::Approx(15.0).epsilon(1e-4));
    CHECK(pk[0].height < 0);
    CHECK(pk[0].lambda_hat() == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(pk[1].lambda_hat() == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(kind_of([&] { fit_bubbles(f, 3); }) == ErrorKind::BubbleCountMismatch);
}

TEST_CASE("frame map") {
    auto a = to_rescaled(1.0, 3.0);
    CHECK(a.a == doctest::Approx(-0.5));
    CHECK(a.b == doctest::Approx(3.0));
    CHECK(to_physical(-1e4, 0.0).a == doctest::Approx(7.0710678118654752e-3).epsilon(1e-12));
    for (double t : {1e-3, 0.1, 2.0})
        for (double x : {-50.0, 0.0, 1.7}) {
            auto r = to_rescaled(t, x);
            auto p = to_physical(r.a, r.b);
            CHECK(std::abs(p.a - t) <= 1e-14 * t);
            CHECK(std::abs(p.b - x) <= 1e-14 * std::max(1.0, std::abs(x)));
        }
    CHECK(amplitude_to_physical(-2.0, amplitude_to_rescaled(-2.0, 1.25)) == doctest::Approx(1.25));
    CHECK(amplitude_to_rescaled(-0.5, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    PeriodicGrid g{-32.0, 64.0, 256};
    auto f = soliton(g);
    f.t = 0.25;
    fs::path p = fs::temp_directory_path() / "gkdv_test.field";
    save_field(f, p.string());
    auto h = load_field(p.string());
    CHECK(h.t == f.t);
    CHECK(h.grid.n == g.n);
    CHECK(h.grid.L == g.L);
    CHECK(h.grid.x0 == -32.0);
    CHECK(h.u == f.u);
    fs::resize_file(p, 100);
    CHECK(kind_of([&] { load_field(p.string()); }) == ErrorKind::BadFile);
    {
        std::ofstream o(p, std::ios::binary | std::ios::trunc);
        o << "not a field file at all";
    }
    CHECK(kind_of([&] { load_field(p.string()); }) == ErrorKind::BadFile);
    fs::remove(p);
}

TEST_CASE("residual of the rescaled flow") {
    static const ProfileTable prof = build_profiles(Grid1D::symmetric(30.0, 6001));
    auto grid_for = [](double s, double l) {
        double yK = 2 * s / (l * l);
        double left = 1.3 * yK - 50, L = 60 - left;
        std::size_t n = 16;
        while (L / double(n) > 0.1) n *= 2;
        return PeriodicGrid{left, L, n};
    };
    // Q-only single bubble: the residual is the (1/2s) commutator and halves as |s| doubles
    BubbleConfig one{{1.0}, {1}};
    ResidualOptions ro;
    ro.field.p_correction = false;
    auto ss = [&](double s) { return ParamState::self_similar(one, s); };
    double r1 = residual(one, ss, -1e3, grid_for(-1e3, 1.0), prof, ro).l2;
    double r2 = residual(one, ss, -2e3, grid_for(-2e3, 1.0), prof, ro).l2;
    CHECK(r2 / r1 >= std::pow(2.0, -2.2));
    CHECK(r2 / r1 <= std::pow(2.0, -0.8));

    // with the P-correction the two-bubble residual decays faster than 1/|s|
    BubbleConfig two{{2.0, 1.0}, {1, 1}};
    auto st2 = [&](double s) { return ParamState::self_similar(two, s); };
    double a = residual(two, st2, -1e3, grid_for(-1e3, 1.0), prof).l2;
    double b = residual(two, st2, -4e3, grid_for(-4e3, 1.0), prof).l2;
    double p = std::log(a / b) / std::log(4.0);
    CHECK(p >= 1.4);
    CHECK(p <= 2.1);

    ResidualOptions coarse;
    coarse.ds_rel = 1e-2;
    CHECK(kind_of([&] { residual(two, st2, -1e3, grid_for(-1e3, 1.0), prof, coarse); }) == ErrorKind::TrajectoryTooSparse);
}

TEST_CASE("ansatz in the physical frame") {
    static const ProfileTable prof = build_profiles(Grid1D::symmetric(30.0, 6001));
    BubbleConfig two{{2.0, 1.0}, {1, 1}};
    const double s = -50.0;
    PeriodicGrid g{-15.0, 26.0, 4096};
    auto f = ansatz_field(two, ParamState::self_similar(two, s), g, prof);
    CHECK(f.t == doctest::Approx(0.1));
    auto pk = fit_bubbles(f, 2);
    // bubbles at x = 2 s t / l^2 with scale l t
    CHECK(pk[0].position == doctest::Approx(-10.0).epsilon(1e-3));
    CHECK(pk[1].position == doctest::Approx(-2.5).epsilon(2e-3));
    CHECK(pk[0].lambda_hat() == doctest::Approx(0.1).epsilon(0.03));
    CHECK(pk[1].lambda_hat() == doctest::Approx(0.2).epsilon(0.06));
}
