#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gkdv/ansatz.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/pde.hpp"
#include "gkdv/profiles.hpp"

using namespace gkdv;

namespace {

const ProfileTable& table() {
    static const ProfileTable t = build_profiles(Grid1D::symmetric(30.0, 6001));
    return t;
}

const BubbleConfig two{{2.0, 1.0}, {1, 1}};

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

TEST_CASE("interaction angles and classification") {
    auto th = theta(two);
    CHECK(th[0] == 0.0);
    CHECK(th[1] == doctest::Approx(std::sqrt(0.5)));
    auto c = classify(two);
    CHECK(c.Kplus == std::vector<int>{0, 1});
    CHECK(c.Kminus.empty());
    CHECK(c.rate[1] == doctest::Approx(0.5 * (1 + 3 * std::sqrt(0.5))));
    CHECK(c.ladder.chain_margin() >= 1e-6);
    CHECK(c.ladder.delta_Kp1 == doctest::Approx(1.0 / 43.0));

    BubbleConfig mixed{{4.0, 1.0}, {1, -1}};
    auto cm = classify(mixed);
    CHECK(theta(mixed)[1] == doctest::Approx(-0.5));
    CHECK(cm.Kplus == std::vector<int>{0});
    CHECK(cm.Kminus == std::vector<int>{1});
    CHECK(cm.ladder.chain_margin() >= 1e-6);

    // the first bubble is always unstable
    CHECK(classify(BubbleConfig{{3.0}, {-1}}).Kplus == std::vector<int>{0});
}

TEST_CASE("config validation") {
    CHECK(kind_of([] { BubbleConfig{{1.0, 2.0}, {1, 1}}.validate(); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { BubbleConfig{{2.0, 1.0}, {1, 0}}.validate(); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { BubbleConfig{{2.0, 1.0}, {1}}.validate(); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { derive(two, ParamState::self_similar(two, -5.0), 3.45); }) == ErrorKind::InvalidArgument);
    auto st = ParamState::self_similar(two, -1e4);
    st.b[1].y = st.b[0].y - 2.0 * st.b[0].mu * st.b[0].tau - 0.5;  // sit on the neighbour's tail origin
    CHECK(kind_of([&] { derive(two, st, 3.45); }) == ErrorKind::BubbleCollision);
}

TEST_CASE("energy forms agree on random configurations") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> kd(1, 6), sd(0, 1);
    std::uniform_real_distribution<double> ld(std::log(0.05), std::log(20.0));
    ProfileNorms nm{l2sq_norm_Q(), l1_norm_Q()};
    for (int i = 0; i < 1000; ++i) {
        BubbleConfig b;
        int K = kd(rng);
        for (int k = 0; k < K; ++k) b.ells.push_back(std::exp(ld(rng)));
        std::sort(b.ells.begin(), b.ells.end(), std::greater<>());
        for (int k = 0; k < K; ++k) b.signs.push_back(sd(rng) ? 1 : -1);
        auto me = predict_mass_energy(b, nm);
        // oracle: direct double sum l_k (1 + 2 sum_{j<k} ε_k ε_j √(l_k/l_j))
        double e = 0.0;
        for (int k = 0; k < K; ++k) {
            double t = 0.0;
            for (int j = 0; j < k; ++j) t += b.signs[k] * b.signs[j] * std::sqrt(b.ells[k] / b.ells[j]);
            e += b.ells[k] * (1 + 2 * t);
        }
        e *= nm.l1_Q * nm.l1_Q / 16.0;
        CHECK(me.energy == doctest::Approx(e).epsilon(1e-12));
        CHECK(std::abs(me.energy - me.energy_abel) <= 1e-12 * std::abs(me.energy_abel));
        CHECK(me.energy_abel > 0.0);
        CHECK(me.mass == doctest::Approx(K * nm.l2sq_Q));
    }
}

TEST_CASE("single bubble at the self-similar point") {
    BubbleConfig one{{1.5}, {1}};
    auto st = ParamState::self_similar(one, -1e3);
    auto d = derive(one, st, l1_norm_Q());
    CHECK(d.r[0] == 0.0);
    CHECK(d.r_closed[0] == 0.0);
    CHECK(d.mu_tilde[0] == 1.5);
    // a = 0 gives e = s/(2 mu^2 tau) = l/2
    CHECK(d.e[0] == doctest::Approx(0.75));
    auto b = bars(one, st);
    CHECK(b.mu_bar[0] == 0.0);
    CHECK(b.tau_bar[0] == 0.0);
    CHECK(b.y_bar[0] == 0.0);
}

TEST_CASE("r_k: tails versus closed form") {
    const double l1 = l1_norm_Q();
    double gap4 = 0.0;
    for (double s : {-1e4, -1e5}) {
        auto d = derive(two, ParamState::self_similar(two, s), l1);
        double gap = std::abs(d.r[1] - d.r_closed[1]) / std::abs(d.r_closed[1]);
        CHECK(gap <= 2.0 / std::sqrt(-s));
        if (s == -1e4) gap4 = gap;
        else CHECK(gap <= 0.5 * gap4 + 1e-6);
        // oracle: the neighbour's tail at y_2, by hand
        double tail = -0.5 * l1 * 2.0 * std::sqrt(-2.0 * s / 8.0) * std::pow(std::abs(2.0 * s), -1.5);
        CHECK(d.r[1] == doctest::Approx(tail).epsilon(1e-12));
    }
    BubbleConfig f = two;
    f.c0 = 1.0;
    f.c1 = 0.5;
    f.lambda0 = 0.5;
    auto a = derive(f, ParamState::self_similar(f, -1e4), l1);
    auto b = derive(f, ParamState::self_similar(f, -1e5), l1);
    double ga = std::abs(a.r[1] / a.r_closed[1] - 1), gb = std::abs(b.r[1] / b.r_closed[1] - 1);
    CHECK(ga > 0.0);
    CHECK(gb <= 0.5 * ga + 1e-6);
}

TEST_CASE("sign symmetry") {
    BubbleConfig neg{{2.0, 1.0}, {-1, -1}};
    const double s = -300.0;
    auto st = ParamState::self_similar(two, s);
    st.b[0].a = 1e-4;
    Grid1D g{-900.0, 120.0, 20401};
    auto A = build_field(two, st, g, table());
    auto B = build_field(neg, st, g, table());
    for (std::size_t i = 0; i < g.n; i += 13) CHECK(B.v[i] == doctest::Approx(-A.v[i]).epsilon(1e-14).scale(1e-300));
    auto da = derive(two, st, l1_norm_Q()), db = derive(neg, st, l1_norm_Q());
    // r_k carries ε_k ε_j, so it does not change
    CHECK(db.r[1] == da.r[1]);
    CHECK(theta(neg) == theta(two));
    ProfileNorms nm{l2sq_norm_Q(), l1_norm_Q()};
    CHECK(predict_mass_energy(neg, nm).energy == predict_mass_energy(two, nm).energy);
}

TEST_CASE("field is affine in a_k") {
    const double s = -300.0;
    Grid1D g{-900.0, 120.0, 20401};
    auto st = ParamState::self_similar(two, s);
    auto V0 = build_field(two, st, g, table()).v;
    st.b[1].a = 1e-3;
    auto V1 = build_field(two, st, g, table()).v;
    st.b[1].a = 2e-3;
    auto V2 = build_field(two, st, g, table()).v;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g.n; ++i) {
        num += std::pow(V2[i] - V0[i] - 2 * (V1[i] - V0[i]), 2);
        den += std::pow(V1[i] - V0[i], 2);
    }
    CHECK(den > 0);
    CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("built field: mass, energy and far-left tail at s = -1e4") {
    const double s = -1e4;
    auto st = ParamState::self_similar(two, s);
    PeriodicGrid yg{-2.6e4, 2.84e4, 1u << 19};
    auto A = build_field(two, st, yg.nodes(), table());
    Field f{1.0, yg, A.v};
    auto c = conserved(f);
    const double l1 = table().norms.l1_Q;
    CHECK(c.mass == doctest::Approx(2 * table().norms.l2sq_Q).epsilon(0.01));
    double e_pred = -(l1 * l1 / (32 * s)) * (2.0 + 1.0 * (1 + 2 * std::sqrt(0.5)));
    CHECK(c.energy == doctest::Approx(e_pred).epsilon(0.03));

    double g = gamma_of(two);
    double y = st.b[1].y - 10 * g * 1.0 * std::abs(s);
    FieldOptions fo;
    fo.window = 0.0;
    std::vector<double> ys{y};
    for (double v = st.b[1].y - 40; v <= st.b[0].y + 80; v += 0.5) ys.push_back(v);
    auto B = build_field(two, st, ys, table(), fo);
    double pred = -0.5 * l1 * (1.0 / std::sqrt(2.0) + 1.0) * std::sqrt(-2 * s) * std::pow(std::abs(y), -1.5);
    CHECK(B.v[0] == doctest::Approx(pred).epsilon(0.05));
}

TEST_CASE("grid checks") {
    auto st = ParamState::self_similar(two, -1e3);
    CHECK(kind_of([&] { build_field(two, st, Grid1D{-100.0, 100.0, 2001}, table()); }) == ErrorKind::GridTooNarrow);
    FieldOptions strict;
    strict.strict_profile_domain = true;
    CHECK(kind_of([&] { build_field(two, st, Grid1D{-2600.0, 200.0, 28001}, table(), strict); }) ==
          ErrorKind::ProfileDomainExceeded);
}

TEST_CASE("cutoff helpers") {
    CHECK(smoothstep(-1.0) == 0.0);
    CHECK(smoothstep(2.0) == 1.0);
    CHECK(smoothstep(0.5) == 0.5);
    const double g = 0.1;
    CHECK(chi(-3 * g, g) == 0.0);
    CHECK(chi(-2 * g, g) == 0.0);
    CHECK(chi(-g, g) == 1.0);
    CHECK(chi(5.0, g) == 1.0);
    double prev = 0.0;
    for (double z = -2 * g; z <= -g; z += g / 50) {
        CHECK(chi(z, g) >= prev);
        prev = chi(z, g);
    }
    CHECK(gamma_of(two) > 0.0);
    CHECK(gamma_of(BubbleConfig{{1.0}, {1}}) == doctest::Approx(0.25));
}
