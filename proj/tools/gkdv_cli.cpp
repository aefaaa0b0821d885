// gkdv: profiles, verification suite, modulation runs, shooting and PDE evolution.
//
// Exit codes: 0 success, 1 check failure / numerical error, 2 configuration or I/O failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gkdv/ansatz.hpp"
#include "gkdv/config.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/modulation.hpp"
#include "gkdv/pde.hpp"
#include "gkdv/profiles.hpp"
#include "gkdv/suite.hpp"

namespace fs = std::filesystem;
using namespace gkdv;

namespace {

struct Args {
    std::string config, out, cache = "cache";
    double xmax = 0.0;
    std::size_t n = 0;
    double sn = 0.0, s0 = 0.0;
    std::string tend = "2x";
    std::vector<std::string> skip;
    int threads = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    // subcommand specific
    std::vector<double> xi, zeta;
    double s = -50.0;
    std::string init = "ansatz";
    std::size_t nx = 4096;
    int frames = 20;
};

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::DomainTooSmall:
        case ErrorKind::BadConfig:
        case ErrorKind::BadFile:
            return 2;
        default:
            return 1;
    }
}

ScenarioConfig scenario(const Args& a) {
    ScenarioConfig sc = a.config.empty() ? default_config() : load_config(a.config);
    if (a.xmax > 0) sc.grid = Grid1D::symmetric(a.xmax, sc.grid.n);
    if (a.n > 0) sc.grid.n = a.n;
    if (a.sn != 0.0) sc.Sn = a.sn;
    if (a.s0 != 0.0) sc.S0 = a.s0;
    if (!a.out.empty()) sc.out_dir = a.out;
    if (a.seed_set) sc.seed = a.seed;
    sc.validate();
    return sc;
}

std::string cache_dir(const Args& a) {
    if (const char* env = std::getenv("GKDV_CACHE"); env && *env) return env;
    return a.cache;
}

fs::path cache_path(const std::string& dir, const Grid1D& g) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "profiles_%.6g_%.6g_%zu.bin", g.x_min, g.x_max, g.n);
    return fs::path(dir) / buf;
}

ProfileTable obtain_profiles(const ScenarioConfig& sc, const std::string& dir, bool* hit, double* seconds) {
    fs::path p = cache_path(dir, sc.grid);
    auto t0 = std::chrono::steady_clock::now();
    ProfileTable t;
    if (fs::exists(p)) {
        t = load_profiles(p.string());
        *hit = true;
    } else {
        t = build_profiles(sc.grid);
        std::error_code ec;
        fs::create_directories(dir, ec);
        save_profiles(t, p.string());
        *hit = false;
    }
    *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "%s %s\n", *hit ? "cache hit" : "cache miss", p.string().c_str());
    return t;
}

std::ofstream open_out(const ScenarioConfig& sc, const std::string& name) {
    std::error_code ec;
    fs::create_directories(sc.out_dir, ec);
    fs::path p = fs::path(sc.out_dir) / name;
    std::ofstream o(p, std::ios::trunc);
    if (!o) throw Error(ErrorKind::BadFile, "cannot write " + p.string());
    std::fprintf(stderr, "writing %s\n", p.string().c_str());
    return o;
}

void write_trajectory(std::ostream& o, const ModulationModel& m, const Trajectory& tr) {
    const int K = m.cfg.K();
    o << "s";
    for (int k = 1; k <= K; ++k)
        for (const char* c : {"tau", "mu", "y", "a", "mu_bar", "tau_bar", "y_bar", "f", "r", "e"}) o << ',' << c << '_' << k;
    o << ",N\n";
    for (const auto& p : tr.points) {
        Bars br = bars(m.cfg, p.state);
        o << fmt17(p.state.s);
        for (int k = 0; k < K; ++k) {
            const auto& b = p.state.b[k];
            for (double v : {b.tau, b.mu, b.y, b.a, br.mu_bar[k], br.tau_bar[k], br.y_bar[k], p.derived.f[k], p.derived.r[k],
                             p.derived.e[k]})
                o << ',' << fmt17(v);
        }
        o << ',' << fmt17(p.N) << '\n';
    }
}

std::vector<double> pad(std::vector<double> v, std::size_t n, const char* what) {
    if (v.empty()) v.assign(n, 0.0);
    if (v.size() != n)
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " needs " + std::to_string(n) + " entries");
    return v;
}

int cmd_profiles(const Args& a) {
    ScenarioConfig sc = scenario(a);
    bool hit;
    double secs;
    ProfileTable t = obtain_profiles(sc, cache_dir(a), &hit, &secs);
    std::printf("%s\n", hit ? "cache hit" : "cache miss");
    std::printf("grid x in [%s, %s], n = %zu, %.2f s\n", fmt17(t.grid.x_min).c_str(), fmt17(t.grid.x_max).c_str(), t.grid.n,
                secs);
    std::printf("|Q|_2^2 = %s\n|Q|_1   = %s\n", fmt17(t.norms.l2sq_Q).c_str(), fmt17(t.norms.l1_Q).c_str());
    IdentityReport r = check_identities(t);
    for (const auto& c : r.checks)
        std::printf("%-4s %-40s value=%s target=%s err=%.3e tol=%.1e\n", c.pass ? "ok" : "BAD", c.name.c_str(),
                    fmt17(c.value).c_str(), fmt17(c.target).c_str(), c.error, c.tolerance);
    return r.all_pass() ? 0 : 1;
}

int cmd_verify(const Args& a) {
    ScenarioConfig sc = scenario(a);
    bool hit;
    double secs;
    ProfileTable t = obtain_profiles(sc, cache_dir(a), &hit, &secs);
    SuiteOptions opt;
    opt.scenario = sc;
    opt.skip = {a.skip.begin(), a.skip.end()};
    opt.threads = a.threads;
    opt.verbose = true;
    SuiteReport rep = run_suite(t, hit ? 0.0 : secs, opt);
    {
        std::error_code ec;
        fs::create_directories(sc.out_dir, ec);
    }
    write_report_csv(rep, (fs::path(sc.out_dir) / "run_report.csv").string());
    for (int id : rep.criteria())
        std::printf("%s criterion %d (%.1f s)\n", rep.criterion_pass(id) ? "PASS" : "FAIL", id, rep.criterion_seconds(id));
    return rep.all_pass() ? 0 : 1;
}

int cmd_modulate(const Args& a) {
    ScenarioConfig sc = scenario(a);
    ModulationModel m(sc.bubbles, l1_norm_Q());
    auto init = init_params(m, sc.Sn, pad(a.xi, m.cls.Kplus.size(), "--xi"), pad(a.zeta, sc.bubbles.K(), "--zeta"),
                            {false});
    IntegrateOptions io;
    io.stop_on_exit = false;
    Trajectory tr = integrate(m, init, sc.S0, io);
    auto o = open_out(sc, "trajectory.csv");
    write_trajectory(o, m, tr);
    std::printf("reason=%s s_end=%s N_end=%s steps=%ld\n", to_string(tr.reason), fmt17(tr.back().state.s).c_str(),
                fmt17(tr.back().N).c_str(), tr.steps);
    return 0;
}

int cmd_shoot(const Args& a) {
    ScenarioConfig sc = scenario(a);
    ModulationModel m(sc.bubbles, l1_norm_Q());
    ShootOptions so;
    so.threads = a.threads;
    ShootResult r = shoot(m, sc.Sn, sc.S0, 0.5, so);
    {
        auto o = open_out(sc, "shooting.csv");
        o << "iteration";
        for (std::size_t i = 0; i < r.xi.size(); ++i) o << ",xi_" << m.cls.Kplus[i] + 1;
        for (std::size_t k = 0; k < r.zeta.size(); ++k) o << ",zeta_" << k + 1;
        o << ",exit_s,N_exit\n";
        for (const auto& row : r.history) {
            o << row.iteration;
            for (double v : row.xi) o << ',' << fmt17(v);
            for (double v : row.zeta) o << ',' << fmt17(v);
            o << ',' << fmt17(row.exit_s) << ',' << fmt17(row.N_exit) << '\n';
        }
    }
    {
        auto o = open_out(sc, "trajectory.csv");
        write_trajectory(o, m, r.trajectory);
    }
    std::printf("converged=%d iterations=%d N(S0)=%s\n", int(r.converged), r.iterations, fmt17(r.N_end).c_str());
    if (!r.converged) {
        std::fprintf(stderr, "error: kind=%s message=no candidate reached S0 with N <= 1\n", to_string(ErrorKind::NoConvergence));
        return 1;
    }
    return 0;
}

int cmd_evolve(const Args& a) {
    ScenarioConfig sc = scenario(a);
    if (a.init != "ansatz") throw Error(ErrorKind::InvalidArgument, "--init supports only 'ansatz'");
    if (!(a.s < 0)) throw Error(ErrorKind::InvalidArgument, "--s must be negative");
    bool hit;
    double secs;
    ProfileTable prof = obtain_profiles(sc, cache_dir(a), &hit, &secs);
    const BubbleConfig& cfg = sc.bubbles;
    auto st = ParamState::self_similar(cfg, a.s);
    const double t0 = 1.0 / std::sqrt(-2.0 * a.s);
    double t_end;
    if (!a.tend.empty() && a.tend.back() == 'x')
        t_end = std::stod(a.tend.substr(0, a.tend.size() - 1)) * t0;
    else
        t_end = std::stod(a.tend);
    if (!(t_end > t0)) throw Error(ErrorKind::InvalidArgument, "--tend must exceed the initial time " + fmt17(t0));

    // physical grid: the leftmost bubble sits at 2 s t / l_K^2
    double x_left = 3.0 * a.s * t0 / (cfg.ells.back() * cfg.ells.back());
    double x_right = 11.0 * std::max(1.0, cfg.ells.front() * t0 / 0.2);
    PeriodicGrid g{x_left, x_right - x_left, a.nx};
    g.validate();
    const double width = cfg.ells.back() * t0;
    if (g.h() > width / 4.0)
        std::fprintf(stderr, "warning: grid spacing %.3g does not resolve the smallest bubble (width %.3g)\n", g.h(), width);
    FieldOptions fo;
    fo.window = sc.window;
    Field f = ansatz_field(cfg, st, g, prof, fo);

    std::vector<double> ts;
    for (int i = 1; i <= a.frames; ++i) ts.push_back(t0 + (t_end - t0) * i / a.frames);
    auto o = open_out(sc, "evolve.csv");
    o << "t,s,mass,energy,max_abs";
    for (int k = 1; k <= cfg.K(); ++k) o << ",height_" << k << ",position_" << k << ",lambda_hat_" << k;
    o << '\n';
    auto row = [&](const Field& F) {
        auto c = conserved(F);
        double mx = 0.0;
        for (double v : F.u) mx = std::max(mx, std::abs(v));
        o << fmt17(F.t) << ',' << fmt17(-0.5 / (F.t * F.t)) << ',' << fmt17(c.mass) << ',' << fmt17(c.energy) << ','
          << fmt17(mx);
        auto pk = fit_bubbles(F, cfg.K());
        for (int k = 0; k < cfg.K(); ++k) {
            const Peak& p = pk[cfg.K() - 1 - k];  // smallest scale is leftmost
            o << ',' << fmt17(p.height) << ',' << fmt17(p.position) << ',' << fmt17(p.lambda_hat());
        }
        o << '\n';
        return true;
    };
    row(f);
    EvolveStats es;
    auto fields = evolve(f, ts, sc.solver, &es, row);
    save_field(fields.back(), (fs::path(sc.out_dir) / "final.field").string());
    std::printf("t_end=%s steps=%ld dt_min=%.3e dt_max=%.3e\n", fmt17(fields.back().t).c_str(), es.steps, es.dt_min, es.dt_max);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Args a;
    CLI::App app{"gkdv: multi-bubble blow-up ansatz for the critical generalized KdV equation"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* c) {
        c->add_option("--config", a.config, "scenario file (JSON)");
        c->add_option("--out", a.out, "output directory");
        c->add_option("--cache", a.cache, "profile cache directory (GKDV_CACHE overrides)");
        c->add_option("--xmax", a.xmax, "profile grid half-width");
        c->add_option("--n", a.n, "profile grid points");
        c->add_option("--sn", a.sn, "initial rescaled time S_n");
        c->add_option("--s0", a.s0, "final rescaled time S_0");
        c->add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber);
        c->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { a.seed = v, a.seed_set = true; }, "sampling seed");
    };
    auto* p = app.add_subcommand("profiles", "build or load the profile table and check its identities");
    auto* v = app.add_subcommand("verify", "run the acceptance suite and write run_report.csv");
    auto* m = app.add_subcommand("modulate", "integrate the modulation system, write trajectory.csv");
    auto* s = app.add_subcommand("shoot", "shoot for surviving initial data, write shooting.csv");
    auto* e = app.add_subcommand("evolve", "evolve the ansatz under the PDE, write evolve.csv");
    for (auto* c : {p, v, m, s, e}) common(c);
    v->add_option("--skip", a.skip, "check groups to skip: profiles, ansatz, modulation, pde")->delimiter(',');
    for (auto* c : {m}) {
        c->add_option("--xi", a.xi, "unstable kicks, one per K+ bubble")->delimiter(',');
        c->add_option("--zeta", a.zeta, "tau kicks, one per bubble")->delimiter(',');
    }
    e->add_option("--init", a.init, "initial data (ansatz)");
    e->add_option("--s", a.s, "rescaled time of the initial ansatz");
    e->add_option("--tend", a.tend, "final time, absolute or as a multiple of t0 ('2x')");
    e->add_option("--nx", a.nx, "field grid points (power of two)");
    e->add_option("--frames", a.frames, "number of output times")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int rc = app.exit(err);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*p) return cmd_profiles(a);
        if (*v) return cmd_verify(a);
        if (*m) return cmd_modulate(a);
        if (*s) return cmd_shoot(a);
        if (*e) return cmd_evolve(a);
    } catch (const Error& err) {
        std::fprintf(stderr, "error: kind=%s message=%s\n", to_string(err.kind()), err.message().c_str());
        return exit_code_for(err.kind());
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: kind=Internal message=%s\n", err.what());
        return 2;
    }
    return 2;
}
