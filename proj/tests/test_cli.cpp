#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path work = fs::temp_directory_path() / "gkdv_cli_test";

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    fs::path log = work / "stdout.txt";
    std::string cmd = env + (env.empty() ? "" : " ") + "\"" GKDV_CLI_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
    int st = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

struct Fixture {
    Fixture() {
        static bool once = [] {
            fs::remove_all(work);
            fs::create_directories(work);
            return true;
        }();
        (void)once;
    }
};

std::string cache() { return "--cache \"" + (work / "cache").string() + "\""; }
std::string out(const std::string& d) { return "--out \"" + (work / d).string() + "\""; }

}  // namespace

TEST_CASE_FIXTURE(Fixture, "profiles: build, cache hit, bad domain") {
    auto a = run("profiles --xmax 30 --n 6001 " + cache());
    CHECK(a.code == 0);
    CHECK(a.out.find("cache miss") != std::string::npos);
    fs::path file;
    for (const auto& e : fs::directory_iterator(work / "cache")) file = e.path();
    REQUIRE(!file.empty());
    std::string bytes = slurp(file);

    auto b = run("profiles --xmax 30 --n 6001 " + cache());
    CHECK(b.code == 0);
    CHECK(b.out.find("cache hit") != std::string::npos);
    CHECK(slurp(file) == bytes);

    auto c = run("profiles --xmax 5 --n 501 " + cache());
    CHECK(c.code == 2);
    CHECK(c.out.find("kind=DomainTooSmall") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "environment overrides the cache flag") {
    fs::path env_cache = work / "envcache";
    auto a = run("profiles " + cache(), "GKDV_CACHE=\"" + env_cache.string() + "\"");
    CHECK(a.code == 0);
    CHECK(fs::exists(env_cache));
    CHECK(!fs::is_empty(env_cache));
}

TEST_CASE_FIXTURE(Fixture, "modulate writes the trajectory and is reproducible") {
    auto a = run("modulate --sn -1e4 --s0 -1e2 " + out("mod1"));
    CHECK(a.code == 0);
    std::string header = first_line(work / "mod1" / "trajectory.csv");
    CHECK(header ==
          "s,tau_1,mu_1,y_1,a_1,mu_bar_1,tau_bar_1,y_bar_1,f_1,r_1,e_1,"
          "tau_2,mu_2,y_2,a_2,mu_bar_2,tau_bar_2,y_bar_2,f_2,r_2,e_2,N");
    auto b = run("modulate --sn -1e4 --s0 -1e2 " + out("mod2"));
    CHECK(b.code == 0);
    CHECK(slurp(work / "mod1" / "trajectory.csv") == slurp(work / "mod2" / "trajectory.csv"));
}

TEST_CASE_FIXTURE(Fixture, "shoot with a config file") {
    fs::path cfg = work / "forced.json";
    std::ofstream(cfg) << R"({"K": 2, "ells": [2, 1], "signs": [1, 1], "c0": 1, "c1": 0.5, "lambda0": 0.5})";
    auto a = run("shoot --config \"" + cfg.string() + "\" " + out("shoot"));
    CHECK(a.code == 0);
    CHECK(first_line(work / "shoot" / "shooting.csv") == "iteration,xi_1,xi_2,zeta_1,zeta_2,exit_s,N_exit");
    // last row: N at S0 below one
    std::ifstream in(work / "shoot" / "shooting.csv");
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    double N = std::stod(last.substr(last.rfind(',') + 1));
    CHECK(N <= 1.0);

    std::ofstream(work / "bad.json") << "{ \"ells\": [1, 2] }";
    auto b = run("shoot --config \"" + (work / "bad.json").string() + "\" " + out("shoot_bad"));
    CHECK(b.code == 2);
    CHECK(b.out.find("error: kind=") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "evolve writes a monotone time column") {
    auto a = run("evolve --init ansatz --s -50 --tend 1.02x --frames 3 " + cache() + " " + out("evolve"));
    CHECK(a.code == 0);
    std::ifstream in(work / "evolve" / "evolve.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("t,s,mass,energy,max_abs,height_1", 0) == 0);
    double prev = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
        double t = std::stod(line.substr(0, line.find(',')));
        CHECK(t > prev);
        prev = t;
        ++rows;
    }
    CHECK(rows == 4);
    CHECK(prev == doctest::Approx(0.102));
    CHECK(fs::exists(work / "evolve" / "final.field"));
}

TEST_CASE_FIXTURE(Fixture, "verify: subset and corrupted cache") {
    auto a = run("verify --skip pde,modulation " + cache() + " " + out("verify"));
    CHECK(a.code == 0);
    CHECK(a.out.find("PASS criterion 1 ") != std::string::npos);
    CHECK(a.out.find("criterion 12") == std::string::npos);
    std::string header;
    {
        std::ifstream in(work / "verify" / "run_report.csv");
        std::getline(in, header);  // comment with the hash
        std::getline(in, header);
    }
    CHECK(header == "criterion,group,name,target,measured,tolerance,pass,seconds,budget,provenance,detail");

    auto u = run("verify --skip nonsense " + cache() + " " + out("verify"));
    CHECK(u.code == 2);

    fs::path bad = work / "badcache";
    fs::create_directories(bad);
    for (const auto& e : fs::directory_iterator(work / "cache")) fs::copy_file(e.path(), bad / e.path().filename());
    for (const auto& e : fs::directory_iterator(bad)) {
        std::fstream f(e.path(), std::ios::in | std::ios::out | std::ios::binary);
        f.write("JUNK", 4);
    }
    auto b = run("verify --cache \"" + bad.string() + "\" " + out("verify_bad"));
    CHECK(b.code == 2);
    CHECK(b.out.find("magic") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "usage errors") {
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("modulate --threads 0").code == 2);
    CHECK(run("--help").code == 0);
}
