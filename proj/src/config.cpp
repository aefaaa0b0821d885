#include "gkdv/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gkdv/errors.hpp"

namespace gkdv {

using nlohmann::json;

void ScenarioConfig::validate() const {
    try {
        bubbles.validate();
        grid.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::BadConfig, e.what());
    }
    if (!(Sn < S0 && S0 < 0)) throw Error(ErrorKind::BadConfig, "need S_n < S_0 < 0");
    if (!(window >= 0 && window < 0.5)) throw Error(ErrorKind::BadConfig, "window must lie in [0, 0.5)");
}

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.bubbles.ells = {2.0, 1.0};
    c.bubbles.signs = {1, 1};
    c.hash = content_hash("{}");
    return c;
}

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig c = default_config();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::BadConfig, e.what());
    }
    try {
        if (j.contains("ells")) c.bubbles.ells = j.at("ells").get<std::vector<double>>();
        if (j.contains("signs")) c.bubbles.signs = j.at("signs").get<std::vector<int>>();
        if (j.contains("K")) {
            int K = j.at("K").get<int>();
            if (K != int(c.bubbles.ells.size())) throw Error(ErrorKind::BadConfig, "K does not match the length of ells");
        }
        c.bubbles.c0 = j.value("c0", 0.0);
        c.bubbles.c1 = j.value("c1", 0.0);
        c.bubbles.lambda0 = j.value("lambda0", 0.0);
        if (j.contains("grid")) {
            const json& g = j.at("grid");
            c.grid.x_min = g.value("x_min", c.grid.x_min);
            c.grid.x_max = g.value("x_max", c.grid.x_max);
            c.grid.n = g.value("n", c.grid.n);
        }
        c.window = j.value("window", c.window);
        c.Sn = j.value("sn", c.Sn);
        c.S0 = j.value("s0", c.S0);
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            c.solver.dt = s.value("dt", c.solver.dt);
            c.solver.cfl = s.value("cfl", c.solver.cfl);
            c.solver.dt_max = s.value("dt_max", c.solver.dt_max);
            std::string scheme = s.value("scheme", std::string("ifrk4"));
            if (scheme == "ifrk4")
                c.solver.scheme = Scheme::IntegratingFactorRK4;
            else if (scheme == "etdrk4")
                c.solver.scheme = Scheme::ETDRK4;
            else
                throw Error(ErrorKind::BadConfig, "unknown scheme " + scheme);
            c.solver.dealias = s.value("dealias", true);
        }
        c.out_dir = j.value("out", c.out_dir);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadConfig, e.what());
    }
    c.hash = content_hash(text);
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::BadConfig, "cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace gkdv
