#pragma once
#include <cstdint>
#include <string>

#include "gkdv/ansatz.hpp"
#include "gkdv/pde.hpp"
#include "gkdv/profiles.hpp"

namespace gkdv {

struct ScenarioConfig {
    BubbleConfig bubbles;
    Grid1D grid;            // profile table grid
    double window = 0.1;    // taper fraction of ansatz fields
    double Sn = -1e4, S0 = -1e2;
    SolverOptions solver;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::string hash;       // content hash of the config text

    void validate() const;  // throws BadConfig
};

// defaults: K = 2, ells = (2, 1), signs = (+, +)
ScenarioConfig default_config();
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

std::string content_hash(const std::string& text);  // 16 hex digits, FNV-1a

std::string fmt17(double x);  // 17 significant digits

}  // namespace gkdv
