#pragma once
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gkdv/config.hpp"
#include "gkdv/profiles.hpp"

namespace gkdv {

// One measured quantity.  A criterion may own several rows; it passes when all of them do.
struct Check {
    int criterion = 0;
    std::string group;       // profiles | ansatz | modulation | pde
    std::string name;
    std::string provenance;  // the mathematical statement being tested
    double target = 0.0;
    double measured = 0.0;
    double tolerance = 0.0;  // pass iff |measured - target| <= tolerance (or the rule in `detail`)
    bool pass = false;
    double seconds = 0.0;    // wall clock of the owning criterion
    double budget = 0.0;     // allowed seconds
    std::string detail;
};

struct SuiteOptions {
    ScenarioConfig scenario = default_config();
    std::set<std::string> skip;  // group names
    int threads = 1;
    bool verbose = false;
};

struct SuiteReport {
    std::string scenario_id;
    std::string config_hash;
    int threads = 1;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool all_pass() const;
    std::vector<int> criteria() const;             // ids present, ascending
    bool criterion_pass(int id) const;
    double criterion_seconds(int id) const;
};

const std::vector<std::string>& suite_groups();

// `profile_seconds` is the time it took to build `prof` (charged to the first criterion).
SuiteReport run_suite(const ProfileTable& prof, double profile_seconds, const SuiteOptions& opt = {});

void write_report_csv(const SuiteReport& r, const std::string& path);

}  // namespace gkdv
