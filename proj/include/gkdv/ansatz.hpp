#pragma once
#include <cstddef>
#include <vector>

#include "gkdv/profiles.hpp"

namespace gkdv {

// K bubbles with scales ells[0] > ells[1] > ... > 0 and signs ±1.
// c0, c1, lambda0 stand in for the unknown constants of the minimal-mass profile.
struct BubbleConfig {
    std::vector<double> ells;
    std::vector<int> signs;
    double c0 = 0.0, c1 = 0.0, lambda0 = 0.0;

    int K() const { return int(ells.size()); }
    void validate() const;  // throws InvalidArgument
};

struct BubbleParams {
    double tau = 0.0, mu = 0.0, y = 0.0, a = 0.0;
};

struct ParamState {
    double s = 0.0;
    std::vector<BubbleParams> b;

    void validate() const;
    static ParamState self_similar(const BubbleConfig& cfg, double s);  // a = 0
};

struct Bars {
    std::vector<double> mu_bar, tau_bar, y_bar;
};
Bars bars(const BubbleConfig& cfg, const ParamState& st);

struct DerivedParams {
    std::vector<double> mu_tilde, z;
    std::vector<double> r;         // from the modeled tails
    std::vector<double> r_closed;  // asymptotic closed form
    std::vector<double> d, e, theta, f;
};

std::vector<double> theta(const BubbleConfig& cfg);

// Exponent ladder; index k-1 holds bubble k.
struct DeltaLadder {
    double delta_Kp1 = 1.0 / 43.0;
    double delta_Kp1_plus = 0.0;
    double delta0_minus = 0.0;
    double delta0 = 0.0;
    std::vector<double> minus, mid, plus;

    double chain_margin() const;  // smallest gap in the strict chain (negative if broken)
};

struct Classification {
    std::vector<int> Kplus, Kminus;  // 0-based bubble indices
    std::vector<double> rate;        // (1 + 3 theta_k)/2
    DeltaLadder ladder;

    bool unstable(int k) const;
};

Classification classify(const BubbleConfig& cfg);

DerivedParams derive(const BubbleConfig& cfg, const ParamState& st, double l1_Q);

struct FieldOptions {
    double window = 0.1;        // fraction tapered at each end
    bool p_correction = true;   // (1/2tau) P in the near field and the far-left tail
    bool strict_profile_domain = false;
};

struct AnsatzField {
    std::vector<double> y, v;
    std::size_t outside_lookups = 0;  // nodes that needed off-table P/R asymptotics
    double taper_mass = 0.0;          // ∫ V^2 (1 - w^2) lost to the window
    std::size_t window_nodes = 0;     // tapered nodes at each end
};

AnsatzField build_field(const BubbleConfig& cfg, const ParamState& st, const std::vector<double>& y,
                        const ProfileTable& prof, const FieldOptions& opt = {});
AnsatzField build_field(const BubbleConfig& cfg, const ParamState& st, const Grid1D& grid,
                        const ProfileTable& prof, const FieldOptions& opt = {});

// the individual pieces, for diagnostics
double smoothstep(double t);
double chi(double z, double gamma);
double gamma_of(const BubbleConfig& cfg);

struct MassEnergy {
    double mass = 0.0;
    double energy = 0.0;
    double energy_abel = 0.0;
};

MassEnergy predict_mass_energy(const BubbleConfig& cfg, const ProfileNorms& norms);

std::vector<double> omega(const BubbleConfig& cfg, const ParamState& st, const DerivedParams& dp, double l1_Q);

}  // namespace gkdv
