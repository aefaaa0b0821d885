#pragma once
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gkdv/ansatz.hpp"

namespace gkdv {

// Periodic grid x_j = x0 + j L/n, j = 0..n-1, n a power of two.
struct PeriodicGrid {
    double x0 = 0.0;
    double L = 1.0;
    std::size_t n = 0;

    double h() const { return L / double(n); }
    double x(std::size_t j) const { return x0 + double(j) * h(); }
    std::vector<double> nodes() const;
    void validate() const;
};

// Real-to-complex transform pair with the wavenumbers of a periodic grid.
class Spectral {
public:
    explicit Spectral(const PeriodicGrid& g);
    ~Spectral();
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    std::size_t n() const { return n_; }
    std::size_t modes() const { return n_ / 2 + 1; }
    const std::vector<double>& k() const { return k_; }
    std::size_t dealias_cutoff() const { return n_ / 3; }  // modes j > cutoff are removed

    void forward(const std::vector<double>& u, std::vector<std::complex<double>>& uh) const;
    void backward(const std::vector<std::complex<double>>& uh, std::vector<double>& u) const;  // normalized
    std::vector<double> derivative(const std::vector<double>& u, int order = 1) const;

private:
    std::size_t n_;
    std::vector<double> k_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

struct Field {
    double t = 0.0;
    PeriodicGrid grid;
    std::vector<double> u;
};

enum class Scheme { IntegratingFactorRK4, ETDRK4 };

struct SolverOptions {
    double dt = 0.0;   // fixed step when > 0
    double cfl = 0.4;  // otherwise dt = cfl / (k_max_kept * 5 max|u|^4), re-evaluated each step
    double dt_max = 1e-2;
    Scheme scheme = Scheme::IntegratingFactorRK4;
    bool dealias = true;
    double blowup_factor = 1e3;
};

struct EvolveStats {
    long steps = 0;
    double dt_min = 0.0, dt_max = 0.0;
};

// Observer for every output time; return false to stop.
using FieldObserver = std::function<bool(const Field&)>;

// Fields at the requested output times (increasing, all > field.t); the last one is t_end.
std::vector<Field> evolve(const Field& field, const std::vector<double>& output_times, const SolverOptions& opt,
                          EvolveStats* stats = nullptr, const FieldObserver& obs = nullptr);
Field evolve(const Field& field, double t_end, const SolverOptions& opt, EvolveStats* stats = nullptr);

struct Conserved {
    double mass = 0.0;
    double energy = 0.0;
};
Conserved conserved(const Field& f);

struct Peak {
    double height = 0.0;  // signed
    double position = 0.0;
    double lambda_hat() const;  // (Q(0)/height)^2
};

std::vector<Peak> fit_bubbles(const Field& f, int K);  // sorted by position

// t = 1/sqrt(-2s), x = y t, amplitude u = (-2s)^{1/4} ũ
struct FramePoint {
    double a = 0.0, b = 0.0;
};
FramePoint to_rescaled(double t, double x);  // -> (s, y)
FramePoint to_physical(double s, double y);  // -> (t, x)
double amplitude_to_rescaled(double s, double u);
double amplitude_to_physical(double s, double u_tilde);

// Physical-frame field for the ansatz at rescaled time s on the physical grid.
Field ansatz_field(const BubbleConfig& cfg, const ParamState& st, const PeriodicGrid& xgrid, const ProfileTable& prof,
                   const FieldOptions& opt = {});

struct ResidualOptions {
    double ds_rel = 1e-7;  // centered difference step relative to |s|
    FieldOptions field{};
};

struct ResidualResult {
    double l2 = 0.0;  // over the untapered part of the grid
    std::vector<double> y, E;
    std::size_t excluded = 0;
};

// Error of the rescaled flow E = ∂_s V + (1/2s) ΛV + ∂_y(V_yy + V^5) on a periodic y-grid;
// `state_at` gives the parameters along the trajectory.
ResidualResult residual(const BubbleConfig& cfg, const std::function<ParamState(double)>& state_at, double s,
                        const PeriodicGrid& ygrid, const ProfileTable& prof, const ResidualOptions& opt = {});

void save_field(const Field& f, const std::string& path);
Field load_field(const std::string& path);  // x0 = -L/2 (the format stores no offset)

}  // namespace gkdv
