#pragma once
#include <functional>
#include <vector>

#include "zrs/density_field.hpp"
#include "zrs/invariant.hpp"
#include "zrs/rate_function.hpp"

namespace zrs::pde {

// time-independent rough drift, sampled once at flux midpoints
using DriftSampler = std::function<double(double)>;

enum class FluxType { upwind, central };

struct PdeOptions {
    FluxType flux = FluxType::upwind;
    double cfl = 0.4; // dt <= cfl dx^2 / max Phi'
    int phi_nodes = 512;
};

struct PdeResult {
    std::vector<double> times;
    std::vector<DensityField> fields;
    double dt = 0.0;
    long steps = 0;
    double mass_drift_rel = 0.0;  // max over snapshots of |mass - mass0| / mass0
    double min_value = 0.0;       // most negative pre-clip value seen
};

// Conservative update rho_i -= (dt/dx)(F_{i+1/2} - F_{i-1/2}) with
// F = -(1/(2dx)) dPhi + 2 W'_eps Phi(rho) (upwind or central advective part).
PdeResult solve_pde(const DensityField& rho0, const DriftSampler& drift, const RateFunction& g,
                    double t_end, std::vector<double> snapshots, PdeOptions opt = {});

// Space-time test function G(s,x) = psi(s) h(x), psi = (1-s/T)^2 so the
// support stays inside [0, T).
struct WeakTest {
    int freq = 1;
    bool use_sin = true;
    double t_end = 1.0;

    double h(double x) const;
    double dh(double x) const;
    double d2h(double x) const;
    double psi(double s) const { return (1.0 - s / t_end) * (1.0 - s / t_end); }
    double dpsi(double s) const { return -2.0 * (1.0 - s / t_end) / t_end; }
};

// Weak-form defect of a trajectory sampled on a uniform time grid
// (odd point count; Simpson in time, cell sums in space):
//   R = int int ds G rho + int G(0) rho0
//     + int int (1/2 dxx G + 2 dx G W') Phi(rho).
double weak_residual(const std::vector<double>& times, const std::vector<DensityField>& traj,
                     const DensityField& rho0, const DriftSampler& drift,
                     const std::function<double(double)>& phi_of_density, const WeakTest& test);

// Zero-flux-divergence profile: solves (1/2) dx Phi(rho) - 2 W' Phi(rho) = gamma_c
// on the torus for (gamma_c, level) meeting periodicity and the mass constraint.
struct StationaryProfile {
    DensityField rho;
    double gamma_c = 0.0;
    double u0 = 0.0; // Phi(rho(0))
};
StationaryProfile stationary_profile(const DriftSampler& drift, double total_mass,
                                     const RateFunction& g, int m);

} // namespace zrs::pde
