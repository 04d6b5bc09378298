#pragma once
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "zrs/blocks.hpp"
#include "zrs/brox.hpp"
#include "zrs/density_field.hpp"
#include "zrs/environment.hpp"
#include "zrs/invariant.hpp"
#include "zrs/pde.hpp"
#include "zrs/rate_function.hpp"
#include "zrs/zero_range.hpp"

namespace zrs::harness {

// Deterministic parallel map over [0, n): work is partitioned by index, and
// any reduction the caller performs afterwards walks results in index order.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

inline int default_threads() {
    unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : int(h);
}

// ---------------------------------------------------------------------------
// dual-topology metric: sum_m 2^{-m} min(1, |<h_m, a> - <h_m, b>|) over the
// trig basis ordered by frequency (h_1 = 1, then sin/cos pairs).
// ---------------------------------------------------------------------------
constexpr int kDualModes = 20;

double trig_mode(int m, double x); // m = 1..kDualModes
std::vector<double> trig_modes(const DensityField& f, int m_max = kDualModes);
std::vector<double> trig_modes(const zr::Configuration& c, int m_max = kDualModes);
double dual_distance_modes(const std::vector<double>& a, const std::vector<double>& b);
double dual_distance(const DensityField& a, const DensityField& b);
double dual_distance(const zr::Configuration& a, const DensityField& b);

// ---------------------------------------------------------------------------
// initial macroscopic profiles rho0(x) = a0 + a1 cos(2 pi freq x)
// ---------------------------------------------------------------------------
struct InitProfile {
    double a0 = 1.0;
    double a1 = 0.0;
    int freq = 1;

    static InitProfile parse(const std::string& text); // "const:c" | "cos:a0,a1[,freq]"
    double value(double x) const;
    double cell_average(int k1, int n) const; // N int_{(k-1)/N}^{k/N} rho0, exact
    DensityField grid_average(int m) const;
    std::string name() const;
};

// smooth test function used by the martingale and replacement diagnostics
struct TestFunctionG {
    int freq = 1;
    bool use_sin = true;
    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
};

// D_{N,k} = (1/2) Delta_N G + 2 nabla_N G sqrt(N) q_k on the discrete grid,
// indexed by internal site (0-based)
std::vector<double> discrete_d_coefficients(const TestFunctionG& g, const env::DriftField& field);

struct ExperimentConfig {
    std::uint64_t seed_env = 7;
    std::uint64_t seed_dyn = 1;
    env::LawSpec law = env::LawSpec::rademacher();
    double eps = 0.1;
    std::string g_spec = "linear";
    std::vector<int> ns = {512, 2048};
    std::vector<double> t_obs = {0.05};
    double theta = 0.05;
    int replicas = 20;
    int pde_grid = 512;
    int ref_walk_n = 1 << 16; // resolution of the reference walk behind W'_eps
    InitProfile rho0;
    int threads = default_threads();
};

// ---------------------------------------------------------------------------
// hydrodynamic-limit experiment
// ---------------------------------------------------------------------------
struct HdlCell {
    int n = 0;
    double t = 0.0;
    double dual = 0.0;
    double l1 = 0.0;
};
struct HdlReport {
    std::vector<HdlCell> cells;
    std::vector<double> pde_times;
    std::vector<DensityField> pde_fields;
    std::vector<DensityField> empirical_fields; // replica-averaged, per (n, t)
    double mass_error_max = 0.0;                // particle-side conservation check
    bool trend_ok = false;                      // largest N strictly better than smallest
    double seconds = 0.0;
};
HdlReport hdl_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// martingale diagnostic: per N, sample mean and variance of M^{N,G}_T
// ---------------------------------------------------------------------------
struct MartingaleRow {
    int n = 0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double n_times_var = 0.0;
    double d_bound_max = 0.0; // max_k |D_k| observed
};
struct MartingaleReport {
    std::vector<MartingaleRow> rows;
    double cross_n_factor = 0.0; // max/min of N*Var
    bool mean_within_3se = true;
    double seconds = 0.0;
};
MartingaleReport martingale_diag(const ExperimentConfig& cfg, const TestFunctionG& g_fn,
                                 double t_end);

// ---------------------------------------------------------------------------
// replacement-lemma statistic over (N, theta)
// ---------------------------------------------------------------------------
struct ReplacementCell {
    int n = 0;
    double theta = 0.0;
    double statistic = 0.0; // E | N^{-1} sum_k int D (g - Phi(eta^{theta N})) dt |
};
struct ReplacementReport {
    std::vector<ReplacementCell> cells;
    double seconds = 0.0;
};
ReplacementReport replacement_diag(const ExperimentConfig& cfg, const TestFunctionG& g_fn,
                                   double t_end, const std::vector<double>& thetas);

// ---------------------------------------------------------------------------
// Seignourel vs Brox comparison on the shared disorder
// ---------------------------------------------------------------------------
struct CompareConfig {
    std::uint64_t seed_env = 7;
    std::uint64_t seed_dyn = 1;
    env::LawSpec law = env::LawSpec::rademacher();
    std::vector<long> ns = {100, 1000, 10000};
    double t = 1.0;
    int samples = 2000;
    int walk_resolution = 4096;
    double brox_dt = 1e-4;
    int threads = default_threads();
};
struct CompareReport {
    std::vector<double> ks_per_n;          // KS(seignourel(N), brox)
    double ks_zero_disorder_gauss = 0.0;   // zero-disorder Seignourel vs N(0,t)
    std::vector<double> brox_samples;
    std::vector<std::vector<double>> seignourel_samples;
    double seconds = 0.0;
};
CompareReport compare_experiment(const CompareConfig& cfg);

} // namespace zrs::harness
