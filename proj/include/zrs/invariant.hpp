#pragma once
#include <utility>
#include <vector>

#include "zrs/environment.hpp"
#include "zrs/numeric.hpp"
#include "zrs/rate_function.hpp"
#include "zrs/rng.hpp"

namespace zrs::inv {

// Partition function Z(phi) = sum_n phi^n / g(n)! with the truncation index;
// the dropped tail is certified below 1e-14 of Z via a geometric bound.
struct PartitionResult {
    double z = 1.0;
    long trunc = 0;
};
PartitionResult partition_Z(const RateFunction& g, double phi);

// Mean and variance of the single-site law P_phi.
struct Moments {
    double mean = 0.0;     // R(phi)
    double variance = 0.0; // sigma^2 under P_phi
};
Moments moments(const RateFunction& g, double phi);

// E_{P_phi}[g(X)]; equals phi identically, kept as an independent series route.
double mean_g(const RateFunction& g, double phi);

// Inverse of R: Phi(rho) with R(Phi) = rho to 1e-12*(1+rho), and
// Phi'(rho) = Phi / sigma^2(rho). Bracketing uses g_* rho <= Phi <= g* rho.
struct PhiResult {
    double phi = 0.0;
    double phi_prime = 0.0;
};
PhiResult phi_of_rho(const RateFunction& g, double rho);

// Tabulated single-site law with inverse-CDF sampling.
struct SingleSiteLaw {
    double phi = 0.0;
    double z_value = 1.0;
    long trunc = 0;
    std::vector<double> p;   // pmf, indices 0..trunc
    std::vector<double> cdf; // cumulative

    static SingleSiteLaw make(const RateFunction& g, double phi);
    long sample(Rng& rng) const;
};

// Site fugacities of the stationary product measure, solved from the cyclic
// flux recursion; normalized so max phi = 1. Products are accumulated in
// log space with compensated prefix sums.
struct FugacityProfile {
    int n = 0;
    std::vector<double> phi; // phi[k-1] for site k
    double gamma = 0.0;      // common flux after normalization
    double residual_max = 0.0;
    double ratio_max_min = 1.0;
    double max_increment_times_n = 0.0;

    double phi_site(int k1) const { return phi[std::size_t(k1 - 1)]; }
    double phi_wrap(int k) const {
        int m = ((k - 1) % n + n) % n;
        return phi[std::size_t(m)];
    }
};

FugacityProfile solve_fugacities(const env::DriftField& field, double phi1 = 1.0);

// Product sampler over per-site fugacities (covers both the stationary
// profile and local-equilibrium measures). Immutable once built.
class ProductSampler {
  public:
    ProductSampler(const RateFunction& g, const std::vector<double>& fugacities);
    std::vector<long> sample(Rng& rng) const;
    const SingleSiteLaw& site_law(std::size_t k) const { return laws_[k]; }

  private:
    std::vector<SingleSiteLaw> laws_;
};

// H(mu_le | R_N) = sum_k rho_k ln(phi_le/phi) + sum_k ln(Z(phi)/Z(phi_le)).
struct EntropyResult {
    double total = 0.0;
    double per_site = 0.0;
};
EntropyResult relative_entropy_le(const RateFunction& g, const std::vector<double>& le_fugacities,
                                  const std::vector<double>& profile_fugacities,
                                  const std::vector<double>& rho);

// Memoized Phi on [0, rho_max] (monotone cubic through exact inversions).
class PhiMap {
  public:
    PhiMap() = default;
    PhiMap(const RateFunction& g, double rho_max, int nodes = 512);
    double operator()(double rho) const { return rho <= 0.0 ? 0.0 : table_(rho); }
    double max_phi_prime() const { return max_prime_; }
    double rho_max() const { return rho_max_; }

  private:
    Pchip table_;
    double max_prime_ = 1.0;
    double rho_max_ = 1.0;
};

} // namespace zrs::inv
