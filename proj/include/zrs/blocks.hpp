#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "zrs/environment.hpp"
#include "zrs/invariant.hpp"
#include "zrs/rate_function.hpp"

namespace zrs::blocks {

// Canonical ensemble on a block: product of single-site laws with the given
// fugacities conditioned on the total particle count j.
struct CanonicalBlock {
    std::vector<double> phis;
    long j = 0;
    const RateFunction* g = nullptr;
};

// log Z^{(n)}(m) for m = 0..j over all block sites, computed by log-domain
// convolution of single-site weight tables w(m) = phi^m / g(m)!.
std::vector<double> canonical_log_z(const CanonicalBlock& b);

enum class Observable { g_rate, occupancy };

// Exact canonical expectation at one site. Dynamic-programming budget:
// n <= 64 sites, j <= 10^4 particles.
double canonical_expectation(const CanonicalBlock& b, std::size_t site, Observable obs);

// All occupancy vectors of n sites summing to j, lexicographic.
std::vector<std::vector<int>> enumerate_compositions(int n, long j, std::size_t budget = 200000);

// Localized block: absolute torus sites plus the bond list (pairs of local
// indices); bond (a,b) carries the reversibilized jump rates
//   a->b: (1/2) g(eta_a) [ (1/2 + q_a) + (phi_b/phi_a)(1/2 - q_b) ]
//   b->a: (1/2) g(eta_b) [ (1/2 - q_b) + (phi_a/phi_b)(1/2 + q_a) ]
// with q the sqrt(N)-scaled site bias. Two-block specs add the bridge bond.
struct BlockSpec {
    std::vector<int> sites;                   // absolute sites, 1-based
    std::vector<std::pair<int, int>> bonds;   // local index pairs

    static BlockSpec one_block(int k, int l);
    static BlockSpec two_block(int k, int kp, int l);
};

struct BlockGenerator {
    int n_sites = 0;
    long j = 0;
    std::size_t dim = 0;
    std::vector<std::vector<int>> states;
    std::vector<double> kappa; // canonical stationary weights, sum 1
    // sparse generator in triplet form; diagonal included
    std::vector<std::uint32_t> rows, cols;
    std::vector<double> vals;
    double r_factor = 1.0;  // 1 / min over bonds of the forward rate factor
    double phi_ratio = 1.0; // phi_max / phi_min over the block
    double db_residual = 0.0;
};

// Homogeneous reference dynamics (q = 0, phi = 1) is selected by passing
// nullptr for env/profile.
BlockGenerator build_block_generator(const BlockSpec& spec, const env::DriftField* env,
                                     const inv::FugacityProfile* profile, long j,
                                     const RateFunction& g, std::size_t state_budget = 200000);

// Smallest nonzero eigenvalue of -S symmetrized in the kappa inner product.
// Dense below dimension 2000, Lanczos with deflation above (tol 1e-8).
double spectral_gap(const BlockGenerator& gen);

// Full-torus generator of L restricted to the j-particle sector, with its
// exact stationary vector (for small-system oracles).
struct FullChain {
    std::size_t dim = 0;
    std::vector<std::vector<int>> states;
    std::vector<double> stationary;
};
FullChain full_chain_stationary(const env::DriftField& env, const RateFunction& g, long j,
                                std::size_t state_budget = 200000);

// Canonical weights of a product measure conditioned on total j, over the
// same enumeration order as enumerate_compositions.
std::vector<double> canonical_weights(const std::vector<double>& phis, long j,
                                      const RateFunction& g, std::size_t budget = 200000);

} // namespace zrs::blocks
