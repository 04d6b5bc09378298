#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "zrs/environment.hpp"
#include "zrs/rng.hpp"

namespace zrs::brox {

// Deterministic interleave of one disorder stream over Z:
// i >= 1 -> odd 1-based indices, i <= 0 -> even ones.
inline long map_two_sided(long i) { return i >= 1 ? 2 * i - 1 : 2 - 2 * i; }

double two_sided_r(const env::DisorderSequence& d, long i);

// sigma-normalized two-sided walk on [-span, span]:
// W(j/res) - W((j-1)/res) = r_j / (sigma sqrt(res)), W(0) = 0.
class TwoSidedWalk {
  public:
    TwoSidedWalk(const env::DisorderSequence& d, int resolution, double span);
    double operator()(double x) const;
    double span() const { return double(half_) / res_; }
    double max_span() const; // limited by the stored disorder length
    void extend_to(double new_span);

  private:
    const env::DisorderSequence* d_ = nullptr;
    int res_ = 0;
    long half_ = 0;
    std::vector<double> vals_; // index j + half_, j in [-half_, half_]
};

// Discrete-time walk in a bounded site environment u_i = 1/2 + scale * r_i.
// Runs a thinning decomposition: steps consult the environment with
// probability 2*delta and are fair coin flips otherwise, so long fair runs
// are batched exactly through popcount binomials.
class RandomWalkInEnvironment {
  public:
    RandomWalkInEnvironment(const env::DisorderSequence& d, double scale);

    // positions after each checkpoint step count (ascending)
    std::vector<long> run(const std::vector<long>& checkpoints, Rng& rng);
    long run_steps(long steps, Rng& rng);

  private:
    double consult_threshold(long pos);
    void ensure(long pos);
    const env::DisorderSequence* d_ = nullptr;
    double scale_ = 0.0;
    double delta_ = 0.0;     // uniform bias bound = scale * max |r|
    double p_consult_ = 0.0; // 2 delta
    double log1m_p_ = 0.0;
    std::vector<double> cpos_, cneg_; // consult thresholds cache
};

// Sinai walk P(U_{n+1} = U_n + 1 | .) = u_{U_n}, environment from the
// disorder scaled by `scale`.
std::vector<long> sinai_walk(const env::DisorderSequence& d, double scale,
                             const std::vector<long>& checkpoints, Rng& rng);

// Seignourel point sample N^{-1} U^N_{floor(N^2 t)} in the scaled environment
// u_i = 1/2 + r_i / sqrt(N) built from the same disorder stream.
double seignourel_sample(const env::DisorderSequence& d, long n_scale, double t, Rng& rng);

// Brownian path on a uniform grid, extended on demand; regeneration is
// deterministic per (seed, stream).
class BrownianDriver {
  public:
    BrownianDriver(std::uint64_t seed, std::uint64_t stream, double dt);
    double dt() const { return dt_; }
    double at(double s); // piecewise-linear between grid points
    double horizon() const { return double(vals_.size() - 1) * dt_; }

  private:
    Rng rng_;
    double dt_ = 0.0;
    std::vector<double> vals_;
};

// Speed/scale sampler X_t = A^{-1}(B_{T^{-1}(t)}) with A(y) = int_0^y e^W
// and clock T(t) = int_0^t exp(-2 W(A^{-1}(B_s))) ds, both by trapezoid
// quadrature on a uniform spatial grid. The window grows adaptively until
// max_span is reached.
class BroxSampler {
  public:
    BroxSampler(std::function<double(double)> w, double space_h, double init_span,
                double max_span);

    double sample(double t, BrownianDriver& b, int clock_refine = 1);

    // env transform from the shared disorder: the scaled-walk limit has the
    // Brox environment -4 sigma W_std in terms of the normalized walk
    static std::function<double(double)> env_from_walk(const TwoSidedWalk& w, double sigma);

  private:
    void build(double span);
    void extend();
    double invert(double a_val, double* clock_weight) const;
    std::function<double(double)> w_;
    double h_ = 0.0;
    double span_ = 0.0;
    double max_span_ = 0.0;
    std::vector<double> a_;    // A at nodes x = -span + i h
    std::vector<double> em2w_; // exp(-2 W) at nodes
};

} // namespace zrs::brox
