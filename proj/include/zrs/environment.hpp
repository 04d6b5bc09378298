#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "zrs/rng.hpp"

namespace zrs::env {

// Bounded mean-zero disorder laws. Bounded support keeps the site
// probabilities 1/2 + r/sqrt(N) inside (0,1) for all N above a threshold.
enum class LawKind { rademacher, uniform_pm, truncated_gaussian };

struct LawSpec {
    LawKind kind = LawKind::rademacher;
    double param = 1.0; // half-width a for uniform_pm, cut b for truncated_gaussian

    static LawSpec rademacher() { return {LawKind::rademacher, 1.0}; }
    static LawSpec uniform_pm(double a) { return {LawKind::uniform_pm, a}; }
    static LawSpec truncated_gaussian(double b) { return {LawKind::truncated_gaussian, b}; }
    static LawSpec parse(const std::string& text);

    double sigma() const;  // std deviation of the law
    double bound() const;  // support bound: |r| <= bound
    std::string name() const;
};

struct DisorderSequence {
    std::uint64_t seed = 0;
    LawSpec law;
    std::vector<double> values; // r_1..r_M stored 0-based
    double sigma = 1.0;

    double r(std::size_t i1) const { return values.at(i1 - 1); } // 1-based access
};

DisorderSequence gen_disorder(std::uint64_t seed, std::size_t count, LawSpec law);

// Scaled partial-sum walk on the grid {-N..2N}/N, piecewise linear in between.
// Values on [0,1] follow the partial sums of the disorder; the pieces on
// [-1,0) and (1,2] come from the periodic shift rule
// W(u) = W(u+1) - W(1) and W(u) = W(u-1) + W(1).
struct WalkPath {
    int n = 0;
    std::vector<double> samples; // index j+n for grid point j/N, j in [-n, 2n]

    double at_grid(int j) const { return samples[std::size_t(j + n)]; }
    double operator()(double u) const; // u in [-1, 2]
};

WalkPath build_walk(const DisorderSequence& d, int n);

// Windowed drift q_k^N, k = 1..N, with window half-width floor(eps*N):
//   q_k = sqrt(N)/(2w+1) * (W((k+w)/N) - W((k-w-1)/N)),
// which equals the centered disorder window sum 1/((2w+1) sigma) sum_{|j-k|<=w} r_j
// exactly (periodic indexing).
struct DriftField {
    int n = 0;
    double eps = 0.0;
    int window = 0;
    std::vector<double> q;    // q[k-1] for site k
    double sup_scaled = 0.0;  // max_k sqrt(N) |q_k|

    double q_site(int k1) const { return q[std::size_t(k1 - 1)]; } // 1-based, no wrap
    double q_wrap(int k) const {                                   // any integer site index
        int m = ((k - 1) % n + n) % n;
        return q[std::size_t(m)];
    }
};

DriftField epsilon_drift(const WalkPath& w, double eps);

// Mollified derivative (W(x+eps) - W(x-eps)) / (2 eps); x is wrapped into (0,1].
double w_prime_eps(const WalkPath& w, double eps, double x);

} // namespace zrs::env
