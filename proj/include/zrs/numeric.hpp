#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace zrs {

// Compensated (Kahan) accumulator.
class KahanSum {
  public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }
    void reset(double v = 0.0) { s_ = v; c_ = 0.0; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum k;
    for (double x : xs) k.add(x);
    return k.value();
}

// log(e^a + e^b), tolerant of -inf
inline double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log(e^a - e^b) for a > b
inline double logsubexp(double a, double b) {
    if (b == -std::numeric_limits<double>::infinity()) return a;
    if (!(a > b)) throw std::domain_error("logsubexp: requires a > b");
    return a + std::log1p(-std::exp(b - a));
}

struct RunningStats {
    // Welford
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
};

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double min_x() const { return x_.front(); }
    double max_x() const { return x_.back(); }

  private:
    std::vector<double> x_, y_, d_;
};

// Upper regularized incomplete gamma Q(a,x); chi-square tail uses Q(k/2, x/2).
double gammaq(double a, double x);

inline double chi2_pvalue(double stat, int dof) { return gammaq(0.5 * dof, 0.5 * stat); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided binomial test p-value via normal approximation with continuity correction.
inline double binomial_test_pvalue(std::size_t successes, std::size_t trials, double p) {
    double mu = double(trials) * p;
    double sd = std::sqrt(double(trials) * p * (1.0 - p));
    double z = (std::abs(double(successes) - mu) - 0.5) / sd;
    if (z < 0) z = 0;
    return 2.0 * (1.0 - normal_cdf(z));
}

// Kolmogorov-Smirnov statistics; samples need not be pre-sorted.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_vs_cdf(std::vector<double> a, double (*cdf)(double));

// Simpson weights on a uniform grid with n+1 points (n even).
double simpson(std::span<const double> values, double h);

} // namespace zrs
