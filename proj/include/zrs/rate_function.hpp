#pragma once
#include <string>
#include <vector>

namespace zrs {

// Tabulated jump rate g with certified constants:
//   g(0) = 0, g(k) > 0 for k >= 1,
//   sup_k |g(k+1)-g(k)| <= g_upper,
//   g(k) - g(j) >= c1 whenever k >= j + k0,
//   g_lower * k <= g(k) <= g_upper * k.
// Beyond the table the rate continues linearly with the last increment.
// Immutable after certification; safe to share across threads.
class RateFunction {
  public:
    static RateFunction certify(std::vector<double> table);
    static RateFunction preset(const std::string& spec); // "linear", "linear:a", "kink:m"

    double operator()(long k) const {
        if (k <= 0) return 0.0;
        const long kmax = long(table_.size()) - 1;
        if (k <= kmax) return table_[std::size_t(k)];
        return table_[std::size_t(kmax)] + double(k - kmax) * tail_slope_;
    }

    double g_upper() const { return g_upper_; }  // g*
    double g_lower() const { return g_lower_; }  // g_*
    double c1() const { return c1_; }
    long k0() const { return k0_; }
    long table_size() const { return long(table_.size()); }
    const std::vector<double>& table() const { return table_; }

    // log of g(m)! = sum of log g(1..m); prefix cached over the table,
    // the linear tail is accumulated on the fly.
    double log_g_factorial(long m) const;

  private:
    RateFunction() = default;
    std::vector<double> table_;
    double tail_slope_ = 1.0;
    double g_upper_ = 1.0;
    double g_lower_ = 1.0;
    double c1_ = 1.0;
    long k0_ = 1;
    std::vector<double> log_fact_;
};

} // namespace zrs
