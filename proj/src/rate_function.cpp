#include "zrs/rate_function.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace zrs {

RateFunction RateFunction::certify(std::vector<double> table) {
    if (table.size() < 2) throw std::invalid_argument("rate table needs length >= 2");
    if (table[0] != 0.0) throw std::invalid_argument("rate table must have g(0) = 0");
    for (std::size_t k = 1; k < table.size(); ++k)
        if (!(table[k] > 0.0))
            throw std::invalid_argument("rate table must have g(k) > 0: violated at k=" +
                                        std::to_string(k));

    RateFunction g;
    g.table_ = std::move(table);
    const long kmax = long(g.table_.size()) - 1;
    g.tail_slope_ = kmax >= 1 ? g.table_[std::size_t(kmax)] - g.table_[std::size_t(kmax - 1)]
                              : g.table_[1];
    if (!(g.tail_slope_ > 0.0))
        throw std::invalid_argument(
            "no (c1,k0) exists: tail pair (k,j)=(" + std::to_string(kmax) + "," +
            std::to_string(kmax - 1) + ") has g(k)-g(j) <= 0 at every separation");

    // Lipschitz constant over table and tail
    double gu = g.tail_slope_;
    for (long k = 0; k < kmax; ++k)
        gu = std::max(gu, std::abs(g.table_[std::size_t(k + 1)] - g.table_[std::size_t(k)]));
    g.g_upper_ = gu;

    // g_lower = inf_{k>=1} g(k)/k; the linear tail gives limit tail_slope
    double gl = g.tail_slope_;
    for (long k = 1; k <= kmax; ++k) gl = std::min(gl, g.table_[std::size_t(k)] / double(k));
    g.g_lower_ = gl;
    if (!(gl > 0.0)) throw std::invalid_argument("rate table violates g(k) >= g_* k");

    // smallest k0 with c1(k0) = min over k >= j + k0 of g(k)-g(j) strictly positive;
    // the scan extends k0 steps past the table, after which the increasing
    // tail can only increase gaps.
    auto eval = [&](long k) { return g(k); };
    long found_k0 = -1;
    double found_c1 = 0.0;
    for (long k0 = 1; k0 <= kmax + 1 && found_k0 < 0; ++k0) {
        double c1 = std::numeric_limits<double>::infinity();
        for (long j = 0; j <= kmax; ++j)
            for (long k = j + k0; k <= kmax + k0; ++k) c1 = std::min(c1, eval(k) - eval(j));
        if (c1 > 0.0) {
            found_k0 = k0;
            found_c1 = c1;
        }
    }
    if (found_k0 < 0)
        throw std::invalid_argument("rate table admits no (c1,k0): gaps do not grow");
    g.k0_ = found_k0;
    g.c1_ = found_c1;

    g.log_fact_.assign(g.table_.size(), 0.0);
    for (std::size_t k = 1; k < g.table_.size(); ++k)
        g.log_fact_[k] = g.log_fact_[k - 1] + std::log(g.table_[k]);
    return g;
}

double RateFunction::log_g_factorial(long m) const {
    if (m <= 0) return 0.0;
    const long kmax = long(table_.size()) - 1;
    if (m <= kmax) return log_fact_[std::size_t(m)];
    double v = log_fact_[std::size_t(kmax)];
    for (long k = kmax + 1; k <= m; ++k) v += std::log((*this)(k));
    return v;
}

RateFunction RateFunction::preset(const std::string& spec) {
    const long kmax = 128;
    auto colon = spec.find(':');
    std::string head = spec.substr(0, colon);
    double p = colon == std::string::npos ? 0.0 : std::stod(spec.substr(colon + 1));
    std::vector<double> t(std::size_t(kmax) + 1, 0.0);
    if (head == "linear") {
        double a = p > 0 ? p : 1.0;
        for (long k = 1; k <= kmax; ++k) t[std::size_t(k)] = a * double(k);
    } else if (head == "kink") {
        double m = p > 0 ? p : 5.0;
        for (long k = 1; k <= kmax; ++k) t[std::size_t(k)] = double(k) + std::min(double(k), m);
    } else {
        throw std::invalid_argument("unknown rate preset: " + spec);
    }
    return certify(std::move(t));
}

} // namespace zrs
