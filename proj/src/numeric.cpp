#include "zrs/numeric.hpp"

#include <cmath>
#include <limits>

namespace zrs {

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("Pchip: need >= 2 nodes");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (h[i] <= 0) throw std::invalid_argument("Pchip: x not increasing");
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0) {
            d_[i] = 0.0;
        } else {
            double w1 = 2 * h[i] + h[i - 1];
            double w2 = h[i] + 2 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // clamp endpoint slopes to keep monotonicity
    auto clamp_end = [](double d, double del) {
        if (d * del <= 0) return 0.0;
        if (std::abs(d) > 3 * std::abs(del)) return 3 * del;
        return d;
    };
    d_[0] = clamp_end(d_[0], delta[0]);
    d_[n - 1] = clamp_end(d_[n - 1], delta[n - 2]);
}

double Pchip::operator()(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) {
        return y_.front() + d_.front() * (x - x_.front());
    }
    if (x >= x_.back()) {
        return y_.back() + d_.back() * (x - x_.back());
    }
    std::size_t lo = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1;
    if (lo >= n - 1) lo = n - 2;
    double h = x_[lo + 1] - x_[lo];
    double t = (x - x_[lo]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1;
    double h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2;
    double h11 = t3 - t2;
    return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[lo + 1] + h11 * h * d_[lo + 1];
}

namespace {

double gamma_series_p(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_cf_q(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gammaq(double a, double x) {
    if (x < 0 || a <= 0) throw std::domain_error("gammaq: bad arguments");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series_p(a, x);
    return gamma_cf_q(a, x);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    return d;
}

double ks_vs_cdf(std::vector<double> a, double (*cdf)(double)) {
    std::sort(a.begin(), a.end());
    const double n = double(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double f = cdf(a[i]);
        d = std::max(d, std::abs(f - double(i) / n));
        d = std::max(d, std::abs(double(i + 1) / n - f));
    }
    return d;
}

double simpson(std::span<const double> values, double h) {
    const std::size_t n = values.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson: need odd point count >= 3");
    KahanSum s;
    s.add(values[0]);
    s.add(values[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) s.add(values[i] * (i % 2 == 1 ? 4.0 : 2.0));
    return s.value() * h / 3.0;
}

} // namespace zrs
