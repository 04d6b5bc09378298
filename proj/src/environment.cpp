#include "zrs/environment.hpp"

#include <cmath>
#include <stdexcept>

#include "zrs/numeric.hpp"

namespace zrs::env {

LawSpec LawSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    double p = colon == std::string::npos ? 0.0 : std::stod(text.substr(colon + 1));
    if (head == "rademacher") return rademacher();
    if (head == "uniform") return uniform_pm(p > 0 ? p : 1.0);
    if (head == "tgauss") return truncated_gaussian(p > 0 ? p : 2.0);
    throw std::invalid_argument("unknown disorder law: " + text);
}

double LawSpec::sigma() const {
    switch (kind) {
        case LawKind::rademacher:
            return 1.0;
        case LawKind::uniform_pm:
            return param / std::sqrt(3.0);
        case LawKind::truncated_gaussian: {
            // variance of a standard normal resampled to [-b, b]
            double b = param;
            double phi = std::exp(-0.5 * b * b) / std::sqrt(2.0 * M_PI);
            double mass = std::erf(b / std::sqrt(2.0));
            return std::sqrt(1.0 - 2.0 * b * phi / mass);
        }
    }
    throw std::logic_error("unreachable");
}

double LawSpec::bound() const {
    switch (kind) {
        case LawKind::rademacher:
            return 1.0;
        case LawKind::uniform_pm:
        case LawKind::truncated_gaussian:
            return param;
    }
    throw std::logic_error("unreachable");
}

std::string LawSpec::name() const {
    switch (kind) {
        case LawKind::rademacher:
            return "rademacher";
        case LawKind::uniform_pm:
            return "uniform:" + std::to_string(param);
        case LawKind::truncated_gaussian:
            return "tgauss:" + std::to_string(param);
    }
    throw std::logic_error("unreachable");
}

DisorderSequence gen_disorder(std::uint64_t seed, std::size_t count, LawSpec law) {
    if (count < 1) throw std::invalid_argument("gen_disorder: count >= 1 required");
    if (!(law.bound() < std::numeric_limits<double>::infinity()) || law.bound() <= 0)
        throw std::invalid_argument("gen_disorder: law must have bounded support");
    DisorderSequence d;
    d.seed = seed;
    d.law = law;
    d.sigma = law.sigma();
    d.values.resize(count);
    Rng rng(seed, /*stream=*/0x64697374ULL);
    switch (law.kind) {
        case LawKind::rademacher:
            for (auto& v : d.values) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
            break;
        case LawKind::uniform_pm:
            for (auto& v : d.values) v = law.param * (2.0 * rng.uniform() - 1.0);
            break;
        case LawKind::truncated_gaussian:
            for (auto& v : d.values) {
                double x;
                do {
                    x = rng.normal();
                } while (std::abs(x) > law.param);
                v = x;
            }
            break;
    }
    return d;
}

double WalkPath::operator()(double u) const {
    if (u < -1.0 || u > 2.0) throw std::domain_error("WalkPath: u outside [-1,2]");
    double g = u * n;
    double jf = std::floor(g);
    int j = int(jf);
    if (j >= 2 * n) return at_grid(2 * n);
    double t = g - jf;
    return (1.0 - t) * at_grid(j) + t * at_grid(j + 1);
}

WalkPath build_walk(const DisorderSequence& d, int n) {
    if (n < 1) throw std::invalid_argument("build_walk: N >= 1");
    if (d.values.size() < std::size_t(n))
        throw std::invalid_argument("build_walk: insufficient disorder length");
    WalkPath w;
    w.n = n;
    w.samples.assign(std::size_t(3 * n + 1), 0.0);
    const double scale = 1.0 / (d.sigma * std::sqrt(double(n)));
    KahanSum s;
    w.samples[std::size_t(n)] = 0.0; // X_0
    for (int j = 1; j <= n; ++j) {
        s.add(d.values[std::size_t(j - 1)]);
        w.samples[std::size_t(n + j)] = s.value() * scale;
    }
    const double w1 = w.samples[std::size_t(2 * n)];
    for (int j = -n; j < 0; ++j) w.samples[std::size_t(j + n)] = w.at_grid(j + n) - w1;
    for (int j = n + 1; j <= 2 * n; ++j) w.samples[std::size_t(j + n)] = w.at_grid(j - n) + w1;
    return w;
}

DriftField epsilon_drift(const WalkPath& w, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon_drift: eps in (0,1)");
    const int n = w.n;
    const int win = int(std::floor(eps * n));
    if (win < 1) throw std::invalid_argument("epsilon_drift: eps*N < 1, window empty");
    DriftField f;
    f.n = n;
    f.eps = eps;
    f.window = win;
    f.q.resize(std::size_t(n));
    const double sqn = std::sqrt(double(n));
    const double coef = sqn / double(2 * win + 1);
    double sup = 0.0;
    for (int k = 1; k <= n; ++k) {
        double qk = coef * (w.at_grid(k + win) - w.at_grid(k - win - 1));
        f.q[std::size_t(k - 1)] = qk;
        sup = std::max(sup, sqn * std::abs(qk));
    }
    f.sup_scaled = sup;
    return f;
}

double w_prime_eps(const WalkPath& w, double eps, double x) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("w_prime_eps: eps in (0,1)");
    // wrap into (0,1]; differences of the shifted extension are 1-periodic
    x -= std::floor(x);
    if (x == 0.0) x = 1.0;
    return (w(x + eps) - w(x - eps)) / (2.0 * eps);
}

} // namespace zrs::env
