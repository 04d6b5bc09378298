#include "zrs/invariant.hpp"

#include <cmath>
#include <stdexcept>

namespace zrs::inv {

namespace {

// Shared series walker: accumulates sum phi^n/g(n)! together with the first
// and second moment numerators, stopping once the geometric tail bound of the
// n^2-weighted series drops below 1e-15 of the running sums.
struct SeriesSums {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, sg = 0.0;
    long trunc = 0;
};

SeriesSums run_series(const RateFunction& g, double phi) {
    SeriesSums out;
    KahanSum s0, s1, s2, sg;
    double term = 1.0; // phi^n / g(n)!
    s0.add(1.0);
    long n = 0;
    if (phi > 0.0) {
        for (;;) {
            ++n;
            term *= phi / g(n);
            s0.add(term);
            s1.add(term * double(n));
            s2.add(term * double(n) * double(n));
            sg.add(term * g(n));
            double ratio = phi / g(n + 1);
            if (ratio < 1.0) {
                double tail = term * ratio / (1.0 - ratio);
                if (tail * double(n + 2) * double(n + 2) < 1e-15 * std::max(1.0, s0.value()))
                    break;
            }
            if (n > 2000000) throw std::runtime_error("partition series did not converge");
        }
    }
    out.s0 = s0.value();
    out.s1 = s1.value();
    out.s2 = s2.value();
    out.sg = sg.value();
    out.trunc = n;
    return out;
}

} // namespace

PartitionResult partition_Z(const RateFunction& g, double phi) {
    if (phi < 0.0) throw std::domain_error("partition_Z: phi >= 0 required");
    auto s = run_series(g, phi);
    return {s.s0, s.trunc};
}

Moments moments(const RateFunction& g, double phi) {
    if (phi < 0.0) throw std::domain_error("moments: phi >= 0 required");
    auto s = run_series(g, phi);
    double mean = s.s1 / s.s0;
    double var = s.s2 / s.s0 - mean * mean;
    return {mean, var};
}

double mean_g(const RateFunction& g, double phi) {
    if (phi < 0.0) throw std::domain_error("mean_g: phi >= 0 required");
    auto s = run_series(g, phi);
    return s.sg / s.s0;
}

PhiResult phi_of_rho(const RateFunction& g, double rho) {
    if (rho < 0.0) throw std::domain_error("phi_of_rho: rho >= 0 required");
    if (rho == 0.0) return {0.0, g(1)};
    const double tol = 1e-12 * (1.0 + rho);
    double lo = g.g_lower() * rho;
    double hi = g.g_upper() * rho;
    // guard the bracket against rounding at the edges
    while (moments(g, lo).mean > rho) lo *= 0.999;
    while (moments(g, hi).mean < rho) hi *= 1.001;
    double phi = 0.5 * (lo + hi);
    double r = 0.0, var = 1.0;
    for (int it = 0; it < 200; ++it) {
        auto m = moments(g, phi);
        r = m.mean;
        var = m.variance;
        if (std::abs(r - rho) <= tol) break;
        if (r < rho)
            lo = phi;
        else
            hi = phi;
        // Newton step using R'(phi) = Var/phi, bisection fallback
        double step = (rho - r) * phi / var;
        double next = phi + step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        phi = next;
    }
    return {phi, phi / var};
}

SingleSiteLaw SingleSiteLaw::make(const RateFunction& g, double phi) {
    if (phi < 0.0) throw std::domain_error("SingleSiteLaw: phi >= 0 required");
    auto zr = partition_Z(g, phi);
    SingleSiteLaw law;
    law.phi = phi;
    law.z_value = zr.z;
    law.trunc = zr.trunc;
    law.p.resize(std::size_t(zr.trunc) + 1);
    law.cdf.resize(law.p.size());
    double term = 1.0;
    KahanSum c;
    for (long m = 0; m <= zr.trunc; ++m) {
        if (m > 0) term *= phi / g(m);
        law.p[std::size_t(m)] = term / zr.z;
        c.add(law.p[std::size_t(m)]);
        law.cdf[std::size_t(m)] = c.value();
    }
    return law;
}

long SingleSiteLaw::sample(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return trunc;
    return long(it - cdf.begin());
}

FugacityProfile solve_fugacities(const env::DriftField& field, double phi1) {
    const int n = field.n;
    if (n < 3) throw std::invalid_argument("solve_fugacities: N >= 3 required");
    const double sqn = std::sqrt(double(n));
    // 1-based jump weights with the wrap convention r_{N+1} = r_1
    std::vector<double> logr(std::size_t(n) + 2), logl(std::size_t(n) + 2);
    for (int k = 1; k <= n; ++k) {
        double b = field.q_site(k) / sqn;
        if (!(std::abs(b) < 0.5))
            throw std::invalid_argument("solve_fugacities: |q_k|/sqrt(N) >= 1/2, drift too large");
        logr[std::size_t(k)] = std::log(0.5 + b);
        logl[std::size_t(k)] = std::log(0.5 - b);
    }
    logr[std::size_t(n + 1)] = logr[1];
    logl[std::size_t(n + 1)] = logl[1];

    // prefix sums: logR1[k] = log prod_{i=1..k} r_i, logL2[k] = log prod_{i=2..k} l_i
    std::vector<double> logR1(std::size_t(n) + 2, 0.0), logL2(std::size_t(n) + 2, 0.0);
    {
        KahanSum a;
        for (int k = 1; k <= n + 1; ++k) {
            a.add(logr[std::size_t(k)]);
            logR1[std::size_t(k)] = a.value();
        }
        KahanSum b;
        for (int k = 2; k <= n + 1; ++k) {
            b.add(logl[std::size_t(k)]);
            logL2[std::size_t(k)] = b.value();
        }
    }

    // S_k = sum_{j=2..k} L_{2,j-1} R_{j,k-1}; recursion S_{k+1} = r_k S_k + L_{2,k}
    std::vector<double> logS(std::size_t(n) + 2, -std::numeric_limits<double>::infinity());
    logS[2] = 0.0;
    for (int k = 2; k <= n; ++k)
        logS[std::size_t(k + 1)] =
            logaddexp(logr[std::size_t(k)] + logS[std::size_t(k)], logL2[std::size_t(k)]);

    // flux: gamma = (R_{1,N} - L_{2,N+1}) / S_{N+1} * phi_1
    const double logRN = logR1[std::size_t(n)];
    const double logLN = logL2[std::size_t(n + 1)];
    int sign_d = 0;
    double log_absd = -std::numeric_limits<double>::infinity();
    if (logRN > logLN) {
        sign_d = 1;
        log_absd = logsubexp(logRN, logLN);
    } else if (logLN > logRN) {
        sign_d = -1;
        log_absd = logsubexp(logLN, logRN);
    }
    const double logSN1 = logS[std::size_t(n + 1)];
    double gamma = sign_d == 0 ? 0.0 : double(sign_d) * std::exp(log_absd - logSN1) * phi1;

    FugacityProfile prof;
    prof.n = n;
    prof.phi.resize(std::size_t(n));
    prof.phi[0] = phi1;
    for (int k = 2; k <= n; ++k) {
        double base = std::exp(logR1[std::size_t(k - 1)] - logL2[std::size_t(k)]);
        double corr = sign_d == 0 ? 0.0
                                  : double(sign_d) * std::exp(logS[std::size_t(k)] + log_absd -
                                                              logSN1 - logR1[std::size_t(k - 1)]);
        prof.phi[std::size_t(k - 1)] = base * (1.0 - corr) * phi1;
    }

    for (double p : prof.phi)
        if (!(p > 0.0)) throw std::runtime_error("solve_fugacities: non-positive fugacity");

    // normalize max phi = 1 (gamma scales with phi)
    double mx = *std::max_element(prof.phi.begin(), prof.phi.end());
    for (double& p : prof.phi) p /= mx;
    gamma /= mx;
    prof.gamma = gamma;

    double mn = *std::min_element(prof.phi.begin(), prof.phi.end());
    prof.ratio_max_min = 1.0 / mn;
    double res = 0.0, inc = 0.0;
    for (int k = 1; k <= n; ++k) {
        double rp = 0.5 + field.q_wrap(k - 1) / sqn;
        double lp = 0.5 - field.q_wrap(k + 1) / sqn;
        double e = rp * prof.phi_wrap(k - 1) + lp * prof.phi_wrap(k + 1) - prof.phi_wrap(k);
        res = std::max(res, std::abs(e));
        inc = std::max(inc, std::abs(prof.phi_wrap(k) - prof.phi_wrap(k + 1)));
    }
    prof.residual_max = res;
    prof.max_increment_times_n = inc * double(n);
    return prof;
}

ProductSampler::ProductSampler(const RateFunction& g, const std::vector<double>& fugacities) {
    laws_.reserve(fugacities.size());
    for (double phi : fugacities) {
        if (!(phi >= 0.0) || !std::isfinite(phi))
            throw std::invalid_argument("ProductSampler: fugacities must be finite and >= 0");
        laws_.push_back(SingleSiteLaw::make(g, phi));
    }
}

std::vector<long> ProductSampler::sample(Rng& rng) const {
    std::vector<long> eta(laws_.size());
    for (std::size_t k = 0; k < laws_.size(); ++k) eta[k] = laws_[k].sample(rng);
    return eta;
}

EntropyResult relative_entropy_le(const RateFunction& g, const std::vector<double>& le_fugacities,
                                  const std::vector<double>& profile_fugacities,
                                  const std::vector<double>& rho) {
    const std::size_t n = le_fugacities.size();
    if (profile_fugacities.size() != n || rho.size() != n)
        throw std::invalid_argument("relative_entropy_le: length mismatch");
    KahanSum h;
    for (std::size_t k = 0; k < n; ++k) {
        double lphi = le_fugacities[k], pphi = profile_fugacities[k];
        if (!(lphi > 0.0) || !(pphi > 0.0))
            throw std::invalid_argument("relative_entropy_le: fugacities must be positive");
        h.add(rho[k] * std::log(lphi / pphi));
        h.add(std::log(partition_Z(g, pphi).z) - std::log(partition_Z(g, lphi).z));
    }
    return {h.value(), h.value() / double(n)};
}

PhiMap::PhiMap(const RateFunction& g, double rho_max, int nodes) {
    if (!(rho_max > 0.0) || nodes < 8) throw std::invalid_argument("PhiMap: bad arguments");
    rho_max_ = rho_max;
    std::vector<double> xs(std::size_t(nodes)), ys(std::size_t(nodes));
    double mp = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double rho = rho_max * double(i) / double(nodes - 1);
        auto r = phi_of_rho(g, rho);
        xs[std::size_t(i)] = rho;
        ys[std::size_t(i)] = r.phi;
        mp = std::max(mp, r.phi_prime);
    }
    table_ = Pchip(std::move(xs), std::move(ys));
    max_prime_ = mp;
}

} // namespace zrs::inv
