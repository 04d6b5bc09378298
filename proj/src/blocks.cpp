#include "zrs/blocks.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

#include "zrs/numeric.hpp"
#include "zrs/rng.hpp"

namespace zrs::blocks {

namespace {

void check_budget(const CanonicalBlock& b) {
    if (b.phis.size() > 64 || b.j > 10000)
        throw std::invalid_argument("canonical DP budget exceeded (n <= 64, j <= 1e4)");
    if (b.phis.empty() || b.j < 0 || b.g == nullptr)
        throw std::invalid_argument("canonical block: bad arguments");
}

std::vector<double> site_log_weights(const RateFunction& g, double phi, long j) {
    std::vector<double> w(std::size_t(j) + 1);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    if (phi == 0.0) {
        std::fill(w.begin(), w.end(), neg_inf);
        w[0] = 0.0;
        return w;
    }
    double lphi = std::log(phi);
    for (long m = 0; m <= j; ++m) w[std::size_t(m)] = double(m) * lphi - g.log_g_factorial(m);
    return w;
}

std::vector<double> log_z_over(const RateFunction& g, const std::vector<double>& phis, long j) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> z(std::size_t(j) + 1, neg_inf);
    z[0] = 0.0;
    std::vector<double> nz(std::size_t(j) + 1);
    for (double phi : phis) {
        auto w = site_log_weights(g, phi, j);
        for (long m = 0; m <= j; ++m) {
            double acc = neg_inf;
            for (long mp = 0; mp <= m; ++mp)
                acc = logaddexp(acc, w[std::size_t(mp)] + z[std::size_t(m - mp)]);
            nz[std::size_t(m)] = acc;
        }
        z.swap(nz);
    }
    return z;
}

struct VecHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 1469598103934665603ULL;
        for (int x : v) h = (h ^ std::size_t(x)) * 1099511628211ULL;
        return h;
    }
};

} // namespace

std::vector<double> canonical_log_z(const CanonicalBlock& b) {
    check_budget(b);
    return log_z_over(*b.g, b.phis, b.j);
}

double canonical_expectation(const CanonicalBlock& b, std::size_t site, Observable obs) {
    check_budget(b);
    if (site >= b.phis.size()) throw std::invalid_argument("canonical_expectation: bad site");
    const auto z = canonical_log_z(b);
    const long j = b.j;
    if (obs == Observable::g_rate) {
        // g(m) w(m) = phi w(m-1) collapses the site sum: E[g] = phi Z(j-1)/Z(j)
        if (j == 0) return 0.0;
        return b.phis[site] * std::exp(z[std::size_t(j - 1)] - z[std::size_t(j)]);
    }
    // occupancy via leave-one-out convolution
    std::vector<double> others;
    others.reserve(b.phis.size() - 1);
    for (std::size_t i = 0; i < b.phis.size(); ++i)
        if (i != site) others.push_back(b.phis[i]);
    const auto zx = log_z_over(*b.g, others, j);
    const auto w = site_log_weights(*b.g, b.phis[site], j);
    KahanSum num;
    for (long m = 1; m <= j; ++m)
        num.add(double(m) *
                std::exp(w[std::size_t(m)] + zx[std::size_t(j - m)] - z[std::size_t(j)]));
    return num.value();
}

std::vector<std::vector<int>> enumerate_compositions(int n, long j, std::size_t budget) {
    if (n < 1 || j < 0) throw std::invalid_argument("enumerate_compositions: bad arguments");
    std::vector<std::vector<int>> out;
    std::vector<int> cur(std::size_t(n), 0);
    std::function<void(int, long)> rec = [&](int site, long rem) {
        if (site == n - 1) {
            cur[std::size_t(site)] = int(rem);
            if (out.size() >= budget) throw std::invalid_argument("state-space budget exceeded");
            out.push_back(cur);
            return;
        }
        for (long m = 0; m <= rem; ++m) {
            cur[std::size_t(site)] = int(m);
            rec(site + 1, rem - m);
        }
    };
    rec(0, j);
    return out;
}

std::vector<double> canonical_weights(const std::vector<double>& phis, long j,
                                      const RateFunction& g, std::size_t budget) {
    auto states = enumerate_compositions(int(phis.size()), j, budget);
    std::vector<double> logw(states.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states.size(); ++s) {
        double lw = 0.0;
        for (std::size_t i = 0; i < phis.size(); ++i) {
            int m = states[s][i];
            lw += (m > 0 ? double(m) * std::log(phis[i]) : 0.0) - g.log_g_factorial(m);
        }
        logw[s] = lw;
        mx = std::max(mx, lw);
    }
    KahanSum tot;
    for (auto& lw : logw) {
        lw = std::exp(lw - mx);
        tot.add(lw);
    }
    for (auto& w : logw) w /= tot.value();
    return logw;
}

BlockSpec BlockSpec::one_block(int k, int l) {
    BlockSpec s;
    for (int x = k - l; x <= k + l; ++x) s.sites.push_back(x);
    for (int a = 0; a < 2 * l; ++a) s.bonds.push_back({a, a + 1});
    return s;
}

BlockSpec BlockSpec::two_block(int k, int kp, int l) {
    BlockSpec s;
    for (int x = k - l; x <= k + l; ++x) s.sites.push_back(x);
    for (int x = kp - l; x <= kp + l; ++x) s.sites.push_back(x);
    int w = 2 * l + 1;
    for (int a = 0; a < w - 1; ++a) s.bonds.push_back({a, a + 1});
    for (int a = 0; a < w - 1; ++a) s.bonds.push_back({w + a, w + a + 1});
    // bridge between the right edge of the first block (k+l) and the left
    // edge of the second (kp-l)
    s.bonds.push_back({w - 1, w});
    return s;
}

BlockGenerator build_block_generator(const BlockSpec& spec, const env::DriftField* env,
                                     const inv::FugacityProfile* profile, long j,
                                     const RateFunction& g, std::size_t state_budget) {
    const int n = int(spec.sites.size());
    BlockGenerator gen;
    gen.n_sites = n;
    gen.j = j;
    gen.states = enumerate_compositions(n, j, state_budget);
    gen.dim = gen.states.size();

    std::vector<double> bias(std::size_t(n), 0.0); // q_x / sqrt(N)
    std::vector<double> phi(std::size_t(n), 1.0);
    if (env != nullptr) {
        double sqn = std::sqrt(double(env->n));
        for (int i = 0; i < n; ++i) bias[std::size_t(i)] = env->q_wrap(spec.sites[std::size_t(i)]) / sqn;
    }
    if (profile != nullptr)
        for (int i = 0; i < n; ++i) phi[std::size_t(i)] = profile->phi_wrap(spec.sites[std::size_t(i)]);

    gen.kappa = canonical_weights(phi, j, g, state_budget);
    double pmx = *std::max_element(phi.begin(), phi.end());
    double pmn = *std::min_element(phi.begin(), phi.end());
    gen.phi_ratio = pmx / pmn;

    // r^{-1} = min over bonds of the forward factor p_{a,+}
    double min_p = std::numeric_limits<double>::infinity();
    auto p_forward = [&](int a, int b) {
        return (0.5 + bias[std::size_t(a)]) +
               phi[std::size_t(b)] / phi[std::size_t(a)] * (0.5 - bias[std::size_t(b)]);
    };
    auto p_backward = [&](int a, int b) {
        return (0.5 - bias[std::size_t(b)]) +
               phi[std::size_t(a)] / phi[std::size_t(b)] * (0.5 + bias[std::size_t(a)]);
    };
    for (auto [a, b] : spec.bonds) min_p = std::min(min_p, p_forward(a, b));
    gen.r_factor = 1.0 / min_p;

    std::unordered_map<std::vector<int>, std::uint32_t, VecHash> index;
    index.reserve(gen.dim * 2);
    for (std::size_t s = 0; s < gen.dim; ++s) index.emplace(gen.states[s], std::uint32_t(s));

    std::vector<double> diag(gen.dim, 0.0);
    auto add_rate = [&](std::size_t from, const std::vector<int>& to_state, double rate) {
        auto it = index.find(to_state);
        if (it == index.end()) throw std::logic_error("block generator: target state missing");
        gen.rows.push_back(std::uint32_t(from));
        gen.cols.push_back(it->second);
        gen.vals.push_back(rate);
        diag[from] -= rate;
    };

    std::vector<int> work;
    for (std::size_t s = 0; s < gen.dim; ++s) {
        const auto& st = gen.states[s];
        for (auto [a, b] : spec.bonds) {
            if (st[std::size_t(a)] > 0) {
                double rate = 0.5 * g(st[std::size_t(a)]) * p_forward(a, b);
                work = st;
                work[std::size_t(a)] -= 1;
                work[std::size_t(b)] += 1;
                add_rate(s, work, rate);
            }
            if (st[std::size_t(b)] > 0) {
                double rate = 0.5 * g(st[std::size_t(b)]) * p_backward(a, b);
                work = st;
                work[std::size_t(b)] -= 1;
                work[std::size_t(a)] += 1;
                add_rate(s, work, rate);
            }
        }
    }
    for (std::size_t s = 0; s < gen.dim; ++s) {
        gen.rows.push_back(std::uint32_t(s));
        gen.cols.push_back(std::uint32_t(s));
        gen.vals.push_back(diag[s]);
    }

    // detailed balance residual: kappa_i Q_ij - kappa_j Q_ji over off-diagonals
    std::unordered_map<std::uint64_t, double> flux;
    flux.reserve(gen.vals.size() * 2);
    for (std::size_t e = 0; e < gen.vals.size(); ++e) {
        if (gen.rows[e] == gen.cols[e]) continue;
        std::uint64_t key = (std::uint64_t(gen.rows[e]) << 32) | gen.cols[e];
        flux[key] += gen.kappa[gen.rows[e]] * gen.vals[e];
    }
    double resid = 0.0;
    for (const auto& [key, f] : flux) {
        std::uint64_t rev = (key << 32) | (key >> 32);
        auto it = flux.find(rev);
        double back = it == flux.end() ? 0.0 : it->second;
        resid = std::max(resid, std::abs(f - back));
    }
    gen.db_residual = resid;
    return gen;
}

namespace {

// Lanczos with full reorthogonalization on the kappa-symmetrized operator,
// deflated by the known null vector sqrt(kappa).
double lanczos_gap(const BlockGenerator& gen, const std::vector<double>& sqrt_kappa) {
    const std::size_t d = gen.dim;
    std::vector<double> v0 = sqrt_kappa;
    {
        double nrm = 0.0;
        for (double x : v0) nrm += x * x;
        nrm = std::sqrt(nrm);
        for (double& x : v0) x /= nrm;
    }
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t e = 0; e < gen.vals.size(); ++e) {
            // A = D Q D^{-1}, D = diag(sqrt kappa); M = -A
            double a = sqrt_kappa[gen.rows[e]] * gen.vals[e] / sqrt_kappa[gen.cols[e]];
            y[gen.rows[e]] -= a * x[gen.cols[e]];
        }
    };
    auto project = [&](std::vector<double>& x) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += x[i] * v0[i];
        for (std::size_t i = 0; i < d; ++i) x[i] -= dot * v0[i];
    };

    Rng rng(12345, 999);
    std::vector<double> q(d);
    for (auto& x : q) x = rng.uniform() - 0.5;
    project(q);
    double nrm = 0.0;
    for (double x : q) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (auto& x : q) x /= nrm;

    const int m_max = int(std::min<std::size_t>(d - 1, 400));
    std::vector<std::vector<double>> basis;
    basis.push_back(q);
    std::vector<double> alpha, beta;
    std::vector<double> w(d);
    double prev_gap = -1.0;
    for (int it = 0; it < m_max; ++it) {
        apply(basis.back(), w);
        project(w);
        double a = 0.0;
        for (std::size_t i = 0; i < d; ++i) a += w[i] * basis.back()[i];
        alpha.push_back(a);
        for (std::size_t i = 0; i < d; ++i) w[i] -= a * basis.back()[i];
        if (!beta.empty()) {
            const auto& prev = basis[basis.size() - 2];
            for (std::size_t i = 0; i < d; ++i) w[i] -= beta.back() * prev[i];
        }
        // full reorthogonalization
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += w[i] * b[i];
            for (std::size_t i = 0; i < d; ++i) w[i] -= dot * b[i];
        }
        double bnorm = 0.0;
        for (double x : w) bnorm += x * x;
        bnorm = std::sqrt(bnorm);
        // smallest eigenvalue of the tridiagonal section
        const int m = int(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            t(i, i) = alpha[std::size_t(i)];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[std::size_t(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        double gap = es.eigenvalues()(0);
        if (bnorm < 1e-12) return gap;
        if (prev_gap >= 0 && std::abs(gap - prev_gap) < 1e-8 * std::max(1.0, std::abs(gap)) &&
            it > 10)
            return gap;
        prev_gap = gap;
        beta.push_back(bnorm);
        for (auto& x : w) x /= bnorm;
        basis.push_back(w);
    }
    return prev_gap;
}

} // namespace

double spectral_gap(const BlockGenerator& gen) {
    const std::size_t d = gen.dim;
    if (d < 2) throw std::invalid_argument("spectral_gap: trivial state space");
    std::vector<double> sq(d);
    for (std::size_t i = 0; i < d; ++i) sq[i] = std::sqrt(gen.kappa[i]);
    if (d <= 2000) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(long(d), long(d));
        for (std::size_t e = 0; e < gen.vals.size(); ++e)
            a(gen.rows[e], gen.cols[e]) -= sq[gen.rows[e]] * gen.vals[e] / sq[gen.cols[e]];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
        return es.eigenvalues()(1); // smallest is the zero mode
    }
    return lanczos_gap(gen, sq);
}

FullChain full_chain_stationary(const env::DriftField& env, const RateFunction& g, long j,
                                std::size_t state_budget) {
    const int n = env.n;
    FullChain fc;
    fc.states = enumerate_compositions(n, j, state_budget);
    fc.dim = fc.states.size();
    const double sqn = std::sqrt(double(n));

    std::unordered_map<std::vector<int>, std::uint32_t, VecHash> index;
    index.reserve(fc.dim * 2);
    for (std::size_t s = 0; s < fc.dim; ++s) index.emplace(fc.states[s], std::uint32_t(s));

    Eigen::MatrixXd qt = Eigen::MatrixXd::Zero(long(fc.dim), long(fc.dim)); // transpose of Q
    std::vector<int> work;
    for (std::size_t s = 0; s < fc.dim; ++s) {
        const auto& st = fc.states[s];
        for (int k = 0; k < n; ++k) {
            if (st[std::size_t(k)] == 0) continue;
            double gk = g(st[std::size_t(k)]);
            double b = env.q[std::size_t(k)] / sqn;
            for (int dir : {+1, -1}) {
                int to = (k + dir + n) % n;
                double rate = gk * (0.5 + (dir > 0 ? b : -b));
                work = st;
                work[std::size_t(k)] -= 1;
                work[std::size_t(to)] += 1;
                auto it = index.find(work);
                std::size_t t = it->second;
                qt(long(t), long(s)) += rate;
                qt(long(s), long(s)) -= rate;
            }
        }
    }
    // pi Q = 0, sum pi = 1: replace one row of Q^T with ones
    Eigen::MatrixXd a = qt;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(long(fc.dim));
    for (std::size_t c = 0; c < fc.dim; ++c) a(0, long(c)) = 1.0;
    rhs(0) = 1.0;
    Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
    fc.stationary.resize(fc.dim);
    for (std::size_t i = 0; i < fc.dim; ++i) fc.stationary[i] = pi(long(i));
    return fc;
}

} // namespace zrs::blocks
