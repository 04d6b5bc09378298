#include "zrs/zero_range.hpp"

#include <algorithm>
#include <stdexcept>

namespace zrs::zr {

EventState::EventState(Configuration c, const env::DriftField& env, const RateFunction& g)
    : config_(std::move(c)), n_(config_.n) {
    if (env.n != n_) throw std::invalid_argument("EventState: environment size mismatch");
    const double sqn = std::sqrt(double(n_));
    p_right_.resize(std::size_t(n_));
    for (int k = 0; k < n_; ++k) {
        double b = env.q[std::size_t(k)] / sqn;
        if (!(std::abs(b) < 0.5))
            throw std::invalid_argument("EventState: |q_k|/sqrt(N) >= 1/2; N too small");
        p_right_[std::size_t(k)] = 0.5 + b;
    }
    const auto& tab = g.table();
    gtab_ = tab;
    gslope_ = tab.size() >= 2 ? tab.back() - tab[tab.size() - 2] : 1.0;
    n2_ = double(n_) * double(n_);
    std::vector<double> leaves(std::size_t(n_));
    for (int k = 0; k < n_; ++k) leaves[std::size_t(k)] = site_rate(config_.eta[std::size_t(k)]);
    tree_.build(leaves);
}

StepEvent EventState::step(Rng& rng) {
    StepEvent ev;
    double rate = tree_.root();
    if (rate <= 0.0) return ev;
    ev.dt = rng.exponential(rate * n2_);
    t_ += ev.dt;
    ev.site = tree_.select(rng.uniform() * rate);
    ev.dir = rng.uniform() < p_right_[std::size_t(ev.site)] ? +1 : -1;
    apply_jump(ev.site, ev.dir);
    ev.fired = true;
    return ev;
}

double EventState::tree_coherence_error() const {
    double err = 0.0;
    for (int k = 0; k < n_; ++k)
        err = std::max(err, std::abs(tree_.leaf(k) - site_rate(config_.eta[std::size_t(k)])));
    return err;
}

std::vector<SimSnapshot> simulate(const Configuration& eta0, const env::DriftField& env,
                                  const RateFunction& g, double t_end,
                                  std::vector<double> snapshots, Rng& rng) {
    std::sort(snapshots.begin(), snapshots.end());
    for (double s : snapshots)
        if (s > t_end) throw std::invalid_argument("simulate: snapshot beyond t_end");
    EventState state(eta0, env, g);
    std::vector<SimSnapshot> out;
    NullObserver nil;
    for (double s : snapshots) {
        state.run_until(s, rng, nil);
        out.push_back({s, state.config()});
    }
    if (out.empty() || out.back().t < t_end) {
        state.run_until(t_end, rng, nil);
        out.push_back({t_end, state.config()});
    }
    return out;
}

double block_average(const Configuration& c, int k, int l) {
    if (2 * l + 1 > c.n) throw std::invalid_argument("block_average: 2l+1 <= N required");
    long sum = 0;
    for (int y = k - l; y <= k + l; ++y) {
        int m = ((y % c.n) + c.n) % c.n;
        sum += c.eta[std::size_t(m)];
    }
    return double(sum) / double(2 * l + 1);
}

DensityField smooth_empirical(const Configuration& c, double theta, int m) {
    if (!(theta > 0.0) || theta * c.n < 1.0)
        throw std::invalid_argument("smooth_empirical: theta*N >= 1 required");
    DensityField f(m);
    const double n = double(c.n);
    std::vector<double> diff(std::size_t(m) + 1, 0.0);
    const double weight = 1.0 / (n * 2.0 * theta);
    for (int k = 0; k < c.n; ++k) {
        long occ = c.eta[std::size_t(k)];
        if (occ == 0) continue;
        double x = double(k + 1) / n; // internal site k holds mass at (k+1)/N
        // cells with |x_center - x| <= theta (periodic)
        double lo = (x - theta) * m - 0.5;
        double hi = (x + theta) * m - 0.5;
        int ilo = int(std::ceil(lo - 1e-12));
        int ihi = int(std::floor(hi + 1e-12));
        double w = double(occ) * weight;
        if (ihi - ilo + 1 >= m) { // window covers the whole torus
            for (int i = 0; i < m; ++i) f.values[std::size_t(i)] += w;
            continue;
        }
        int a = ((ilo % m) + m) % m;
        int b = ((ihi % m) + m) % m;
        if (a <= b) {
            diff[std::size_t(a)] += w;
            diff[std::size_t(b) + 1] -= w;
        } else {
            diff[0] += w;
            diff[std::size_t(b) + 1] -= w;
            diff[std::size_t(a)] += w;
            diff[std::size_t(m)] -= w;
        }
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        acc += diff[std::size_t(i)];
        f.values[std::size_t(i)] += acc;
    }
    return f;
}

namespace {
struct TaggedObserver {
    EventState* state;
    Rng* rng;
    TaggedPath* path;
    int pos_mod;   // current site in [0, N)
    int pos_real;  // unwrapped position
    void on_hold(double) {}
    void on_jump(int site, int dir, long m_before) {
        if (site != pos_mod) return;
        if (m_before <= 0) return;
        if (m_before == 1 || rng->uniform() * double(m_before) < 1.0) {
            pos_real += dir;
            pos_mod += dir;
            int n = state->n();
            if (pos_mod < 0) pos_mod += n;
            if (pos_mod >= n) pos_mod -= n;
            path->times.push_back(state->time());
            path->positions.push_back(pos_real);
        }
    }
};
} // namespace

TaggedPath track_tagged(EventState& state, int start_site, double t_end, Rng& rng) {
    if (state.config().eta[std::size_t(start_site)] <= 0)
        throw std::invalid_argument("track_tagged: no particle at start site");
    TaggedPath path;
    TaggedObserver obs{&state, &rng, &path, start_site, start_site};
    state.run_until(t_end, rng, obs);
    return path;
}

} // namespace zrs::zr
