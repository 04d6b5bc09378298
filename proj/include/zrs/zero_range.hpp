#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "zrs/density_field.hpp"
#include "zrs/environment.hpp"
#include "zrs/rate_function.hpp"
#include "zrs/rng.hpp"

namespace zrs::zr {

struct Configuration {
    int n = 0;
    std::vector<long> eta;
    long total = 0;

    Configuration() = default;
    Configuration(int n_, std::vector<long> eta_) : n(n_), eta(std::move(eta_)) {
        total = 0;
        for (long v : eta) total += v;
    }
};

// Binary aggregation tree over per-site exit rates. Parents are recomputed
// as sums of children on every update, so no incremental drift accumulates.
class RateTree {
  public:
    void build(const std::vector<double>& leaves) {
        n_ = int(leaves.size());
        cap_ = 1;
        while (cap_ < n_) cap_ <<= 1;
        t_.assign(std::size_t(2 * cap_), 0.0);
        for (int i = 0; i < n_; ++i) t_[std::size_t(cap_ + i)] = leaves[std::size_t(i)];
        for (int i = cap_ - 1; i >= 1; --i)
            t_[std::size_t(i)] = t_[std::size_t(2 * i)] + t_[std::size_t(2 * i + 1)];
    }

    double root() const { return t_[1]; }
    double leaf(int k) const { return t_[std::size_t(cap_ + k)]; }

    void set(int k, double v) {
        std::size_t i = std::size_t(cap_ + k);
        t_[i] = v;
        while (i > 1) {
            i >>= 1;
            t_[i] = t_[2 * i] + t_[2 * i + 1];
        }
    }

    int select(double r) const {
        std::size_t i = 1;
        while (i < std::size_t(cap_)) {
            i <<= 1;
            if (r >= t_[i]) {
                r -= t_[i];
                i |= 1;
            }
        }
        int k = int(i) - cap_;
        // guard against landing on a zero-rate leaf through rounding
        while (k >= 0 && t_[i] <= 0.0) {
            ++k;
            ++i;
            if (k >= n_) {
                k = 0;
                i = std::size_t(cap_);
            }
        }
        return k;
    }

    int size() const { return n_; }

  private:
    int n_ = 0, cap_ = 1;
    std::vector<double> t_;
};

struct StepEvent {
    bool fired = false;
    int site = -1;
    int dir = 0;
    double dt = 0.0; // macroscopic waiting time
};

// Mutable simulation state for a single replica. The environment and rate
// function are shared read-only; time is macroscopic (generator N^2 L).
class EventState {
  public:
    EventState(Configuration c, const env::DriftField& env, const RateFunction& g);

    const Configuration& config() const { return config_; }
    const RateTree& tree() const { return tree_; }
    double time() const { return t_; }
    int n() const { return n_; }
    long total() const { return config_.total; }

    double site_rate(long m) const {
        if (m <= 0) return 0.0;
        if (m < long(gtab_.size())) return gtab_[std::size_t(m)];
        return gtab_.back() + double(m - long(gtab_.size()) + 1) * gslope_;
    }

    // One exact event; no event fires if the configuration is empty.
    StepEvent step(Rng& rng);

    // Run until t_until; obs.on_hold(dt) sees the state before each jump,
    // obs.on_jump(site, dir, m_before) fires after the configuration update.
    template <class Obs>
    void run_until(double t_until, Rng& rng, Obs&& obs) {
        while (t_ < t_until) {
            double rate = tree_.root();
            if (rate <= 0.0) {
                obs.on_hold(t_until - t_);
                t_ = t_until;
                return;
            }
            double dt = rng.exponential(rate * n2_);
            if (t_ + dt >= t_until) {
                obs.on_hold(t_until - t_);
                t_ = t_until;
                return;
            }
            obs.on_hold(dt);
            t_ += dt;
            int k = tree_.select(rng.uniform() * rate);
            int dir = rng.uniform() < p_right_[std::size_t(k)] ? +1 : -1;
            long m_before = config_.eta[std::size_t(k)];
            apply_jump(k, dir);
            obs.on_jump(k, dir, m_before);
        }
    }

    void apply_jump(int k, int dir) {
        int j = k + dir;
        if (j < 0) j += n_;
        if (j >= n_) j -= n_;
        auto& eta = config_.eta;
        eta[std::size_t(k)] -= 1;
        eta[std::size_t(j)] += 1;
        tree_.set(k, site_rate(eta[std::size_t(k)]));
        tree_.set(j, site_rate(eta[std::size_t(j)]));
    }

    // largest deviation between stored leaf rates and a fresh recompute
    double tree_coherence_error() const;

  private:
    Configuration config_;
    RateTree tree_;
    std::vector<double> p_right_;
    std::vector<double> gtab_;
    double gslope_ = 1.0;
    double n2_ = 1.0;
    double t_ = 0.0;
    int n_ = 0;
};

struct NullObserver {
    void on_hold(double) {}
    void on_jump(int, int, long) {}
};

// Exact trajectory sampling with states recorded at the snapshot times.
struct SimSnapshot {
    double t = 0.0;
    Configuration config;
};
std::vector<SimSnapshot> simulate(const Configuration& eta0, const env::DriftField& env,
                                  const RateFunction& g, double t_end,
                                  std::vector<double> snapshots, Rng& rng);

// Centered block average with periodic indexing: (2l+1)^{-1} sum_{|y-k|<=l} eta(y).
double block_average(const Configuration& c, int k, int l);

// Kernel-smoothed empirical measure on an M-point grid:
// value(x_i) = (1/N) sum_k eta(k) (2 theta)^{-1} 1[|k/N - x_i| <= theta].
DensityField smooth_empirical(const Configuration& c, double theta, int m);

// Tagged-particle path: when a site with m particles fires, a uniformly
// chosen resident departs, so the tagged one moves with probability 1/m.
struct TaggedPath {
    std::vector<double> times;    // macroscopic event times of tagged moves
    std::vector<int> positions;   // site after each move (unwrapped in Z)
};
TaggedPath track_tagged(EventState& state, int start_site, double t_end, Rng& rng);

} // namespace zrs::zr
