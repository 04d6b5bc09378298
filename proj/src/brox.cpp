#include "zrs/brox.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace zrs::brox {

double two_sided_r(const env::DisorderSequence& d, long i) {
    long idx = map_two_sided(i);
    if (idx < 1 || std::size_t(idx) > d.values.size())
        throw std::out_of_range("two_sided_r: disorder stream too short");
    return d.values[std::size_t(idx - 1)];
}

TwoSidedWalk::TwoSidedWalk(const env::DisorderSequence& d, int resolution, double span)
    : d_(&d), res_(resolution) {
    if (resolution < 1 || !(span > 0)) throw std::invalid_argument("TwoSidedWalk: bad arguments");
    half_ = 0;
    vals_ = {0.0};
    extend_to(span);
}

double TwoSidedWalk::max_span() const {
    // need map_two_sided(|j|) <= stored count; even side is the binding one
    long cap = (long(d_->values.size()) - 2) / 2;
    return double(cap) / double(res_);
}

void TwoSidedWalk::extend_to(double new_span) {
    long new_half = long(std::ceil(new_span * res_));
    if (new_half <= half_) return;
    if (map_two_sided(new_half) > long(d_->values.size()) ||
        map_two_sided(-new_half) > long(d_->values.size()))
        throw std::out_of_range("TwoSidedWalk: disorder stream too short for span");
    const double scale = 1.0 / (d_->sigma * std::sqrt(double(res_)));
    std::vector<double> nv(std::size_t(2 * new_half + 1), 0.0);
    for (long j = -half_; j <= half_; ++j)
        nv[std::size_t(j + new_half)] = vals_[std::size_t(j + half_)];
    for (long j = half_ + 1; j <= new_half; ++j)
        nv[std::size_t(j + new_half)] =
            nv[std::size_t(j - 1 + new_half)] + scale * two_sided_r(*d_, j);
    for (long j = -half_ - 1; j >= -new_half; --j)
        nv[std::size_t(j + new_half)] =
            nv[std::size_t(j + 1 + new_half)] - scale * two_sided_r(*d_, j + 1);
    vals_.swap(nv);
    half_ = new_half;
}

double TwoSidedWalk::operator()(double x) const {
    double g = x * res_;
    long j = long(std::floor(g));
    if (j < -half_ || j >= half_) {
        if (j == half_ && g == double(half_)) return vals_.back();
        throw std::out_of_range("TwoSidedWalk: x outside span");
    }
    double t = g - double(j);
    return (1.0 - t) * vals_[std::size_t(j + half_)] + t * vals_[std::size_t(j + 1 + half_)];
}

RandomWalkInEnvironment::RandomWalkInEnvironment(const env::DisorderSequence& d, double scale)
    : d_(&d), scale_(scale) {
    double max_abs = 0.0;
    for (double v : d.values) max_abs = std::max(max_abs, std::abs(v));
    delta_ = scale * max_abs;
    if (!(delta_ < 0.5))
        throw std::invalid_argument("walk environment leaves (0,1): scale too large");
    p_consult_ = 2.0 * delta_;
    log1m_p_ = p_consult_ > 0 ? std::log1p(-p_consult_) : 0.0;
}

void RandomWalkInEnvironment::ensure(long pos) {
    auto fill = [&](std::vector<double>& c, bool negative) {
        std::size_t old = c.size();
        std::size_t want = negative ? std::size_t(-pos) + 1 : std::size_t(pos) + 1;
        std::size_t cap = std::max<std::size_t>(64, std::max(want, old * 2));
        c.resize(cap);
        for (std::size_t k = old; k < cap; ++k) {
            long i = negative ? -long(k) : long(k);
            double u = 0.5 + scale_ * two_sided_r(*d_, i);
            // consult-step right probability: (u - (1-p)/2) / p
            c[k] = (u - 0.5 * (1.0 - p_consult_)) / p_consult_;
        }
    };
    if (pos >= 0 && std::size_t(pos) >= cpos_.size()) fill(cpos_, false);
    if (pos < 0 && std::size_t(-pos) >= cneg_.size()) fill(cneg_, true);
}

double RandomWalkInEnvironment::consult_threshold(long pos) {
    ensure(pos);
    return pos >= 0 ? cpos_[std::size_t(pos)] : cneg_[std::size_t(-pos)];
}

namespace {
long fair_displacement(long k, Rng& rng) {
    long disp = 0;
    while (k >= 64) {
        disp += 2 * long(std::popcount(rng())) - 64;
        k -= 64;
    }
    if (k > 0) {
        std::uint64_t bits = rng() & (~std::uint64_t(0) >> (64 - k));
        disp += 2 * long(std::popcount(bits)) - k;
    }
    return disp;
}
} // namespace

long RandomWalkInEnvironment::run_steps(long steps, Rng& rng) {
    long pos = 0;
    if (p_consult_ == 0.0) return fair_displacement(steps, rng);
    while (steps > 0) {
        long k = long(std::floor(std::log(rng.uniform_open()) / log1m_p_));
        if (k >= steps) {
            pos += fair_displacement(steps, rng);
            break;
        }
        pos += fair_displacement(k, rng);
        steps -= k;
        pos += rng.uniform() < consult_threshold(pos) ? +1 : -1;
        steps -= 1;
    }
    return pos;
}

std::vector<long> RandomWalkInEnvironment::run(const std::vector<long>& checkpoints, Rng& rng) {
    std::vector<long> out;
    out.reserve(checkpoints.size());
    long pos = 0;
    long done = 0;
    for (long cp : checkpoints) {
        if (cp < done) throw std::invalid_argument("checkpoints must be ascending");
        long remaining = cp - done;
        // same dynamics as run_steps but continuing from pos
        if (p_consult_ == 0.0) {
            pos += fair_displacement(remaining, rng);
        } else {
            while (remaining > 0) {
                long k = long(std::floor(std::log(rng.uniform_open()) / log1m_p_));
                if (k >= remaining) {
                    pos += fair_displacement(remaining, rng);
                    remaining = 0;
                    break;
                }
                pos += fair_displacement(k, rng);
                remaining -= k;
                pos += rng.uniform() < consult_threshold(pos) ? +1 : -1;
                remaining -= 1;
            }
        }
        done = cp;
        out.push_back(pos);
    }
    return out;
}

std::vector<long> sinai_walk(const env::DisorderSequence& d, double scale,
                             const std::vector<long>& checkpoints, Rng& rng) {
    RandomWalkInEnvironment walk(d, scale);
    return walk.run(checkpoints, rng);
}

double seignourel_sample(const env::DisorderSequence& d, long n_scale, double t, Rng& rng) {
    if (t < 0) throw std::invalid_argument("seignourel_sample: t >= 0");
    RandomWalkInEnvironment walk(d, 1.0 / std::sqrt(double(n_scale)));
    long steps = long(std::floor(double(n_scale) * double(n_scale) * t));
    return double(walk.run_steps(steps, rng)) / double(n_scale);
}

BrownianDriver::BrownianDriver(std::uint64_t seed, std::uint64_t stream, double dt)
    : rng_(seed, stream ^ 0xb10bULL), dt_(dt) {
    if (!(dt > 0)) throw std::invalid_argument("BrownianDriver: dt > 0");
    vals_ = {0.0};
}

double BrownianDriver::at(double s) {
    if (s < 0) throw std::invalid_argument("BrownianDriver: s >= 0");
    double g = s / dt_;
    std::size_t j = std::size_t(std::floor(g));
    while (j + 1 >= vals_.size()) vals_.push_back(vals_.back() + std::sqrt(dt_) * rng_.normal());
    double t = g - double(j);
    return (1.0 - t) * vals_[j] + t * vals_[j + 1];
}

BroxSampler::BroxSampler(std::function<double(double)> w, double space_h, double init_span,
                         double max_span)
    : w_(std::move(w)), h_(space_h), max_span_(max_span) {
    if (!(space_h > 0) || !(init_span > 0) || !(max_span >= init_span))
        throw std::invalid_argument("BroxSampler: bad window parameters");
    build(init_span);
}

void BroxSampler::build(double span) {
    span_ = span;
    long half = long(std::ceil(span / h_));
    span_ = double(half) * h_;
    std::size_t nn = std::size_t(2 * half + 1);
    a_.assign(nn, 0.0);
    em2w_.assign(nn, 0.0);
    std::vector<double> ew(nn);
    for (long i = 0; i < long(nn); ++i) {
        double x = (double(i) - double(half)) * h_;
        double wv = w_(x);
        ew[std::size_t(i)] = std::exp(wv);
        em2w_[std::size_t(i)] = std::exp(-2.0 * wv);
    }
    for (long i = half + 1; i < long(nn); ++i)
        a_[std::size_t(i)] =
            a_[std::size_t(i - 1)] + 0.5 * h_ * (ew[std::size_t(i - 1)] + ew[std::size_t(i)]);
    for (long i = half - 1; i >= 0; --i)
        a_[std::size_t(i)] =
            a_[std::size_t(i + 1)] - 0.5 * h_ * (ew[std::size_t(i)] + ew[std::size_t(i + 1)]);
}

void BroxSampler::extend() {
    double next = 2.0 * span_;
    if (span_ >= max_span_)
        throw std::runtime_error("brox sampler: window exhausted at max span");
    build(std::min(next, max_span_));
}

double BroxSampler::invert(double a_val, double* clock_weight) const {
    auto it = std::lower_bound(a_.begin(), a_.end(), a_val);
    std::size_t i = it == a_.begin() ? 1 : std::size_t(it - a_.begin());
    if (i >= a_.size()) i = a_.size() - 1;
    double a0 = a_[i - 1], a1 = a_[i];
    double t = (a_val - a0) / (a1 - a0);
    long half = (long(a_.size()) - 1) / 2;
    double x = (double(i - 1) + t - double(half)) * h_;
    if (clock_weight) *clock_weight = (1.0 - t) * em2w_[i - 1] + t * em2w_[i];
    return x;
}

double BroxSampler::sample(double t, BrownianDriver& b, int clock_refine) {
    if (!(t >= 0)) throw std::invalid_argument("brox sample: t >= 0");
    if (t == 0) return 0.0;
    const double hb = b.dt() / double(clock_refine);
    const double s_cap = 1e7 * t + 1e4;
    double clock = 0.0;
    double s = 0.0;
    double b_prev = b.at(0.0);
    double f_prev;
    invert(b_prev, &f_prev);
    for (;;) {
        double s_next = s + hb;
        if (s_next > s_cap) throw std::runtime_error("brox sampler: clock horizon exhausted");
        double b_next = b.at(s_next);
        while (b_next <= a_.front() || b_next >= a_.back()) extend();
        double f_next;
        double x_next = invert(b_next, &f_next);
        double d_clock = 0.5 * hb * (f_prev + f_next);
        if (clock + d_clock >= t) {
            double frac = (t - clock) / d_clock;
            double b_star = b_prev + frac * (b_next - b_prev);
            while (b_star <= a_.front() || b_star >= a_.back()) extend();
            return invert(b_star, nullptr);
        }
        clock += d_clock;
        s = s_next;
        b_prev = b_next;
        f_prev = f_next;
        (void)x_next;
    }
}

std::function<double(double)> BroxSampler::env_from_walk(const TwoSidedWalk& w, double sigma) {
    const TwoSidedWalk* wp = &w;
    double c = -4.0 * sigma;
    return [wp, c](double x) { return c * (*wp)(x); };
}

} // namespace zrs::brox
