#include "zrs/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace zrs::harness {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::uint64_t replica_stream(int n, int r) { return (std::uint64_t(n) << 24) ^ std::uint64_t(r); }
} // namespace

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

double trig_mode(int m, double x) {
    if (m == 1) return 1.0;
    int j = m / 2;
    double a = two_pi * j * x;
    return m % 2 == 0 ? std::sin(a) : std::cos(a);
}

std::vector<double> trig_modes(const DensityField& f, int m_max) {
    std::vector<double> out(std::size_t(m_max));
    for (int m = 1; m <= m_max; ++m) {
        KahanSum s;
        for (int i = 0; i < f.m; ++i)
            s.add(f.values[std::size_t(i)] * trig_mode(m, f.x_center(i)));
        out[std::size_t(m - 1)] = s.value() * f.dx;
    }
    return out;
}

std::vector<double> trig_modes(const zr::Configuration& c, int m_max) {
    std::vector<double> out(std::size_t(m_max));
    for (int m = 1; m <= m_max; ++m) {
        KahanSum s;
        for (int i = 0; i < c.n; ++i) {
            long occ = c.eta[std::size_t(i)];
            if (occ != 0) s.add(double(occ) * trig_mode(m, double(i + 1) / double(c.n)));
        }
        out[std::size_t(m - 1)] = s.value() / double(c.n);
    }
    return out;
}

double dual_distance_modes(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dual_distance: mode count mismatch");
    double d = 0.0;
    double w = 1.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        w *= 0.5;
        d += w * std::min(1.0, std::abs(a[m] - b[m]));
    }
    return d;
}

double dual_distance(const DensityField& a, const DensityField& b) {
    return dual_distance_modes(trig_modes(a), trig_modes(b));
}

double dual_distance(const zr::Configuration& a, const DensityField& b) {
    return dual_distance_modes(trig_modes(a), trig_modes(b));
}

InitProfile InitProfile::parse(const std::string& text) {
    InitProfile p;
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "const") {
        p.a0 = std::stod(rest);
        p.a1 = 0.0;
        return p;
    }
    if (head == "cos") {
        auto c1 = rest.find(',');
        p.a0 = std::stod(rest.substr(0, c1));
        std::string tail = rest.substr(c1 + 1);
        auto c2 = tail.find(',');
        p.a1 = std::stod(tail.substr(0, c2));
        p.freq = c2 == std::string::npos ? 1 : std::stoi(tail.substr(c2 + 1));
        return p;
    }
    throw std::invalid_argument("unknown init profile: " + text);
}

double InitProfile::value(double x) const { return a0 + a1 * std::cos(two_pi * freq * x); }

double InitProfile::cell_average(int k1, int n) const {
    if (a1 == 0.0) return a0;
    double w = two_pi * freq;
    double hi = double(k1) / double(n), lo = double(k1 - 1) / double(n);
    return a0 + a1 * double(n) * (std::sin(w * hi) - std::sin(w * lo)) / w;
}

DensityField InitProfile::grid_average(int m) const {
    DensityField f(m);
    for (int i = 0; i < m; ++i) f.values[std::size_t(i)] = cell_average(i + 1, m);
    return f;
}

std::string InitProfile::name() const {
    if (a1 == 0.0) return "const:" + std::to_string(a0);
    return "cos:" + std::to_string(a0) + "," + std::to_string(a1) + "," + std::to_string(freq);
}

double TestFunctionG::value(double x) const {
    double a = two_pi * freq * x;
    return use_sin ? std::sin(a) : std::cos(a);
}
double TestFunctionG::d1(double x) const {
    double w = two_pi * freq;
    return use_sin ? w * std::cos(w * x) : -w * std::sin(w * x);
}
double TestFunctionG::d2(double x) const {
    double w = two_pi * freq;
    return -w * w * value(x);
}

std::vector<double> discrete_d_coefficients(const TestFunctionG& g, const env::DriftField& field) {
    const int n = field.n;
    const double sqn = std::sqrt(double(n));
    std::vector<double> d(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        double xm = double(i) / n, x0 = double(i + 1) / n, xp = double(i + 2) / n;
        double gm = g.value(xm), g0 = g.value(x0), gp = g.value(xp);
        double lap = double(n) * double(n) * (gp + gm - 2.0 * g0);
        double grad = 0.5 * double(n) * (gp - gm);
        d[std::size_t(i)] = 0.5 * lap + 2.0 * grad * sqn * field.q[std::size_t(i)];
    }
    return d;
}

// ---------------------------------------------------------------------------
// hydrodynamic-limit experiment
// ---------------------------------------------------------------------------

namespace {

std::vector<double> le_fugacities(const RateFunction& g, const InitProfile& rho0, int n,
                                  std::vector<double>* rho_out) {
    std::vector<double> fug(std::size_t(n));
    if (rho_out) rho_out->resize(std::size_t(n));
    for (int k = 1; k <= n; ++k) {
        double rho = rho0.cell_average(k, n);
        if (rho_out) (*rho_out)[std::size_t(k - 1)] = rho;
        fug[std::size_t(k - 1)] = inv::phi_of_rho(g, rho).phi;
    }
    return fug;
}

} // namespace

HdlReport hdl_experiment(const ExperimentConfig& cfg) {
    double t0 = now_seconds();
    HdlReport rep;
    RateFunction g = RateFunction::preset(cfg.g_spec);

    int max_n = *std::max_element(cfg.ns.begin(), cfg.ns.end());
    std::size_t count = std::size_t(3) * std::size_t(std::max(cfg.ref_walk_n, max_n));
    auto dis = env::gen_disorder(cfg.seed_env, count, cfg.law);
    auto ref_walk = env::build_walk(dis, cfg.ref_walk_n);
    auto drift = [&ref_walk, eps = cfg.eps](double x) { return env::w_prime_eps(ref_walk, eps, x); };

    std::vector<double> snaps = cfg.t_obs;
    std::sort(snaps.begin(), snaps.end());
    auto rho0_field = cfg.rho0.grid_average(cfg.pde_grid);
    auto pde_res = pde::solve_pde(rho0_field, drift, g, snaps.back(), snaps, pde::PdeOptions{});
    // map snapshot time -> pde field (skip the t=0 entry)
    std::vector<DensityField> pde_at;
    std::vector<std::vector<double>> pde_modes;
    for (double t : snaps) {
        for (std::size_t i = 0; i < pde_res.times.size(); ++i) {
            if (std::abs(pde_res.times[i] - t) < 1e-12) {
                pde_at.push_back(pde_res.fields[i]);
                pde_modes.push_back(trig_modes(pde_res.fields[i]));
                break;
            }
        }
    }
    rep.pde_times = snaps;
    rep.pde_fields = pde_at;

    const std::size_t nt = snaps.size();
    for (int n : cfg.ns) {
        auto walk = env::build_walk(dis, n);
        auto field = env::epsilon_drift(walk, cfg.eps);
        auto fug = le_fugacities(g, cfg.rho0, n, nullptr);
        inv::ProductSampler sampler(g, fug);

        const int reps = cfg.replicas;
        std::vector<std::vector<std::vector<double>>> modes(std::size_t(reps));
        std::vector<std::vector<DensityField>> fields(std::size_t(reps));
        std::vector<double> mass_err(std::size_t(reps), 0.0);

        parallel_for(reps, cfg.threads, [&](int r) {
            Rng rng(cfg.seed_dyn, replica_stream(n, r));
            zr::Configuration conf(n, sampler.sample(rng));
            long total0 = conf.total;
            zr::EventState state(conf, field, g);
            zr::NullObserver nil;
            auto& mrow = modes[std::size_t(r)];
            auto& frow = fields[std::size_t(r)];
            for (double t : snaps) {
                state.run_until(t, rng, nil);
                mrow.push_back(trig_modes(state.config()));
                frow.push_back(zr::smooth_empirical(state.config(), cfg.theta, cfg.pde_grid));
                mass_err[std::size_t(r)] = std::max(
                    mass_err[std::size_t(r)], double(std::abs(state.config().total - total0)));
            }
        });

        for (std::size_t ti = 0; ti < nt; ++ti) {
            std::vector<double> avg_modes(kDualModes, 0.0);
            DensityField avg_field(cfg.pde_grid);
            for (int r = 0; r < reps; ++r) {
                for (int m = 0; m < kDualModes; ++m)
                    avg_modes[std::size_t(m)] += modes[std::size_t(r)][ti][std::size_t(m)];
                for (int i = 0; i < cfg.pde_grid; ++i)
                    avg_field.values[std::size_t(i)] +=
                        fields[std::size_t(r)][ti].values[std::size_t(i)];
            }
            for (auto& v : avg_modes) v /= double(reps);
            for (auto& v : avg_field.values) v /= double(reps);
            HdlCell cell;
            cell.n = n;
            cell.t = snaps[ti];
            cell.dual = dual_distance_modes(avg_modes, pde_modes[ti]);
            cell.l1 = l1_distance(avg_field, pde_at[ti]);
            rep.cells.push_back(cell);
            rep.empirical_fields.push_back(std::move(avg_field));
        }
        for (int r = 0; r < reps; ++r)
            rep.mass_error_max = std::max(rep.mass_error_max, mass_err[std::size_t(r)]);
    }

    // trend: at each observation time, the largest N beats the smallest
    int n_min = *std::min_element(cfg.ns.begin(), cfg.ns.end());
    int n_max = max_n;
    rep.trend_ok = true;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        double d_small = -1.0, d_large = -1.0;
        for (const auto& c : rep.cells) {
            if (std::abs(c.t - snaps[ti]) > 1e-12) continue;
            if (c.n == n_min) d_small = c.dual;
            if (c.n == n_max) d_large = c.dual;
        }
        if (!(d_large < d_small)) rep.trend_ok = false;
    }
    rep.seconds = now_seconds() - t0;
    return rep;
}

// ---------------------------------------------------------------------------
// martingale diagnostic
// ---------------------------------------------------------------------------

namespace {

struct MartingaleObserver {
    zr::EventState* state;
    const std::vector<double>* dcoef;
    double a = 0.0; // sum_k D_k g(eta(k))
    KahanSum integral;
    long events = 0;

    void rebuild() {
        KahanSum s;
        const auto& eta = state->config().eta;
        for (std::size_t i = 0; i < eta.size(); ++i)
            s.add((*dcoef)[i] * state->site_rate(eta[i]));
        a = s.value();
    }
    void on_hold(double dt) { integral.add(dt * a); }
    void on_jump(int k, int dir, long m_before) {
        int n = state->n();
        int j = k + dir;
        if (j < 0) j += n;
        if (j >= n) j -= n;
        long mj = state->config().eta[std::size_t(j)];
        a += (*dcoef)[std::size_t(k)] *
             (state->site_rate(m_before - 1) - state->site_rate(m_before));
        a += (*dcoef)[std::size_t(j)] * (state->site_rate(mj) - state->site_rate(mj - 1));
        if ((++events & ((1L << 22) - 1)) == 0) rebuild();
    }
};

double pairing(const zr::Configuration& c, const TestFunctionG& g_fn) {
    KahanSum s;
    for (int i = 0; i < c.n; ++i)
        s.add(double(c.eta[std::size_t(i)]) * g_fn.value(double(i + 1) / double(c.n)));
    return s.value() / double(c.n);
}

} // namespace

MartingaleReport martingale_diag(const ExperimentConfig& cfg, const TestFunctionG& g_fn,
                                 double t_end) {
    double t0 = now_seconds();
    MartingaleReport rep;
    RateFunction g = RateFunction::preset(cfg.g_spec);
    int max_n = *std::max_element(cfg.ns.begin(), cfg.ns.end());
    auto dis = env::gen_disorder(cfg.seed_env, std::size_t(3) * std::size_t(max_n), cfg.law);

    for (int n : cfg.ns) {
        auto walk = env::build_walk(dis, n);
        auto field = env::epsilon_drift(walk, cfg.eps);
        auto dcoef = discrete_d_coefficients(g_fn, field);
        double dmax = 0.0;
        for (double v : dcoef) dmax = std::max(dmax, std::abs(v));
        auto fug = le_fugacities(g, cfg.rho0, n, nullptr);
        inv::ProductSampler sampler(g, fug);

        std::vector<double> mart(std::size_t(cfg.replicas));
        parallel_for(cfg.replicas, cfg.threads, [&](int r) {
            Rng rng(cfg.seed_dyn, replica_stream(n, r) ^ 0x4d47ULL);
            zr::Configuration conf(n, sampler.sample(rng));
            double g0 = pairing(conf, g_fn);
            zr::EventState state(conf, field, g);
            MartingaleObserver obs{&state, &dcoef};
            obs.rebuild();
            state.run_until(t_end, rng, obs);
            double gt = pairing(state.config(), g_fn);
            mart[std::size_t(r)] = gt - g0 - obs.integral.value() / double(n);
        });

        RunningStats st;
        for (double v : mart) st.add(v);
        MartingaleRow row;
        row.n = n;
        row.mean = st.mean;
        row.variance = st.variance();
        row.std_error = std::sqrt(st.variance() / double(cfg.replicas));
        row.n_times_var = double(n) * st.variance();
        row.d_bound_max = dmax;
        if (std::abs(row.mean) > 3.0 * row.std_error) rep.mean_within_3se = false;
        rep.rows.push_back(row);
    }
    double lo = rep.rows.front().n_times_var, hi = lo;
    for (const auto& r : rep.rows) {
        lo = std::min(lo, r.n_times_var);
        hi = std::max(hi, r.n_times_var);
    }
    rep.cross_n_factor = hi / lo;
    rep.seconds = now_seconds() - t0;
    return rep;
}

// ---------------------------------------------------------------------------
// replacement diagnostic
// ---------------------------------------------------------------------------

namespace {

struct ReplacementObserver {
    zr::EventState* state;
    const std::vector<double>* dcoef;
    const inv::PhiMap* phi;
    int l = 0;
    double inv_w = 1.0;
    std::vector<long> block; // (2l+1) eta^l(k), exact integers
    double a_g = 0.0;
    double a_phi = 0.0;
    KahanSum integral;
    long events = 0;

    void rebuild() {
        const auto& eta = state->config().eta;
        const int n = state->n();
        block.assign(std::size_t(n), 0);
        long s = 0;
        for (int y = -l; y <= l; ++y) s += eta[std::size_t((y + n) % n)];
        for (int k = 0; k < n; ++k) {
            block[std::size_t(k)] = s;
            int drop = (k - l + n) % n;
            int add = (k + l + 1) % n;
            s += eta[std::size_t(add)] - eta[std::size_t(drop)];
        }
        KahanSum sg, sp;
        for (int k = 0; k < n; ++k) {
            sg.add((*dcoef)[std::size_t(k)] * state->site_rate(eta[std::size_t(k)]));
            sp.add((*dcoef)[std::size_t(k)] * (*phi)(double(block[std::size_t(k)]) * inv_w));
        }
        a_g = sg.value();
        a_phi = sp.value();
    }

    void bump_block(int y, long delta) {
        double before = (*phi)(double(block[std::size_t(y)]) * inv_w);
        block[std::size_t(y)] += delta;
        double after = (*phi)(double(block[std::size_t(y)]) * inv_w);
        a_phi += (*dcoef)[std::size_t(y)] * (after - before);
    }

    void on_hold(double dt) { integral.add(dt * (a_g - a_phi)); }
    void on_jump(int k, int dir, long m_before) {
        const int n = state->n();
        int j = k + dir;
        if (j < 0) j += n;
        if (j >= n) j -= n;
        long mj = state->config().eta[std::size_t(j)];
        a_g += (*dcoef)[std::size_t(k)] *
               (state->site_rate(m_before - 1) - state->site_rate(m_before));
        a_g += (*dcoef)[std::size_t(j)] * (state->site_rate(mj) - state->site_rate(mj - 1));
        if (dir > 0) {
            bump_block((k - l + n) % n, -1);
            bump_block((k + l + 1) % n, +1);
        } else {
            bump_block((k + l) % n, -1);
            bump_block((k - l - 1 + n) % n, +1);
        }
        if ((++events & ((1L << 22) - 1)) == 0) rebuild();
    }
};

} // namespace

ReplacementReport replacement_diag(const ExperimentConfig& cfg, const TestFunctionG& g_fn,
                                   double t_end, const std::vector<double>& thetas) {
    double t0 = now_seconds();
    ReplacementReport rep;
    RateFunction g = RateFunction::preset(cfg.g_spec);
    int max_n = *std::max_element(cfg.ns.begin(), cfg.ns.end());
    auto dis = env::gen_disorder(cfg.seed_env, std::size_t(3) * std::size_t(max_n), cfg.law);
    double rho_cap = std::abs(cfg.rho0.a0) + std::abs(cfg.rho0.a1);
    inv::PhiMap phi(g, std::max(8.0, 4.0 * rho_cap));

    for (int n : cfg.ns) {
        auto walk = env::build_walk(dis, n);
        auto field = env::epsilon_drift(walk, cfg.eps);
        auto dcoef = discrete_d_coefficients(g_fn, field);
        auto fug = le_fugacities(g, cfg.rho0, n, nullptr);
        inv::ProductSampler sampler(g, fug);
        for (double theta : thetas) {
            int l = int(std::floor(theta * n));
            if (2 * l + 1 > n || l < 1)
                throw std::invalid_argument("replacement_diag: theta*N out of range");
            std::vector<double> stat(std::size_t(cfg.replicas));
            parallel_for(cfg.replicas, cfg.threads, [&](int r) {
                Rng rng(cfg.seed_dyn, replica_stream(n, r) ^ 0x5245ULL);
                zr::Configuration conf(n, sampler.sample(rng));
                zr::EventState state(conf, field, g);
                ReplacementObserver obs;
                obs.state = &state;
                obs.dcoef = &dcoef;
                obs.phi = &phi;
                obs.l = l;
                obs.inv_w = 1.0 / double(2 * l + 1);
                obs.rebuild();
                state.run_until(t_end, rng, obs);
                stat[std::size_t(r)] = std::abs(obs.integral.value() / double(n));
            });
            RunningStats st;
            for (double v : stat) st.add(v);
            rep.cells.push_back({n, theta, st.mean});
        }
    }
    rep.seconds = now_seconds() - t0;
    return rep;
}

// ---------------------------------------------------------------------------
// Seignourel vs Brox
// ---------------------------------------------------------------------------

CompareReport compare_experiment(const CompareConfig& cfg) {
    double t0 = now_seconds();
    CompareReport rep;
    std::size_t need = std::size_t(4) << 20;
    auto dis = env::gen_disorder(cfg.seed_env, need, cfg.law);

    brox::TwoSidedWalk walk(dis, cfg.walk_resolution, 4.0);
    double span_cap = std::min(24.0, walk.max_span());
    walk.extend_to(span_cap);
    auto w_tilde = brox::BroxSampler::env_from_walk(walk, dis.sigma);
    brox::BroxSampler proto(w_tilde, 1.0 / double(cfg.walk_resolution), span_cap, span_cap);

    rep.brox_samples.resize(std::size_t(cfg.samples));
    {
        int threads = cfg.threads;
        parallel_for(threads, threads, [&](int tid) {
            brox::BroxSampler local = proto;
            for (int i = tid; i < cfg.samples; i += threads) {
                brox::BrownianDriver b(cfg.seed_dyn, 0xb000000ULL + std::uint64_t(i), cfg.brox_dt);
                rep.brox_samples[std::size_t(i)] = local.sample(cfg.t, b);
            }
        });
    }

    for (long n : cfg.ns) {
        std::vector<double> s(std::size_t(cfg.samples));
        int threads = cfg.threads;
        parallel_for(threads, threads, [&](int tid) {
            brox::RandomWalkInEnvironment walker(dis, 1.0 / std::sqrt(double(n)));
            long steps = long(std::floor(double(n) * double(n) * cfg.t));
            for (int i = tid; i < cfg.samples; i += threads) {
                Rng rng(cfg.seed_dyn, 0x5e000000ULL ^ (std::uint64_t(n) << 20) ^ std::uint64_t(i));
                s[std::size_t(i)] = double(walker.run_steps(steps, rng)) / double(n);
            }
        });
        rep.ks_per_n.push_back(ks_two_sample(s, rep.brox_samples));
        rep.seignourel_samples.push_back(std::move(s));
    }

    // zero-disorder reduction vs the Gaussian law
    {
        env::DisorderSequence zero;
        zero.seed = cfg.seed_env;
        zero.law = cfg.law;
        zero.sigma = 1.0;
        zero.values.assign(std::size_t(1) << 10, 0.0);
        long n = cfg.ns.back();
        std::vector<double> s(std::size_t(cfg.samples));
        int threads = cfg.threads;
        parallel_for(threads, threads, [&](int tid) {
            brox::RandomWalkInEnvironment walker(zero, 1.0 / std::sqrt(double(n)));
            long steps = long(std::floor(double(n) * double(n) * cfg.t));
            for (int i = tid; i < cfg.samples; i += threads) {
                Rng rng(cfg.seed_dyn, 0x0d000000ULL ^ std::uint64_t(i));
                s[std::size_t(i)] = double(walker.run_steps(steps, rng)) / double(n);
            }
        });
        double root_t = std::sqrt(cfg.t);
        for (auto& v : s) v /= root_t;
        rep.ks_zero_disorder_gauss = ks_vs_cdf(std::move(s), &normal_cdf);
    }
    rep.seconds = now_seconds() - t0;
    return rep;
}

} // namespace zrs::harness
