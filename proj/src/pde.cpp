#include "zrs/pde.hpp"

#include <cmath>
#include <stdexcept>

namespace zrs::pde {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;
}

double WeakTest::h(double x) const {
    if (freq == 0) return 1.0;
    double a = two_pi * freq * x;
    return use_sin ? std::sin(a) : std::cos(a);
}
double WeakTest::dh(double x) const {
    if (freq == 0) return 0.0;
    double w = two_pi * freq;
    double a = w * x;
    return use_sin ? w * std::cos(a) : -w * std::sin(a);
}
double WeakTest::d2h(double x) const {
    if (freq == 0) return 0.0;
    double w = two_pi * freq;
    return -w * w * h(x);
}

PdeResult solve_pde(const DensityField& rho0, const DriftSampler& drift, const RateFunction& g,
                    double t_end, std::vector<double> snapshots, PdeOptions opt) {
    const int m = rho0.m;
    if (m < 2) throw std::invalid_argument("solve_pde: grid too small");
    for (double v : rho0.values)
        if (!(v >= 0.0)) throw std::invalid_argument("solve_pde: rho0 must be nonnegative");
    std::sort(snapshots.begin(), snapshots.end());
    if (!snapshots.empty() && snapshots.back() > t_end)
        throw std::invalid_argument("solve_pde: snapshot beyond t_end");
    if (snapshots.empty() || snapshots.back() < t_end) snapshots.push_back(t_end);

    const double dx = rho0.dx;
    double rho_cap = 0.0;
    for (double v : rho0.values) rho_cap = std::max(rho_cap, v);
    inv::PhiMap phi(g, std::max(4.0, 3.0 * rho_cap + 1.0), opt.phi_nodes);

    // face i sits at x = i dx between cells i-1 and i
    std::vector<double> wprime(std::size_t(m));
    double wmax = 0.0;
    for (int i = 0; i < m; ++i) {
        wprime[std::size_t(i)] = drift(double(i) * dx);
        wmax = std::max(wmax, std::abs(wprime[std::size_t(i)]));
    }

    double dt_par = opt.cfl * dx * dx / phi.max_phi_prime();
    double dt_adv = wmax > 0 ? 0.25 * dx / (2.0 * wmax * phi.max_phi_prime()) : dt_par;
    const double dt_max = std::min(dt_par, dt_adv);
    if (!(dt_max > 0.0)) throw std::runtime_error("solve_pde: CFL produced empty step");

    PdeResult out;
    DensityField rho = rho0;
    const double mass0 = rho.mass();
    std::vector<double> flux(std::size_t(m));
    double t = 0.0;
    double min_seen = 0.0;

    auto do_step = [&](double dt) {
        for (int i = 0; i < m; ++i) {
            int left = i == 0 ? m - 1 : i - 1;
            double pl = phi(rho.values[std::size_t(left)]);
            double pr = phi(rho.values[std::size_t(i)]);
            double w = wprime[std::size_t(i)];
            double adv;
            if (opt.flux == FluxType::upwind)
                adv = w >= 0.0 ? pl : pr;
            else
                adv = 0.5 * (pl + pr);
            flux[std::size_t(i)] = -(pr - pl) / (2.0 * dx) + 2.0 * w * adv;
        }
        const double c = dt / dx;
        for (int i = 0; i < m; ++i) {
            int right = i + 1 == m ? 0 : i + 1;
            double v = rho.values[std::size_t(i)] -
                       c * (flux[std::size_t(right)] - flux[std::size_t(i)]);
            if (v < min_seen) min_seen = v;
            if (v < 0.0) {
                if (v < -1e-12)
                    throw std::runtime_error("solve_pde: negativity beyond tolerance at step " +
                                             std::to_string(out.steps) + ", value " +
                                             std::to_string(v));
                v = 0.0;
            }
            rho.values[std::size_t(i)] = v;
        }
        ++out.steps;
    };

    out.times.push_back(0.0);
    out.fields.push_back(rho);
    for (double target : snapshots) {
        double span = target - t;
        if (span < 0) continue;
        long nsteps = span > 0 ? long(std::ceil(span / dt_max - 1e-12)) : 0;
        double dt = nsteps > 0 ? span / double(nsteps) : 0.0;
        for (long s = 0; s < nsteps; ++s) do_step(dt);
        t = target;
        double mass = rho.mass();
        if (!std::isfinite(mass))
            throw std::runtime_error("solve_pde: NaN detected at t = " + std::to_string(t) +
                                     " after " + std::to_string(out.steps) + " steps");
        out.mass_drift_rel = std::max(out.mass_drift_rel, std::abs(mass - mass0) / mass0);
        out.times.push_back(t);
        out.fields.push_back(rho);
        out.dt = dt;
    }
    out.min_value = min_seen;
    return out;
}

double weak_residual(const std::vector<double>& times, const std::vector<DensityField>& traj,
                     const DensityField& rho0, const DriftSampler& drift,
                     const std::function<double(double)>& phi_of_density, const WeakTest& test) {
    const std::size_t nt = times.size();
    if (nt < 3 || nt % 2 == 0 || traj.size() != nt)
        throw std::invalid_argument("weak_residual: need odd uniform time grid");
    const double t_end = times.back();
    if (std::abs(test.t_end - t_end) > 1e-12 * std::max(1.0, t_end) ||
        std::abs(test.psi(t_end)) > 1e-14)
        throw std::invalid_argument("weak_residual: test must vanish at the horizon");
    const int m = traj.front().m;
    const double dx = traj.front().dx;
    const double ht = times[1] - times[0];

    // spatial coefficients are time-independent
    std::vector<double> hx(std::size_t(m)), dhx(std::size_t(m)), d2hx(std::size_t(m)),
        wpr(std::size_t(m));
    for (int i = 0; i < m; ++i) {
        double x = traj.front().x_center(i);
        hx[std::size_t(i)] = test.h(x);
        dhx[std::size_t(i)] = test.dh(x);
        d2hx[std::size_t(i)] = test.d2h(x);
        wpr[std::size_t(i)] = drift(x);
    }

    std::vector<double> integrand(nt);
    for (std::size_t s = 0; s < nt; ++s) {
        KahanSum sp;
        double psi = test.psi(times[s]);
        double dpsi = test.dpsi(times[s]);
        for (int i = 0; i < m; ++i) {
            double r = traj[s].values[std::size_t(i)];
            double p = phi_of_density(r);
            sp.add(dpsi * hx[std::size_t(i)] * r);
            sp.add(psi * (0.5 * d2hx[std::size_t(i)] + 2.0 * dhx[std::size_t(i)] * wpr[std::size_t(i)]) * p);
        }
        integrand[s] = sp.value() * dx;
    }
    double time_part = simpson(integrand, ht);

    KahanSum init;
    for (int i = 0; i < m; ++i)
        init.add(test.psi(0.0) * hx[std::size_t(i)] * rho0.values[std::size_t(i)]);
    return time_part + init.value() * dx;
}

StationaryProfile stationary_profile(const DriftSampler& drift, double total_mass,
                                     const RateFunction& g, int m) {
    if (!(total_mass > 0.0)) throw std::invalid_argument("stationary_profile: mass > 0");
    // cumulative V(x) = int_0^x W' on a fine grid, trapezoid
    const int fine = std::max(4 * m, 4096);
    std::vector<double> v(std::size_t(fine) + 1, 0.0);
    const double h = 1.0 / double(fine);
    {
        double prev = drift(0.0);
        KahanSum acc;
        for (int i = 1; i <= fine; ++i) {
            double cur = drift(double(i) * h);
            acc.add(0.5 * h * (prev + cur));
            v[std::size_t(i)] = acc.value();
            prev = cur;
        }
    }
    auto v_at = [&](double x) {
        double gpos = x * fine;
        int i = int(std::floor(gpos));
        if (i < 0) i = 0;
        if (i >= fine) i = fine - 1;
        double t = gpos - i;
        return (1.0 - t) * v[std::size_t(i)] + t * v[std::size_t(i + 1)];
    };
    // I(x) = int_0^x exp(-4V)
    std::vector<double> bigI(std::size_t(fine) + 1, 0.0);
    {
        double prev = std::exp(-4.0 * v[0]);
        KahanSum acc;
        for (int i = 1; i <= fine; ++i) {
            double cur = std::exp(-4.0 * v[std::size_t(i)]);
            acc.add(0.5 * h * (prev + cur));
            bigI[std::size_t(i)] = acc.value();
            prev = cur;
        }
    }
    auto i_at = [&](double x) {
        double gpos = x * fine;
        int i = int(std::floor(gpos));
        if (i < 0) i = 0;
        if (i >= fine) i = fine - 1;
        double t = gpos - i;
        return (1.0 - t) * bigI[std::size_t(i)] + t * bigI[std::size_t(i + 1)];
    };

    const double v1 = v[std::size_t(fine)];
    const double i1 = bigI[std::size_t(fine)];
    const double bracket_coef = std::expm1(-4.0 * v1); // e^{-4V(1)} - 1

    // u(x; u0) = u0 e^{4V(x)} (1 + bracket_coef * I(x)/I(1)); strictly positive
    DensityField rho(m);
    std::vector<double> u_hat(std::size_t(m));
    for (int i = 0; i < m; ++i) {
        double x = rho.x_center(i);
        double val = std::exp(4.0 * v_at(x)) * (1.0 + bracket_coef * i_at(x) / i1);
        if (!(val > 0.0) || !std::isfinite(val))
            throw std::runtime_error("stationary_profile: flux balance became degenerate");
        u_hat[std::size_t(i)] = val;
    }

    auto mass_of = [&](double u0) {
        KahanSum s;
        for (int i = 0; i < m; ++i) s.add(inv::moments(g, u0 * u_hat[std::size_t(i)]).mean);
        return s.value() / double(m);
    };
    double lo = 0.0, hi = 1.0;
    while (mass_of(hi) < total_mass) {
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("stationary_profile: mass bracketing failed");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mass_of(mid) < total_mass)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-14 * hi) break;
    }
    double u0 = 0.5 * (lo + hi);
    StationaryProfile out;
    out.u0 = u0;
    for (int i = 0; i < m; ++i)
        rho.values[std::size_t(i)] = inv::moments(g, u0 * u_hat[std::size_t(i)]).mean;
    out.rho = std::move(rho);
    // gamma_c from periodicity: u' = 4W'u + 2 gamma_c
    out.gamma_c = u0 * bracket_coef / (2.0 * i1);
    return out;
}

} // namespace zrs::pde
