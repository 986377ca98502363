#include "ssepwin/boundary_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace ssepwin {

namespace {

constexpr double kDomainSlack = 1e-9;

double clamp_unit(double f, const char* what) {
    if (f < -kDomainSlack || f > 1.0 + kDomainSlack)
        throw std::domain_error(std::string(what) + " outside [0,1]: " +
                                std::to_string(f));
    return std::clamp(f, 0.0, 1.0);
}

// v_1 = 1, v_2 = y + z, v_x = y^(x-1) + z^(x-1) + sum_{i=1..x-2} z^i y^(x-1-i).
// The cross terms are accumulated in (i, x-1-i) pairs so the value is exactly
// invariant under swapping y and z.
double v_term(int x, double y, double z) {
    if (x == 1) return 1.0;
    if (x == 2) return y + z;
    double s = std::pow(y, x - 1) + std::pow(z, x - 1);
    for (int i = 1; i < x - 1 - i; ++i)
        s += std::pow(z, i) * std::pow(y, x - 1 - i) +
             std::pow(y, i) * std::pow(z, x - 1 - i);
    if ((x - 1) % 2 == 0) {
        const int half = (x - 1) / 2;
        s += std::pow(z, half) * std::pow(y, half);
    }
    return s;
}

// sum_{x=1..K} (phi_x - phi_{x+1}) v_x(y,z) with phi_{K+1} = 0.
double v_single(const std::vector<double>& phi, double y, double z) {
    const int K = static_cast<int>(phi.size());
    double s = 0.0;
    for (int x = 1; x <= K; ++x) {
        const double step = phi[x - 1] - (x < K ? phi[x] : 0.0);
        s += step * v_term(x, y, z);
    }
    return s;
}

}  // namespace

DPair::DPair(std::vector<double> l, std::vector<double> s)
    : lambda(std::move(l)), sigma(std::move(s)) {
    if (lambda.size() != sigma.size() || lambda.empty())
        throw std::invalid_argument("DPair sequences must have equal positive length");
    for (double v : lambda)
        if (!(v >= 0.0)) throw std::invalid_argument("DPair lambda entry negative");
    for (double v : sigma)
        if (!(v >= 0.0)) throw std::invalid_argument("DPair sigma entry negative");
}

double boundary_flux(const DPair& p, double f) {
    f = clamp_unit(f, "boundary_flux argument");
    const int K = p.window();
    double s = 0.0;
    double fp = 1.0;   // f^(x-1)
    double gp = 1.0;   // (1-f)^(x-1)
    const double g = 1.0 - f;
    for (int x = 1; x <= K; ++x) {
        s += p.lambda[x - 1] * g * fp - p.sigma[x - 1] * f * gp;
        fp *= f;
        gp *= g;
    }
    return s;
}

double flux_slope(const DPair& p, double y, double z) {
    y = clamp_unit(y, "flux_slope argument y");
    z = clamp_unit(z, "flux_slope argument z");
    return v_single(p.lambda, y, z) + v_single(p.sigma, 1.0 - y, 1.0 - z);
}

double mass_fixed_point(const AggregateRates& agg) {
    if (agg.injection.empty() || agg.injection.size() != agg.removal.size())
        throw std::invalid_argument("aggregate rate sequences malformed");
    if (!(agg.injection[0] > 0.0) || !(agg.removal[0] > 0.0))
        throw std::invalid_argument(
            "mass_fixed_point requires injection[1] > 0 and removal[1] > 0");
    const DPair p(agg.injection, agg.removal);
    // flux(0) = injection[1] > 0, flux(1) = -removal[1] < 0, flux decreasing.
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        const double fm = boundary_flux(p, mid);
        if (fm == 0.0) return mid;
        if (fm > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

MassFlowQuadratic mass_flow_quadratic(const AggregateRates& agg) {
    if (agg.injection.size() != 2 || agg.removal.size() != 2)
        throw std::invalid_argument("mass_flow_quadratic requires K = 2");
    const double i1 = agg.injection[0], i2 = agg.injection[1];
    const double o1 = agg.removal[0], o2 = agg.removal[1];

    MassFlowQuadratic q;
    q.a = -(i2 - o2);
    q.b = (i2 - o2) - (i1 + o1);
    q.c = i1;
    if (std::abs(q.a) < 1e-14) {
        q.linear = true;
        if (q.b == 0.0)
            throw std::invalid_argument(
                "degenerate mass flow: injection[1] + removal[1] = 0");
        q.m_star = -q.c / q.b;
        return q;
    }
    q.disc = q.b * q.b - 4.0 * q.a * q.c;
    const double root = std::sqrt(q.disc);
    q.kappa_plus = (-q.b + root) / (2.0 * q.a);
    q.kappa_minus = (-q.b - root) / (2.0 * q.a);
    q.m_star = q.kappa_minus;
    return q;
}

double mass_closed_form(const AggregateRates& agg, double m0, double t) {
    m0 = clamp_unit(m0, "mass_closed_form m0");
    const MassFlowQuadratic q = mass_flow_quadratic(agg);
    if (q.linear) return (m0 + q.c / q.b) * std::exp(q.b * t) - q.c / q.b;
    if (m0 == q.kappa_plus || m0 == q.kappa_minus) return m0;
    const double eps =
        (q.kappa_minus - m0) / (q.kappa_plus - m0) * std::exp(-std::sqrt(q.disc) * t);
    return q.kappa_plus + (q.kappa_minus - q.kappa_plus) / (1.0 - eps);
}

double MassTrajectory::value_at(double time) const {
    if (t.empty()) throw std::logic_error("empty trajectory");
    if (time <= t.front()) return m.front();
    if (time >= t.back()) return m.back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * m[i - 1] + w * m[i];
}

MassTrajectory mass_ode_rk4(const AggregateRates& agg, double m0, double t_end,
                            double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    m0 = clamp_unit(m0, "mass_ode_rk4 m0");
    const DPair p(agg.injection, agg.removal);
    const auto f = [&p](double m) {
        return boundary_flux(p, std::clamp(m, 0.0, 1.0));
    };

    MassTrajectory traj;
    traj.t.push_back(0.0);
    traj.m.push_back(m0);
    double t = 0.0, m = m0;
    while (t < t_end - 1e-15) {
        const double h = std::min(dt, t_end - t);
        const double k1 = f(m);
        const double k2 = f(m + 0.5 * h * k1);
        const double k3 = f(m + 0.5 * h * k2);
        const double k4 = f(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(m))
            throw std::runtime_error("mass ODE produced a non-finite state at t = " +
                                     std::to_string(t));
        if (m < 0.0 || m > 1.0) {
            m = std::clamp(m, 0.0, 1.0);
            ++traj.clip_count;
        }
        t += h;
        traj.t.push_back(t);
        traj.m.push_back(m);
    }
    return traj;
}

namespace {

// Root of an increasing function with g(lo) <= 0 <= g(hi).
double bisect_root(const std::function<double(double)>& g, double lo, double hi,
                   double width) {
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        if (gm < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

StationaryProfile stationary_profile(const BoundaryParams& params) {
    const AssumptionReport rep = validate(params);
    if (!rep.rates_nonincreasing || !rep.boundary_ordered)
        throw std::invalid_argument(
            "stationary_profile requires non-increasing rates and ordered "
            "first-site rates (uniqueness is not guaranteed otherwise)");

    const DPair left(params.alpha, params.gamma);
    const DPair right(params.beta, params.delta);
    constexpr double kWidth = 1e-13;

    // Which edge anchors the inner map: solve for the partner of the edge whose
    // flux range contains the other's. Ties use the first branch.
    const bool anchor_right =
        params.delta[0] <= params.alpha[0] && params.beta[0] <= params.gamma[0];

    StationaryProfile prof;
    if (anchor_right) {
        // For fixed rho1, -flux_left(rho0) = flux_right(rho1) has a unique
        // root rho0 (the left side sweeps [-alpha1, gamma1] which contains
        // [-delta1, beta1]).
        const auto partner = [&](double rho1) {
            const double target = boundary_flux(right, rho1);
            return bisect_root(
                [&](double r0) { return -boundary_flux(left, r0) - target; },
                0.0, 1.0, kWidth);
        };
        const auto T = [&](double u) {
            return u - partner(u) - boundary_flux(right, u);
        };
        prof.rho1 = bisect_root(T, 0.0, 1.0, kWidth);
        prof.rho0 = partner(prof.rho1);
    } else {
        const auto partner = [&](double rho0) {
            const double target = -boundary_flux(left, rho0);
            // flux_right is decreasing, so negate to bisect an increasing map.
            return bisect_root(
                [&](double r1) { return target - boundary_flux(right, r1); },
                0.0, 1.0, kWidth);
        };
        const auto T = [&](double u) {
            return u - partner(u) - boundary_flux(left, u);
        };
        prof.rho0 = bisect_root(T, 0.0, 1.0, kWidth);
        prof.rho1 = partner(prof.rho0);
    }
    return prof;
}

}  // namespace ssepwin
