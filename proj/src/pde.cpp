#include "ssepwin/pde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ssepwin::pde {

namespace {

constexpr double kValueSlack = 1e-9;

DPair left_pair(const BoundaryParams& p) { return DPair(p.alpha, p.gamma); }
DPair right_pair(const BoundaryParams& p) { return DPair(p.beta, p.delta); }

double flux_or_zero(const DPair& p, double f, bool active) {
    return active ? boundary_flux(p, std::clamp(f, 0.0, 1.0)) : 0.0;
}

void check_range(const std::vector<double>& v, double t) {
    for (double x : v)
        if (x < -kValueSlack || x > 1.0 + kValueSlack)
            throw std::runtime_error("solution left [0,1] at t = " +
                                     std::to_string(t) + " (value " +
                                     std::to_string(x) + ")");
}

// Tridiagonal solve (Thomas). diag/upper/lower are the constant
// Crank-Nicolson coefficients; rhs is overwritten with the solution.
class Tridiag {
public:
    Tridiag(std::vector<double> lower, std::vector<double> diag,
            std::vector<double> upper)
        : lower_(std::move(lower)), diag_(std::move(diag)),
          upper_(std::move(upper)) {
        const std::size_t n = diag_.size();
        cp_.resize(n);
        denom_.resize(n);
        cp_[0] = upper_[0] / diag_[0];
        denom_[0] = diag_[0];
        for (std::size_t i = 1; i < n; ++i) {
            denom_[i] = diag_[i] - lower_[i] * cp_[i - 1];
            cp_[i] = upper_[i] / denom_[i];
        }
    }

    void solve(std::vector<double>& rhs) const {
        const std::size_t n = rhs.size();
        rhs[0] /= denom_[0];
        for (std::size_t i = 1; i < n; ++i)
            rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) / denom_[i];
        for (std::size_t i = n - 1; i-- > 0;)
            rhs[i] -= cp_[i] * rhs[i + 1];
    }

private:
    std::vector<double> lower_, diag_, upper_, cp_, denom_;
};

GridFunction resample(const GridFunction& f, int m) {
    if (f.m == m) return f;
    GridFunction g;
    g.m = m;
    g.t = f.t;
    g.values.resize(m + 1);
    for (int i = 0; i <= m; ++i) g.values[i] = f.eval(g.u(i));
    return g;
}

double trapezoid(const std::vector<double>& v) {
    double s = 0.0;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i)
        s += (i == 0 || i == n - 1) ? 0.5 * v[i] : v[i];
    return s / (n - 1);
}

struct StepOutcome {
    bool converged = false;
    int iterations = 0;
};

}  // namespace

BcKind bc_for_theta(double theta) {
    return theta == 1.0 ? BcKind::NonlinearRobin : BcKind::Neumann;
}

void Problem::require_consistent() const {
    params.require_valid();
    if (bc == BcKind::NonlinearRobin && params.theta != 1.0)
        throw std::invalid_argument("nonlinear flux conditions require theta = 1");
    if (bc == BcKind::Neumann && params.theta <= 1.0)
        throw std::invalid_argument("zero-flux conditions require theta > 1");
    for (double v : f0.values)
        if (v < -kValueSlack || v > 1.0 + kValueSlack)
            throw std::invalid_argument("initial profile must take values in [0,1]");
}

const GridFunction& Solution::at_time(double t) const {
    if (frames.empty()) throw std::logic_error("empty solution");
    const GridFunction* best = &frames.front();
    double gap = std::abs(best->t - t);
    for (const auto& f : frames) {
        const double g = std::abs(f.t - t);
        if (g < gap) {
            gap = g;
            best = &f;
        }
    }
    return *best;
}

Solution solve(const Problem& problem, double t_end, int m, double dt,
               int store_every) {
    problem.require_consistent();
    if (m < 8) throw std::invalid_argument("need at least 8 cells");
    if (t_end < 0.0) throw std::invalid_argument("t_end must be >= 0");
    if (store_every < 1) store_every = 1;
    if (dt <= 0.0) dt = std::min(1e-3, 0.5 / (static_cast<double>(m) * m));

    const bool robin = problem.bc == BcKind::NonlinearRobin;
    const DPair fl = left_pair(problem.params);
    const DPair fr = right_pair(problem.params);

    Solution sol;
    sol.m = m;
    sol.bc = problem.bc;
    sol.t_end = t_end;

    for (int attempt = 0;; ++attempt) {
        // Uniform steps landing exactly on t_end (dt is only ever shrunk).
        const long long steps =
            t_end > 0.0
                ? std::max<long long>(
                      1, static_cast<long long>(std::ceil(t_end / dt - 1e-9)))
                : 0;
        if (steps > 0) dt = t_end / static_cast<double>(steps);
        sol.dt = dt;
        sol.frames.clear();
        sol.max_picard = 0;

        const double h = 1.0 / m;
        const double r = dt / (h * h);
        std::vector<double> lower(m + 1, -0.5 * r), diag(m + 1, 1.0 + r),
            upper(m + 1, -0.5 * r);
        upper[0] = -r;
        lower[m] = -r;
        const Tridiag tri(lower, diag, upper);

        GridFunction cur = resample(problem.f0, m);
        cur.t = 0.0;
        sol.frames.push_back(cur);

        bool failed = false;
        std::vector<double> rhs(m + 1);

        for (long long n = 0; n < steps && !failed; ++n) {
            const double t_next =
                n + 1 == steps ? t_end : (n + 1) * dt;
            const auto& u = cur.values;
            // Explicit half of the scheme; boundary rows use the ghost
            // relation, which folds the flux into a source term.
            rhs[0] = (1.0 - r) * u[0] + r * u[1];
            for (int i = 1; i < m; ++i)
                rhs[i] = 0.5 * r * u[i - 1] + (1.0 - r) * u[i] +
                         0.5 * r * u[i + 1];
            rhs[m] = r * u[m - 1] + (1.0 - r) * u[m];
            const double explicit_fl = flux_or_zero(fl, u[0], robin);
            const double explicit_fr = flux_or_zero(fr, u[m], robin);

            double frozen_fl = explicit_fl;
            double frozen_fr = explicit_fr;
            StepOutcome out;
            std::vector<double> sys(m + 1);
            for (int it = 0; it < 50; ++it) {
                sys = rhs;
                sys[0] += (dt / h) * (explicit_fl + frozen_fl);
                sys[m] += (dt / h) * (explicit_fr + frozen_fr);
                tri.solve(sys);
                const double new_fl = flux_or_zero(fl, sys[0], robin);
                const double new_fr = flux_or_zero(fr, sys[m], robin);
                const double residual =
                    (dt / h) * std::max(std::abs(new_fl - frozen_fl),
                                        std::abs(new_fr - frozen_fr));
                frozen_fl = new_fl;
                frozen_fr = new_fr;
                out.iterations = it + 1;
                if (residual <= 1e-12) {
                    out.converged = true;
                    break;
                }
            }
            sol.max_picard = std::max(sol.max_picard, out.iterations);
            if (!out.converged) {
                failed = true;
                break;
            }
            cur.values = sys;
            cur.t = t_next;
            check_range(cur.values, cur.t);
            if ((n + 1) % store_every == 0 || n + 1 == steps)
                sol.frames.push_back(cur);
        }

        if (!failed) return sol;
        if (attempt >= 4)
            throw std::runtime_error(
                "boundary iteration failed to converge after 4 step halvings "
                "(dt = " + std::to_string(dt) + ")");
        dt *= 0.5;
        ++sol.dt_halvings;
    }
}

double weak_residual(const Problem& problem, const Solution& sol,
                     const TestFunction& G, double t) {
    problem.require_consistent();
    const int m = sol.m;
    const double h = 1.0 / m;
    const bool robin = sol.bc == BcKind::NonlinearRobin;
    const DPair fl = left_pair(problem.params);
    const DPair fr = right_pair(problem.params);

    std::vector<const GridFunction*> hist;
    for (const auto& f : sol.frames)
        if (f.t <= t + 1e-12) hist.push_back(&f);
    if (hist.empty()) throw std::invalid_argument("no frames at or before t");
    const GridFunction& last = *hist.back();

    // <rho_t, G_t> - <f0, G_0>
    std::vector<double> prod(m + 1);
    for (int i = 0; i <= m; ++i)
        prod[i] = last.values[i] * G.value(last.t, h * i);
    double F = trapezoid(prod);
    const GridFunction f0 = resample(problem.f0, m);
    for (int i = 0; i <= m; ++i) prod[i] = f0.values[i] * G.value(0.0, h * i);
    F -= trapezoid(prod);

    // Time integrals, trapezoid over stored frames.
    double acc_bulk = 0.0, acc_grad = 0.0, acc_flux = 0.0;
    double prev_bulk = 0.0, prev_grad = 0.0, prev_flux = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const GridFunction& f = *hist[k];
        for (int i = 0; i <= m; ++i)
            prod[i] = f.values[i] *
                      (G.duu(f.t, h * i) + G.dt(f.t, h * i));
        const double bulk = trapezoid(prod);
        const double grad = f.values[m] * G.du(f.t, 1.0) -
                            f.values[0] * G.du(f.t, 0.0);
        const double flux =
            robin ? G.value(f.t, 1.0) * flux_or_zero(fr, f.values[m], true) +
                        G.value(f.t, 0.0) * flux_or_zero(fl, f.values[0], true)
                  : 0.0;
        if (k > 0) {
            const double w = 0.5 * (f.t - hist[k - 1]->t);
            acc_bulk += w * (bulk + prev_bulk);
            acc_grad += w * (grad + prev_grad);
            acc_flux += w * (flux + prev_flux);
        }
        prev_bulk = bulk;
        prev_grad = grad;
        prev_flux = flux;
    }
    return F - acc_bulk + acc_grad - acc_flux;
}

double kernel_eval(const KernelConfig& cfg, double t, double u, double v) {
    if (cfg.image_count < 3) throw std::invalid_argument("image_count must be >= 3");
    if (!(cfg.t_floor > 0.0)) throw std::invalid_argument("t_floor must be > 0");
    if (t < cfg.t_floor)
        throw std::invalid_argument("kernel evaluation below the time floor");
    const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
    const double inv = 1.0 / (4.0 * t);
    double s = 0.0;
    for (int k = -cfg.image_count; k <= cfg.image_count; ++k) {
        const double d1 = u - (2.0 * k + v);
        const double d2 = u - (2.0 * k - v);
        s += std::exp(-d1 * d1 * inv) + std::exp(-d2 * d2 * inv);
    }
    return norm * s;
}

double kernel_time_integral(const KernelConfig& cfg, double eps, double u,
                            double v) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
    const double se = std::sqrt(eps);
    const double a = std::sqrt(eps / std::numbers::pi);
    double s = 0.0;
    for (int k = -cfg.image_count; k <= cfg.image_count; ++k) {
        for (const double w : {2.0 * k + v, 2.0 * k - v}) {
            const double d = std::abs(u - w);
            s += a * std::exp(-d * d / (4.0 * eps)) -
                 0.5 * d * std::erfc(d / (2.0 * se));
        }
    }
    return s;
}

Solution mild_solve(const Problem& problem, double t_end, int m, double dt,
                    int store_every, const KernelConfig& cfg) {
    problem.require_consistent();
    if (problem.bc != BcKind::NonlinearRobin)
        throw std::invalid_argument("the Duhamel path is for the theta = 1 problem");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (store_every < 1) store_every = 1;

    const DPair fl = left_pair(problem.params);
    const DPair fr = right_pair(problem.params);
    const int nt = static_cast<int>(std::llround(t_end / dt));
    if (nt < 1 || std::abs(nt * dt - t_end) > 1e-9 * std::max(1.0, t_end))
        throw std::invalid_argument("t_end must be an integer multiple of dt");

    // f0 refined 4x for the initial-data convolutions (the kernel is sharp at
    // early times).
    const int mf = 4 * m;
    const GridFunction f0f = resample(problem.f0, mf);
    const double hf = 1.0 / mf;
    const auto conv_f0 = [&](double t, double u) {
        double s = 0.0;
        for (int j = 0; j <= mf; ++j) {
            const double w = (j == 0 || j == mf) ? 0.5 : 1.0;
            s += w * kernel_eval(cfg, t, u, hf * j) * f0f.values[j];
        }
        return s * hf;
    };

    // Kernel tables between boundary points at multiples of dt.
    std::vector<double> p00(nt + 1), p01(nt + 1), p10(nt + 1), p11(nt + 1);
    for (int k = 1; k <= nt; ++k) {
        const double tau = k * dt;
        p00[k] = kernel_eval(cfg, tau, 0.0, 0.0);
        p01[k] = kernel_eval(cfg, tau, 0.0, 1.0);
        p10[k] = kernel_eval(cfg, tau, 1.0, 0.0);
        p11[k] = kernel_eval(cfg, tau, 1.0, 1.0);
    }
    const double i00 = kernel_time_integral(cfg, dt, 0.0, 0.0);
    const double i01 = kernel_time_integral(cfg, dt, 0.0, 1.0);
    const double i10 = kernel_time_integral(cfg, dt, 1.0, 0.0);
    const double i11 = kernel_time_integral(cfg, dt, 1.0, 1.0);

    std::vector<double> r0(nt + 1), r1(nt + 1), g0(nt + 1), g1(nt + 1);
    r0[0] = std::clamp(problem.f0.eval(0.0), 0.0, 1.0);
    r1[0] = std::clamp(problem.f0.eval(1.0), 0.0, 1.0);
    g0[0] = boundary_flux(fl, r0[0]);
    g1[0] = boundary_flux(fr, r1[0]);

    Solution sol;
    sol.m = m;
    sol.dt = dt;
    sol.t_end = t_end;
    sol.bc = problem.bc;

    // Composite rule for int_0^t_n P_(t_n - s) g(s) ds at a boundary point b:
    // trapezoid on the nodes 0..n-1 (kernel arguments >= dt, all regular) plus
    // the exact kernel integral over the final subinterval with g averaged
    // between its endpoints. The latter makes the step implicit in g_n.
    const auto history_sum = [&](int n, const std::vector<double>& pk0,
                                 const std::vector<double>& pk1) {
        double s = 0.0;
        if (n < 2) return s;  // no regular segment before the first node
        for (int l = 0; l <= n - 1; ++l) {
            double w = dt;
            if (l == 0 || l == n - 1) w *= 0.5;
            s += w * (pk0[n - l] * g0[l] + pk1[n - l] * g1[l]);
        }
        return s;
    };

    for (int n = 1; n <= nt; ++n) {
        const double tn = n * dt;
        const double base0 = conv_f0(tn, 0.0) + history_sum(n, p00, p01);
        const double base1 = conv_f0(tn, 1.0) + history_sum(n, p10, p11);

        double cur_g0 = g0[n - 1];
        double cur_g1 = g1[n - 1];
        double prev_r0 = r0[n - 1], prev_r1 = r1[n - 1];
        bool converged = false;
        for (int it = 0; it < 200; ++it) {
            const double new_r0 =
                base0 + i00 * 0.5 * (g0[n - 1] + cur_g0) +
                i01 * 0.5 * (g1[n - 1] + cur_g1);
            const double new_r1 =
                base1 + i10 * 0.5 * (g0[n - 1] + cur_g0) +
                i11 * 0.5 * (g1[n - 1] + cur_g1);
            const double diff = std::max(std::abs(new_r0 - prev_r0),
                                         std::abs(new_r1 - prev_r1));
            prev_r0 = new_r0;
            prev_r1 = new_r1;
            cur_g0 = boundary_flux(fl, std::clamp(new_r0, 0.0, 1.0));
            cur_g1 = boundary_flux(fr, std::clamp(new_r1, 0.0, 1.0));
            if (diff <= 1e-10 && it > 0) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw std::runtime_error(
                "Duhamel boundary iteration did not converge at t = " +
                std::to_string(tn));
        r0[n] = prev_r0;
        r1[n] = prev_r1;
        g0[n] = cur_g0;
        g1[n] = cur_g1;
    }

    // Interior profiles at the stored instants, one backward pass each.
    const auto frame_at = [&](int n) {
        GridFunction f;
        f.m = m;
        f.t = n * dt;
        f.values.resize(m + 1);
        for (int i = 0; i <= m; ++i) {
            const double u = static_cast<double>(i) / m;
            if (n == 0) {
                f.values[i] = std::clamp(problem.f0.eval(u), 0.0, 1.0);
                continue;
            }
            double s = conv_f0(f.t, u);
            if (n >= 2) {
                for (int l = 0; l <= n - 1; ++l) {
                    double w = dt;
                    if (l == 0 || l == n - 1) w *= 0.5;
                    const double tau = (n - l) * dt;
                    s += w * (kernel_eval(cfg, tau, u, 0.0) * g0[l] +
                              kernel_eval(cfg, tau, u, 1.0) * g1[l]);
                }
            }
            s += kernel_time_integral(cfg, dt, u, 0.0) * 0.5 *
                     (g0[n - 1] + g0[n]) +
                 kernel_time_integral(cfg, dt, u, 1.0) * 0.5 *
                     (g1[n - 1] + g1[n]);
            f.values[i] = s;
        }
        return f;
    };

    sol.frames.push_back(frame_at(0));
    for (int n = store_every; n < nt; n += store_every)
        sol.frames.push_back(frame_at(n));
    sol.frames.push_back(frame_at(nt));
    return sol;
}

}  // namespace ssepwin::pde
