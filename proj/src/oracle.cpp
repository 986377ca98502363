#include "ssepwin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace ssepwin::oracle {

namespace {

void apply_transposed(const GeneratorMatrix& gen, const std::vector<double>& x,
                      std::vector<double>& out) {
    out.assign(gen.dim, 0.0);
    for (std::uint32_t s = 0; s < gen.dim; ++s)
        out[s] -= gen.exit_rate[s] * x[s];
    for (const auto& tr : gen.transitions) out[tr.to] += tr.rate * x[tr.from];
}

}  // namespace

double Distribution::total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

std::vector<double> Distribution::site_marginals() const {
    std::vector<double> marg(n_sites, 0.0);
    for (std::uint32_t s = 0; s < probs.size(); ++s) {
        if (probs[s] == 0.0) continue;
        for (int b = 0; b < n_sites; ++b)
            if (s & (1u << b)) marg[b] += probs[s];
    }
    return marg;
}

double Distribution::mean_mass() const {
    double m = 0.0;
    for (std::uint32_t s = 0; s < probs.size(); ++s)
        if (probs[s] != 0.0)
            m += probs[s] * static_cast<double>(__builtin_popcount(s));
    return m / n_sites;
}

Distribution point_mass(int n_sites, std::uint32_t config) {
    if (n_sites < 1 || n_sites > kMaxSites)
        throw std::invalid_argument("site count outside 1..14");
    Distribution d;
    d.n_sites = n_sites;
    d.probs.assign(1u << n_sites, 0.0);
    d.probs.at(config) = 1.0;
    return d;
}

Distribution product_bernoulli(int n_sites, const std::vector<double>& p) {
    if (n_sites < 1 || n_sites > kMaxSites)
        throw std::invalid_argument("site count outside 1..14");
    if (static_cast<int>(p.size()) != n_sites)
        throw std::invalid_argument("marginal vector size mismatch");
    Distribution d;
    d.n_sites = n_sites;
    d.probs.assign(1u << n_sites, 1.0);
    for (std::uint32_t s = 0; s < d.probs.size(); ++s)
        for (int b = 0; b < n_sites; ++b)
            d.probs[s] *= (s & (1u << b)) ? p[b] : 1.0 - p[b];
    return d;
}

double GeneratorMatrix::row_sum_error() const {
    std::vector<double> row(dim, 0.0);
    for (const auto& tr : transitions) row[tr.from] += tr.rate;
    double err = 0.0;
    for (std::uint32_t s = 0; s < dim; ++s)
        err = std::max(err, std::abs(row[s] - exit_rate[s]));
    return err;
}

GeneratorMatrix generator_matrix(int N, const BoundaryParams& params) {
    params.require_valid();
    const int n = N - 1;
    if (n < 1 || n > kMaxSites)
        throw std::invalid_argument(
            "state space too large: the exact oracle is capped at N-1 <= 14");
    if (params.K > n)
        throw std::invalid_argument("window does not fit on the lattice");

    GeneratorMatrix gen;
    gen.N = N;
    gen.n_sites = n;
    gen.dim = 1u << n;
    gen.exit_rate.assign(gen.dim, 0.0);
    const double slowdown = std::pow(static_cast<double>(N), -params.theta);
    const auto bit = [](std::uint32_t s, int site) {
        return (s >> (site - 1)) & 1u;
    };

    for (std::uint32_t s = 0; s < gen.dim; ++s) {
        for (int x = 1; x <= N - 2; ++x) {
            if (bit(s, x) == bit(s, x + 1)) continue;
            const std::uint32_t t = s ^ (1u << (x - 1)) ^ (1u << x);
            gen.transitions.push_back({s, t, 1.0});
            gen.exit_rate[s] += 1.0;
        }
        for (int x = 1; x <= params.K; ++x) {
            // Left channel x.
            double occ_run = 1.0, vac_run = 1.0;
            for (int y = 1; y < x; ++y) {
                occ_run *= bit(s, y);
                vac_run *= 1.0 - bit(s, y);
            }
            const double eta_l = bit(s, x);
            const double cl = params.alpha[x - 1] * occ_run * (1.0 - eta_l) +
                              params.gamma[x - 1] * vac_run * eta_l;
            if (cl > 0.0) {
                gen.transitions.push_back({s, s ^ (1u << (x - 1)), slowdown * cl});
                gen.exit_rate[s] += slowdown * cl;
            }
            // Right channel x (distance x from the right edge).
            const int site = N - x;
            double occ_run_r = 1.0, vac_run_r = 1.0;
            for (int y = 1; y < x; ++y) {
                occ_run_r *= bit(s, N - y);
                vac_run_r *= 1.0 - bit(s, N - y);
            }
            const double eta_r = bit(s, site);
            const double cr = params.beta[x - 1] * occ_run_r * (1.0 - eta_r) +
                              params.delta[x - 1] * vac_run_r * eta_r;
            if (cr > 0.0) {
                gen.transitions.push_back({s, s ^ (1u << (site - 1)), slowdown * cr});
                gen.exit_rate[s] += slowdown * cr;
            }
        }
    }
    return gen;
}

Distribution evolve(const Distribution& init, const GeneratorMatrix& gen,
                    double t_micro) {
    if (init.n_sites != gen.n_sites)
        throw std::invalid_argument("distribution/generator size mismatch");
    if (t_micro < 0.0) throw std::invalid_argument("time must be >= 0");

    Distribution d = init;
    if (t_micro == 0.0) return d;

    double max_rate = 0.0;
    for (double r : gen.exit_rate) max_rate = std::max(max_rate, r);
    double h = max_rate > 0.0 ? 0.1 / max_rate : t_micro;
    double t = 0.0;

    std::vector<double> k1, k2, k3, k4, tmp, full, half;
    const auto rk4 = [&](const std::vector<double>& y, double step,
                         std::vector<double>& out) {
        apply_transposed(gen, y, k1);
        tmp.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            tmp[i] = y[i] + 0.5 * step * k1[i];
        apply_transposed(gen, tmp, k2);
        for (std::size_t i = 0; i < y.size(); ++i)
            tmp[i] = y[i] + 0.5 * step * k2[i];
        apply_transposed(gen, tmp, k3);
        for (std::size_t i = 0; i < y.size(); ++i)
            tmp[i] = y[i] + step * k3[i];
        apply_transposed(gen, tmp, k4);
        out.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            out[i] = y[i] +
                     step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    constexpr double kLocalTol = 1e-10;
    while (t < t_micro * (1.0 - 1e-15)) {
        const double step = std::min(h, t_micro - t);
        rk4(d.probs, step, full);
        rk4(d.probs, 0.5 * step, half);
        std::vector<double> second;
        rk4(half, 0.5 * step, second);
        double err = 0.0;
        for (std::size_t i = 0; i < full.size(); ++i)
            err = std::max(err, std::abs(full[i] - second[i]));
        err /= 15.0;
        if (err > kLocalTol && step > 1e-12) {
            h = 0.5 * step;
            continue;
        }
        d.probs = std::move(second);
        t += step;
        if (err < 0.03125 * kLocalTol) h = step * 2.0;

        double sum = 0.0, lowest = 0.0;
        for (double p : d.probs) {
            sum += p;
            lowest = std::min(lowest, p);
        }
        if (lowest < -1e-10)
            throw std::runtime_error("master equation produced probability " +
                                     std::to_string(lowest));
        if (std::abs(sum - 1.0) > 1e-12)
            for (double& p : d.probs) p /= sum;
    }
    return d;
}

Distribution stationary(const GeneratorMatrix& gen,
                        const BoundaryParams& params) {
    const AssumptionReport rep = validate(params);
    if (!rep.irreducible)
        throw std::invalid_argument(
            "stationary distribution needs an irreducible chain "
            "(injection[1] and removal[1] both nonzero)");

    const int dim = static_cast<int>(gen.dim);
    // Rows of L^T are the balance equations per state; replace the first with
    // the normalisation row.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(gen.transitions.size() + 2 * dim);
    for (int s = 0; s < dim; ++s) trip.emplace_back(0, s, 1.0);
    for (int s = 1; s < dim; ++s)
        trip.emplace_back(s, s, -gen.exit_rate[s]);
    for (const auto& tr : gen.transitions)
        if (tr.to != 0) trip.emplace_back(static_cast<int>(tr.to),
                                          static_cast<int>(tr.from), tr.rate);

    Eigen::SparseMatrix<double> A(dim, dim);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("stationary solve: factorisation failed");

    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    b[0] = 1.0;
    const Eigen::VectorXd pi = lu.solve(b);

    Distribution d;
    d.n_sites = gen.n_sites;
    d.probs.assign(pi.data(), pi.data() + dim);
    const double sum = d.total();
    for (double& p : d.probs) p /= sum;
    return d;
}

double residual_inf(const Distribution& dist, const GeneratorMatrix& gen) {
    std::vector<double> out;
    apply_transposed(gen, dist.probs, out);
    double r = 0.0;
    for (double v : out) r = std::max(r, std::abs(v));
    return r;
}

}  // namespace ssepwin::oracle
