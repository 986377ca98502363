#include "ssepwin/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "ssepwin/boundary_ops.hpp"
#include "ssepwin/io.hpp"
#include "ssepwin/observables.hpp"
#include "ssepwin/oracle.hpp"
#include "ssepwin/pde.hpp"
#include "ssepwin/rng.hpp"

namespace ssepwin {

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = a + (b - a) * static_cast<double>(i) / (n - 1);
    return v;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sd_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / (v.size() - 1));
}

std::uint64_t trajectory_seed(std::uint64_t base, int N, int index) {
    return stream_seed(base, (static_cast<std::uint64_t>(N) << 32) |
                                 static_cast<std::uint64_t>(index));
}

MetricRow metric(std::string name, double value, double tol, bool pass,
                 std::string note = "") {
    return MetricRow{std::move(name), value, tol, pass, std::move(note)};
}

MetricRow metric_le(std::string name, double value, double tol,
                    std::string note = "") {
    return metric(std::move(name), value, tol, value <= tol, std::move(note));
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << body;
}

// Integral of f over [0,1], fine trapezoid.
double integral_01(const std::function<double(double)>& f) {
    const int n = 4096;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        s += w * f(static_cast<double>(i) / n);
    }
    return s / n;
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "hydrodynamic") return ExperimentKind::Hydrodynamic;
    if (name == "ficks-law" || name == "ficks_law") return ExperimentKind::FicksLaw;
    if (name == "hydrostatic-robin" || name == "hydrostatic_robin")
        return ExperimentKind::HydrostaticRobin;
    if (name == "hydrostatic-mass" || name == "hydrostatic_mass")
        return ExperimentKind::HydrostaticNeumannMass;
    if (name == "oracle-certify" || name == "oracle_certify")
        return ExperimentKind::OracleCertify;
    if (name == "operator-checks" || name == "operator_checks")
        return ExperimentKind::OperatorChecks;
    throw std::invalid_argument("unknown experiment kind: " + name);
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Hydrodynamic: return "hydrodynamic";
        case ExperimentKind::FicksLaw: return "ficks-law";
        case ExperimentKind::HydrostaticRobin: return "hydrostatic-robin";
        case ExperimentKind::HydrostaticNeumannMass: return "hydrostatic-mass";
        case ExperimentKind::OracleCertify: return "oracle-certify";
        case ExperimentKind::OperatorChecks: return "operator-checks";
    }
    return "unknown";
}

ToleranceTable ToleranceTable::defaults() {
    ToleranceTable t;
    t.values = {
        {"op_identity_abs", 1e-12},
        {"op_symmetry_abs", 0.0},
        {"mass_half_abs", 1e-12},
        {"mass_ratio_abs", 1e-10},
        {"mass_duality_abs", 1e-12},
        {"riccati_gap_abs", 1e-8},
        {"riccati_decay_slack", 1e-9},
        {"oracle_marginal_sigma", 4.0},
        {"oracle_stationary_residual", 1e-11},
        {"pde_residual_factor", 3.5},
        {"pde_mild_gap", 5e-3},
        {"pde_kernel_norm_abs", 1e-10},
        {"hydro_l1", 0.05},
        {"hydro_slope_max", -0.5},
        {"fick_k_sigma", 4.0},
        {"fick_j_rel", 0.10},
        {"hs_oracle_sigma", 4.0},
        {"hs_robin_l1", 0.05},
        {"hs_mass_sup", 0.05},
        {"hs_mass_terminal", 0.05},
        {"hs_pair_sup", 0.10},
    };
    return t;
}

double ToleranceTable::at(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end())
        throw std::invalid_argument("unknown tolerance: " + name);
    return it->second;
}

void ToleranceTable::apply_overrides(const ConfigFile& cfg) {
    for (auto& [key, val] : values) {
        const std::string k = "tol." + key;
        if (cfg.has(k)) val = cfg.get_double(k, val);
    }
}

void ExperimentSpec::require_valid() const {
    params.require_valid();
    if (ensemble < 1) throw std::invalid_argument("ensemble size must be >= 1");
    for (int N : N_list)
        if (N < 2 * params.K + 2)
            throw std::invalid_argument("every N must be >= 2K+2");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()))
        throw std::invalid_argument("t_grid must be sorted");
}

ExperimentSpec ExperimentSpec::from_config(const ConfigFile& cfg) {
    ExperimentSpec spec;
    spec.kind = experiment_kind_from_string(
        cfg.get_string("kind", "operator-checks"));
    spec.params = params_from_config(cfg);
    spec.N_list = cfg.get_int_list("N_list");
    if (spec.N_list.empty()) spec.N_list = {64};
    spec.ensemble = cfg.get_int("ensemble", 100);
    spec.t_grid = cfg.get_list("t_grid");
    if (spec.t_grid.empty()) spec.t_grid = {0.1};
    spec.seed_base = cfg.get_u64("seed", spec.seed_base);
    spec.out_dir = cfg.get_string("out_dir", "");
    spec.profile_cells = cfg.get_int("cells", spec.profile_cells);
    spec.box_eps = cfg.get_double("box_eps", spec.box_eps);
    spec.pde_m = cfg.get_int("pde_m", spec.pde_m);
    spec.pde_dt = cfg.get_double("pde_dt", spec.pde_dt);
    spec.burn_in = cfg.get_double("burn_in", spec.burn_in);
    spec.t_average = cfg.get_double("t_average", spec.t_average);
    spec.t_average_small = cfg.get_double("t_average_small", spec.t_average_small);
    if (cfg.has("m0_list")) spec.m0_list = cfg.get_list("m0_list");
    spec.mass_t_end = cfg.get_double("mass_t_end", spec.mass_t_end);
    spec.mass_dt = cfg.get_double("mass_dt", spec.mass_dt);
    spec.threads = cfg.get_int("threads", spec.threads);

    const std::string f0 = cfg.get_string("f0", "linear");
    if (f0 == "linear") {
        spec.f0 = GridFunction::sample(256, [](double u) { return u; });
    } else if (f0.rfind("const:", 0) == 0) {
        spec.f0 = GridFunction::constant(256, std::stod(f0.substr(6)));
    } else {
        throw std::invalid_argument("unknown f0 spec: " + f0);
    }

    spec.tols.apply_overrides(cfg);
    spec.provenance = cfg.raw_lines();
    spec.require_valid();
    return spec;
}

bool ComparisonReport::all_pass() const {
    for (const auto& m : metrics)
        if (!m.pass) return false;
    return true;
}

void ComparisonReport::write_csv(std::ostream& os) const {
    write_header_comments(os, provenance);
    os << "metric,value,tolerance,pass,note\n";
    for (const auto& m : metrics) {
        os << m.name << ',' << format_double(m.value) << ','
           << format_double(m.tolerance) << ',' << (m.pass ? 1 : 0) << ",\""
           << m.note << "\"\n";
    }
}

std::string ComparisonReport::manifest_json(const ExperimentSpec& spec) const {
    nlohmann::json j;
    j["kind"] = kind;
    j["params"] = params_echo(spec.params);
    j["N_list"] = spec.N_list;
    j["ensemble"] = spec.ensemble;
    j["t_grid"] = spec.t_grid;
    j["seed_base"] = spec.seed_base;
    j["generator"] = Rng::generator_name();
    j["box_eps"] = spec.box_eps;
    j["tolerances"] = spec.tols.values;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& m : metrics) {
        rows.push_back({{"name", m.name},
                        {"value", m.value},
                        {"tolerance", m.tolerance},
                        {"pass", m.pass},
                        {"note", m.note}});
    }
    j["metrics"] = rows;
    j["all_pass"] = all_pass();
    return j.dump(2);
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
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

double fit_log_slope(const std::vector<int>& N, const std::vector<double>& err) {
    if (N.size() != err.size() || N.size() < 2)
        throw std::invalid_argument("need matching lists of >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(N.size());
    for (std::size_t i = 0; i < N.size(); ++i) {
        const double x = std::log(static_cast<double>(N[i]));
        const double y = std::log(std::max(err[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// hydrodynamic
// ---------------------------------------------------------------------------

ComparisonReport run_hydrodynamic(const ExperimentSpec& spec) {
    spec.require_valid();
    ComparisonReport rep;
    rep.kind = "hydrodynamic";
    rep.provenance = spec.provenance;

    pde::Problem problem;
    problem.params = spec.params;
    problem.f0 = spec.f0;
    problem.bc = pde::bc_for_theta(spec.params.theta);
    problem.require_consistent();

    const double t_max = spec.t_grid.back();
    const int pde_steps_cap = 4000;
    pde::Solution pdesol;
    {
        double dt = spec.pde_dt;
        if (dt <= 0.0) dt = std::min(1e-3, 0.5 / (static_cast<double>(spec.pde_m) * spec.pde_m));
        const int steps = static_cast<int>(std::ceil(t_max / dt));
        const int every = std::max(1, steps / pde_steps_cap);
        pdesol = pde::solve(problem, t_max, spec.pde_m, dt, every);
    }

    const int cells = spec.profile_cells;
    const int S = static_cast<int>(spec.t_grid.size());
    std::vector<double> final_l1;
    std::ostringstream profile_csv;

    for (int N : spec.N_list) {
        // Per-trajectory accumulators, merged in index order.
        std::vector<std::vector<ProfileAccumulator>> per_traj(spec.ensemble);
        parallel_for(spec.ensemble, spec.threads, [&](int i) {
            auto& accs = per_traj[i];
            accs.reserve(S);
            for (int s = 0; s < S; ++s) accs.emplace_back(N, cells);
            LatticeState state(N, spec.params,
                               InitialCondition::bernoulli(spec.f0),
                               trajectory_seed(spec.seed_base, N, i));
            int si = 0;
            run_until(state, t_max, TimeScale::Diffusive, spec.t_grid,
                      [&](const LatticeState& st, double) {
                          accs[si++].add(st.occupation());
                      });
        });
        std::vector<ProfileAccumulator> merged;
        merged.reserve(S);
        for (int s = 0; s < S; ++s) merged.emplace_back(N, cells);
        for (int i = 0; i < spec.ensemble; ++i)
            for (int s = 0; s < S; ++s) merged[s].merge(per_traj[i][s]);

        for (int s = 0; s < S; ++s) {
            const double t = spec.t_grid[s];
            const GridFunction emp = merged[s].mean(t);
            GridFunction ref;
            ref.m = cells;
            ref.t = t;
            ref.values.resize(cells + 1);
            const GridFunction& frame = pdesol.at_time(t);
            for (int c = 0; c <= cells; ++c)
                ref.values[c] = frame.eval(static_cast<double>(c) / cells);
            const double l1 = emp.l1_distance(ref);
            if (s == S - 1) {
                final_l1.push_back(l1);
                const bool is_last_N = N == spec.N_list.back();
                rep.metrics.push_back(metric(
                    "hydro_l1_N" + std::to_string(N), l1,
                    is_last_N ? spec.tols.at("hydro_l1") : 1.0,
                    !is_last_N || l1 <= spec.tols.at("hydro_l1"),
                    "L1(empirical, pde) at t = " + format_double(t)));
            }
            profile_csv << "# N = " << N << ", t = " << format_double(t) << '\n';
            for (int c = 0; c <= cells; ++c)
                profile_csv << format_double(emp.u(c)) << ','
                            << format_double(emp.values[c]) << ','
                            << format_double(ref.values[c]) << '\n';
        }
    }

    if (spec.N_list.size() >= 2) {
        rep.metrics.push_back(metric(
            "hydro_l1_overall_decrease", final_l1.back() < final_l1.front() ? 1.0 : 0.0,
            1.0, final_l1.back() < final_l1.front(),
            "error at largest N below error at smallest N"));
        const double slope = fit_log_slope(spec.N_list, final_l1);
        const double cap = spec.tols.at("hydro_slope_max");
        rep.metrics.push_back(metric("hydro_slope", slope, cap, slope <= cap,
                                     "log-log slope of L1 error vs N"));
    }

    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        std::ostringstream head;
        write_header_comments(head, spec.provenance);
        head << "u,empirical,pde\n";
        write_text_file(spec.out_dir + "/hydrodynamic_profiles.csv",
                        head.str() + profile_csv.str());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Fick's law
// ---------------------------------------------------------------------------

ComparisonReport run_ficks_law(const ExperimentSpec& spec,
                               const std::function<double(double)>& f) {
    spec.require_valid();
    ComparisonReport rep;
    rep.kind = "ficks-law";
    rep.provenance = spec.provenance;

    const double t_fin = spec.t_grid.back();
    const bool robin = spec.params.theta == 1.0;

    for (int N : spec.N_list) {
        const std::vector<double> f_lattice = sample_on_lattice(N, f);
        std::vector<double> jvals(spec.ensemble), kvals(spec.ensemble);

        GridFunction f0 = spec.f0;
        double target = 0.0;
        if (robin) {
            // Stationary start: the linear stationary profile, so the
            // conservative current has a known constant gradient.
            const StationaryProfile prof = stationary_profile(spec.params);
            f0 = GridFunction::sample(
                256, [&prof](double u) { return prof(u); });
            target = -t_fin * (prof.rho1 - prof.rho0) * integral_01(f);
        }

        parallel_for(spec.ensemble, spec.threads, [&](int i) {
            LatticeState state(N, spec.params, InitialCondition::bernoulli(f0),
                               trajectory_seed(spec.seed_base, N, i));
            const std::vector<double> sample{t_fin};
            run_until(state, t_fin, TimeScale::Diffusive, sample,
                      [&](const LatticeState& st, double) {
                          const CurrentPairing cp = current_pairing(st, f_lattice);
                          jvals[i] = cp.conservative;
                          kvals[i] = cp.nonconservative;
                      });
        });

        const double jmean = mean_of(jvals);
        const double kmean = mean_of(kvals);
        const double jsem = sd_of(jvals, jmean) / std::sqrt(spec.ensemble);
        const double ksem = sd_of(kvals, kmean) / std::sqrt(spec.ensemble);

        if (robin) {
            const double rel = std::abs(jmean - target) /
                               std::max(std::abs(target), 1e-300);
            rep.metrics.push_back(metric_le(
                "fick_j_rel_N" + std::to_string(N), rel, spec.tols.at("fick_j_rel"),
                "mean " + format_double(jmean) + " vs -t*grad*int(f) " +
                    format_double(target) + ", sem " + format_double(jsem)));
        } else {
            const double band = spec.tols.at("fick_k_sigma") * ksem;
            rep.metrics.push_back(metric(
                "fick_k_mean_N" + std::to_string(N), std::abs(kmean), band,
                std::abs(kmean) <= band,
                "boundary field vs 0, sem " + format_double(ksem) +
                    ", j mean " + format_double(jmean)));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// long-run time averages (hydrostatics)
// ---------------------------------------------------------------------------

namespace {

struct TimeAverage {
    std::vector<double> site_mean;                 // per site 1..N-1
    std::vector<std::vector<double>> batch_means;  // batches x sites
    bool absorbed = false;

    std::vector<double> site_sem() const {
        const int B = static_cast<int>(batch_means.size());
        std::vector<double> sem(site_mean.size(), 0.0);
        for (std::size_t x = 0; x < site_mean.size(); ++x) {
            double m = 0.0;
            for (const auto& b : batch_means) m += b[x];
            m /= B;
            double var = 0.0;
            for (const auto& b : batch_means)
                var += (b[x] - m) * (b[x] - m);
            var /= (B - 1);
            sem[x] = std::sqrt(var / B);
        }
        return sem;
    }
};

// Exact time average of the occupation over [burn, burn + window] (macro
// units), accumulated event by event: each jump touches at most two sites, so
// the integral of eta(x) dt is maintained lazily per site and flushed at
// batch boundaries.
TimeAverage time_averaged_occupancy(LatticeState& state, double burn,
                                    double window, TimeScale scale,
                                    int batches) {
    run_until(state, burn, scale, {}, nullptr);

    const int N = state.N();
    const double factor = micro_per_macro(N, state.params().theta, scale);
    const double t0 = state.t_micro();
    const double batch_micro = window * factor / batches;

    TimeAverage avg;
    avg.batch_means.assign(batches, std::vector<double>(N - 1, 0.0));
    avg.site_mean.assign(N - 1, 0.0);

    std::vector<double> last(N - 1, t0);
    std::vector<double> acc(N - 1, 0.0);
    const auto settle = [&](int site, double now) {
        if (state.occ(site)) acc[site - 1] += now - last[site - 1];
        last[site - 1] = now;
    };

    for (int b = 0; b < batches; ++b) {
        const double batch_end = t0 + (b + 1) * batch_micro;
        for (;;) {
            if (!(state.total_rate() > 0.0)) {
                avg.absorbed = true;
                break;
            }
            const double dt = state.next_waiting_time();
            if (state.t_micro() + dt > batch_end) {
                state.advance_clock_to(batch_end);
                break;
            }
            const Event ev = state.commit_jump(dt);
            const double now = state.t_micro();
            if (ev.kind == Event::Kind::BulkExchange) {
                // The two sites swapped; settle both with their pre-jump
                // values, which are the post-jump values of the partner.
                const int s0 = ev.bond, s1 = ev.bond + 1;
                if (state.occ(s1)) acc[s0 - 1] += now - last[s0 - 1];
                if (state.occ(s0)) acc[s1 - 1] += now - last[s1 - 1];
                last[s0 - 1] = now;
                last[s1 - 1] = now;
            } else {
                const int s = state.window_site(ev.side, ev.window_pos);
                if (!ev.created) acc[s - 1] += now - last[s - 1];
                last[s - 1] = now;
            }
        }
        const double flush_at = avg.absorbed ? t0 + (b + 1) * batch_micro : state.t_micro();
        if (avg.absorbed) state.advance_clock_to(flush_at);
        for (int x = 1; x <= N - 1; ++x) settle(x, flush_at);
        for (int x = 0; x < N - 1; ++x) {
            avg.batch_means[b][x] = acc[x] / batch_micro;
            avg.site_mean[x] += avg.batch_means[b][x] / batches;
            acc[x] = 0.0;
        }
    }
    return avg;
}

}  // namespace

// ---------------------------------------------------------------------------
// hydrostatic, theta = 1
// ---------------------------------------------------------------------------

ComparisonReport run_hydrostatic_robin(const ExperimentSpec& spec) {
    spec.require_valid();
    const AssumptionReport assume = validate(spec.params);
    if (spec.params.theta != 1.0)
        throw std::invalid_argument("hydrostatic-robin requires theta = 1");
    if (!assume.rates_nonincreasing || !assume.boundary_ordered)
        throw std::invalid_argument(
            "hydrostatic-robin requires non-increasing and ordered rates");

    ComparisonReport rep;
    rep.kind = "hydrostatic-robin";
    rep.provenance = spec.provenance;

    const StationaryProfile prof = stationary_profile(spec.params);
    const GridFunction f0 = GridFunction::sample(
        256, [&prof](double u) { return prof(u); });

    std::ostringstream data_csv;

    for (int N : spec.N_list) {
        const bool oracle_size = N - 1 <= oracle::kMaxSites;
        const double window = oracle_size ? spec.t_average_small : spec.t_average;
        LatticeState state(N, spec.params, InitialCondition::bernoulli(f0),
                           trajectory_seed(spec.seed_base, N, 0));
        const TimeAverage avg = time_averaged_occupancy(
            state, spec.burn_in, window, TimeScale::Diffusive, 16);

        if (oracle_size) {
            const auto gen = oracle::generator_matrix(N, spec.params);
            const auto pi = oracle::stationary(gen, spec.params);
            const auto exact = pi.site_marginals();
            const auto sem = avg.site_sem();
            double zmax = 0.0;
            for (int x = 0; x < N - 1; ++x)
                zmax = std::max(zmax, std::abs(avg.site_mean[x] - exact[x]) /
                                          std::max(sem[x], 1e-12));
            rep.metrics.push_back(metric_le(
                "hs_oracle_z_N" + std::to_string(N), zmax,
                spec.tols.at("hs_oracle_sigma"),
                "max |time-avg - exact marginal| in batch-mean sigmas"));
            for (int x = 0; x < N - 1; ++x)
                data_csv << N << ',' << x + 1 << ','
                         << format_double(avg.site_mean[x]) << ','
                         << format_double(exact[x]) << '\n';
        } else {
            // Cell-average the per-site time averages, same cell rule as
            // ProfileAccumulator.
            GridFunction emp;
            emp.m = spec.profile_cells;
            emp.t = spec.burn_in + window;
            emp.values.assign(spec.profile_cells + 1, -1.0);
            {
                std::vector<double> sums(spec.profile_cells + 1, 0.0);
                std::vector<int> counts(spec.profile_cells + 1, 0);
                for (int x = 1; x <= N - 1; ++x) {
                    const double v = static_cast<double>(x) * spec.profile_cells / N;
                    int c = static_cast<int>(std::ceil(v - 0.5));
                    c = std::clamp(c, 0, spec.profile_cells);
                    sums[c] += avg.site_mean[x - 1];
                    counts[c] += 1;
                }
                for (int c = 0; c <= spec.profile_cells; ++c)
                    if (counts[c] > 0) emp.values[c] = sums[c] / counts[c];
                for (int c = 0; c <= spec.profile_cells; ++c) {
                    if (emp.values[c] >= 0.0) continue;
                    int l = c - 1, r = c + 1;
                    while (l >= 0 && emp.values[l] < 0.0) --l;
                    while (r <= spec.profile_cells && emp.values[r] < 0.0) ++r;
                    emp.values[c] = l >= 0 && r <= spec.profile_cells
                                        ? 0.5 * (emp.values[l] + emp.values[r])
                                        : (l >= 0 ? emp.values[l] : emp.values[r]);
                }
            }
            const GridFunction ref = GridFunction::sample(
                spec.profile_cells, [&prof](double u) { return prof(u); },
                emp.t);
            const double l1 = emp.l1_distance(ref);
            rep.metrics.push_back(metric_le(
                "hs_robin_l1_N" + std::to_string(N), l1,
                spec.tols.at("hs_robin_l1"),
                "L1(time-averaged profile, linear stationary profile), rho0 " +
                    format_double(prof.rho0) + " rho1 " +
                    format_double(prof.rho1)));
            for (int c = 0; c <= spec.profile_cells; ++c)
                data_csv << N << ',' << format_double(emp.u(c)) << ','
                         << format_double(emp.values[c]) << ','
                         << format_double(ref.values[c]) << '\n';
        }
    }

    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        std::ostringstream head;
        write_header_comments(head, spec.provenance);
        head << "N,site_or_u,time_average,reference\n";
        write_text_file(spec.out_dir + "/hydrostatic_robin_profiles.csv",
                        head.str() + data_csv.str());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// hydrostatic, theta > 1 (mass on the slow clock)
// ---------------------------------------------------------------------------

namespace {

// Ensemble-mean mass trajectory on the subdiffusive clock.
std::vector<double> mean_mass_trajectory(const ExperimentSpec& spec, int N,
                                         double theta, double m0,
                                         const std::vector<double>& grid,
                                         std::uint64_t salt) {
    BoundaryParams params = spec.params;
    params.theta = theta;
    const int S = static_cast<int>(grid.size());
    std::vector<double> sums(static_cast<std::size_t>(spec.ensemble) * S, 0.0);
    parallel_for(spec.ensemble, spec.threads, [&](int i) {
        LatticeState state(N, params, InitialCondition::constant_density(m0),
                           trajectory_seed(spec.seed_base + salt, N, i));
        int si = 0;
        run_until(state, grid.back(), TimeScale::Subdiffusive, grid,
                  [&](const LatticeState& st, double) {
                      sums[static_cast<std::size_t>(i) * S + si++] =
                          static_cast<double>(st.particle_count()) / (N - 1);
                  });
    });
    std::vector<double> mean(S, 0.0);
    for (int i = 0; i < spec.ensemble; ++i)
        for (int s = 0; s < S; ++s)
            mean[s] += sums[static_cast<std::size_t>(i) * S + s];
    for (double& v : mean) v /= spec.ensemble;
    return mean;
}

}  // namespace

ComparisonReport run_hydrostatic_neumann_mass(const ExperimentSpec& spec) {
    spec.require_valid();
    const AssumptionReport assume = validate(spec.params);
    if (!(spec.params.theta > 1.0))
        throw std::invalid_argument("hydrostatic-mass requires theta > 1");
    if (!assume.aggregates_nonincreasing)
        throw std::invalid_argument(
            "hydrostatic-mass requires non-increasing aggregate rates");

    ComparisonReport rep;
    rep.kind = "hydrostatic-mass";
    rep.provenance = spec.provenance;

    const AggregateRates agg = aggregates(spec.params);
    const double m_star = mass_fixed_point(agg);
    const int N = spec.N_list.back();
    const std::vector<double> grid = linspace(0.0, spec.mass_t_end, 33);

    std::ostringstream data_csv;

    for (double m0 : spec.m0_list) {
        const MassTrajectory ode =
            mass_ode_rk4(agg, m0, spec.mass_t_end, spec.mass_dt);
        const std::vector<double> mean = mean_mass_trajectory(
            spec, N, spec.params.theta, m0,
            grid, static_cast<std::uint64_t>(m0 * 1e6));

        double sup = 0.0, sup_closed = 0.0;
        for (std::size_t s = 0; s < grid.size(); ++s) {
            sup = std::max(sup, std::abs(mean[s] - ode.value_at(grid[s])));
            if (spec.params.K == 2)
                sup_closed = std::max(
                    sup_closed,
                    std::abs(mean[s] - mass_closed_form(agg, m0, grid[s])));
            data_csv << format_double(m0) << ',' << format_double(grid[s]) << ','
                     << format_double(mean[s]) << ','
                     << format_double(ode.value_at(grid[s])) << '\n';
        }
        const std::string tag = format_double(m0);
        rep.metrics.push_back(metric_le("hs_mass_sup_m0_" + tag, sup,
                                        spec.tols.at("hs_mass_sup"),
                                        "sup |ensemble mass - ODE mass|"));
        if (spec.params.K == 2)
            rep.metrics.push_back(metric_le(
                "hs_mass_sup_closed_m0_" + tag, sup_closed,
                spec.tols.at("hs_mass_sup"), "sup vs closed form"));
        rep.metrics.push_back(metric_le(
            "hs_mass_terminal_m0_" + tag, std::abs(mean.back() - m_star),
            spec.tols.at("hs_mass_terminal"),
            "terminal mass vs fixed point " + format_double(m_star)));
    }

    // Two slow exponents share one macroscopic clock: consistency check at
    // reduced size (the slower exponent is expensive in events).
    {
        const int n_pair = std::min(48, N);
        ExperimentSpec small = spec;
        small.ensemble = std::min(24, spec.ensemble);
        const std::vector<double> pair_grid = linspace(0.0, 1.0, 17);
        const double m0 = spec.m0_list.front();
        const auto a = mean_mass_trajectory(small, n_pair, spec.params.theta,
                                            m0, pair_grid, 101);
        const auto b = mean_mass_trajectory(small, n_pair,
                                            spec.params.theta + 0.5, m0,
                                            pair_grid, 202);
        double sup = 0.0;
        for (std::size_t s = 0; s < pair_grid.size(); ++s)
            sup = std::max(sup, std::abs(a[s] - b[s]));
        rep.metrics.push_back(metric_le(
            "hs_mass_theta_pair_sup", sup, spec.tols.at("hs_pair_sup"),
            "same clock, theta vs theta+0.5, N = " + std::to_string(n_pair)));
    }

    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        std::ostringstream head;
        write_header_comments(head, spec.provenance);
        head << "m0,t,mass_mc,mass_ode\n";
        write_text_file(spec.out_dir + "/hydrostatic_mass_trajectories.csv",
                        head.str() + data_csv.str());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// oracle certification
// ---------------------------------------------------------------------------

ComparisonReport run_oracle_certify(const ExperimentSpec& spec) {
    spec.require_valid();
    ComparisonReport rep;
    rep.kind = "oracle-certify";
    rep.provenance = spec.provenance;

    const int N = spec.N_list.front();
    const int n_sites = N - 1;
    const auto gen = oracle::generator_matrix(N, spec.params);

    // Deterministic start: alternating occupation.
    std::vector<std::uint8_t> bits(n_sites);
    std::uint32_t config = 0;
    for (int x = 1; x <= n_sites; ++x) {
        bits[x - 1] = x % 2 ? 1 : 0;
        if (bits[x - 1]) config |= 1u << (x - 1);
    }

    // Micro comparison times.
    std::vector<double> micro_times = spec.t_grid;
    if (micro_times.size() < 2) micro_times = {1.0, 4.0};

    auto dist = oracle::point_mass(n_sites, config);
    std::vector<std::vector<double>> exact;
    double prev = 0.0;
    for (double t : micro_times) {
        dist = oracle::evolve(dist, gen, t - prev);
        exact.push_back(dist.site_marginals());
        prev = t;
    }

    const int S = static_cast<int>(micro_times.size());
    std::vector<double> macro(S);
    const double factor =
        micro_per_macro(N, spec.params.theta, TimeScale::Diffusive);
    for (int s = 0; s < S; ++s) macro[s] = micro_times[s] / factor;

    std::vector<long long> counts(static_cast<std::size_t>(S) * n_sites, 0);
    std::mutex merge_mu;
    const int block = 512;
    const int blocks = (spec.ensemble + block - 1) / block;
    parallel_for(blocks, spec.threads, [&](int bi) {
        std::vector<long long> local(static_cast<std::size_t>(S) * n_sites, 0);
        const int lo = bi * block;
        const int hi = std::min(spec.ensemble, lo + block);
        for (int i = lo; i < hi; ++i) {
            LatticeState state(N, spec.params,
                               InitialCondition::explicit_bits(bits),
                               trajectory_seed(spec.seed_base, N, i));
            int si = 0;
            run_until(state, macro.back(), TimeScale::Diffusive, macro,
                      [&](const LatticeState& st, double) {
                          for (int x = 1; x <= n_sites; ++x)
                              local[static_cast<std::size_t>(si) * n_sites + x - 1] +=
                                  st.occ(x);
                          ++si;
                      });
        }
        std::lock_guard<std::mutex> lock(merge_mu);
        for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += local[k];
    });

    for (int s = 0; s < S; ++s) {
        double zmax = 0.0;
        for (int x = 0; x < n_sites; ++x) {
            const double p = exact[s][x];
            const double mc =
                static_cast<double>(counts[static_cast<std::size_t>(s) * n_sites + x]) /
                spec.ensemble;
            const double sigma =
                std::sqrt(std::max(p * (1.0 - p), 1e-12) / spec.ensemble);
            zmax = std::max(zmax, std::abs(mc - p) / sigma);
        }
        rep.metrics.push_back(metric_le(
            "oracle_marginal_z_t" + format_double(micro_times[s]), zmax,
            spec.tols.at("oracle_marginal_sigma"),
            "max site z-score, " + std::to_string(spec.ensemble) +
                " trajectories"));
    }

    const auto pi = oracle::stationary(gen, spec.params);
    rep.metrics.push_back(metric_le(
        "oracle_stationary_residual", oracle::residual_inf(pi, gen),
        spec.tols.at("oracle_stationary_residual"), "||pi L||_inf"));
    return rep;
}

// ---------------------------------------------------------------------------
// operator checks
// ---------------------------------------------------------------------------

ComparisonReport run_operator_checks(const ExperimentSpec& spec) {
    ComparisonReport rep;
    rep.kind = "operator-checks";
    rep.provenance = spec.provenance;
    Rng rng(stream_seed(spec.seed_base, 0xD0));

    const auto rand_unit = [&](bool allow_endpoints) {
        if (allow_endpoints) {
            const double p = rng.uniform();
            if (p < 0.05) return 0.0;
            if (p < 0.10) return 1.0;
        }
        return rng.uniform();
    };

    // Difference identity, 1e5 random windows.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 100000; ++trial) {
            const int K = 1 + static_cast<int>(rng.bits() % 5);
            std::vector<double> lambda(K), sigma(K);
            for (int x = 0; x < K; ++x) {
                lambda[x] = 3.0 * rng.uniform();
                sigma[x] = 3.0 * rng.uniform();
            }
            const DPair p(lambda, sigma);
            const double y = rand_unit(true), z = rand_unit(true);
            const double lhs = boundary_flux(p, y) - boundary_flux(p, z);
            const double res = std::abs(lhs + (y - z) * flux_slope(p, y, z));
            worst = std::max(worst, res);
        }
        rep.metrics.push_back(metric_le("op_identity_max", worst,
                                        spec.tols.at("op_identity_abs"),
                                        "|D(y)-D(z)+(y-z)V(y,z)| over 1e5 draws"));
    }

    // flux_slope symmetry (exact term-by-term).
    {
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int K = 1 + static_cast<int>(rng.bits() % 5);
            std::vector<double> lambda(K), sigma(K);
            for (int x = 0; x < K; ++x) {
                lambda[x] = 3.0 * rng.uniform();
                sigma[x] = 3.0 * rng.uniform();
            }
            const DPair p(lambda, sigma);
            const double y = rand_unit(true), z = rand_unit(true);
            worst = std::max(worst, std::abs(flux_slope(p, y, z) -
                                             flux_slope(p, z, y)));
        }
        rep.metrics.push_back(metric_le("op_symmetry_max", worst,
                                        spec.tols.at("op_symmetry_abs"),
                                        "V(y,z) - V(z,y), exact"));
    }

    // Balanced aggregates pin the fixed point at 1/2.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int K = 1 + trial % 5;
            std::vector<double> seq(K);
            double prev = 0.2 + 2.8 * rng.uniform();
            for (int x = 0; x < K; ++x) {
                seq[x] = prev;
                prev *= rng.uniform();
            }
            AggregateRates agg{seq, seq};
            worst = std::max(worst, std::abs(mass_fixed_point(agg) - 0.5));
        }
        rep.metrics.push_back(metric_le("mass_half_max", worst,
                                        spec.tols.at("mass_half_abs"),
                                        "|m* - 1/2| with equal aggregates"));
    }

    // Constant-rate fixed point satisfies the K-th order ratio identity.
    {
        double worst = 0.0;
        for (int K = 1; K <= 5; ++K) {
            for (int trial = 0; trial < 20; ++trial) {
                const double vi = 0.2 + 2.8 * rng.uniform();
                const double vo = 0.2 + 2.8 * rng.uniform();
                AggregateRates agg{std::vector<double>(K, vi),
                                   std::vector<double>(K, vo)};
                const double m = mass_fixed_point(agg);
                const double lhs = (1.0 - std::pow(m, K)) /
                                   (1.0 - std::pow(1.0 - m, K));
                worst = std::max(worst, std::abs(lhs - vo / vi));
            }
        }
        rep.metrics.push_back(metric_le("mass_ratio_max", worst,
                                        spec.tols.at("mass_ratio_abs"),
                                        "(1-m*^K)/(1-(1-m*)^K) = out/in"));
    }

    // Swapping injection and removal reflects the fixed point.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int K = 1 + trial % 5;
            std::vector<double> vi(K), vo(K);
            for (int x = 0; x < K; ++x) {
                vi[x] = 0.1 + 2.9 * rng.uniform();
                vo[x] = 0.1 + 2.9 * rng.uniform();
            }
            const double m1 = mass_fixed_point(AggregateRates{vi, vo});
            const double m2 = mass_fixed_point(AggregateRates{vo, vi});
            worst = std::max(worst, std::abs(m1 - (1.0 - m2)));
        }
        rep.metrics.push_back(metric_le("mass_duality_max", worst,
                                        spec.tols.at("mass_duality_abs"),
                                        "m*(swapped) = 1 - m*"));
    }

    // Closed form against RK4, plus the exponential decay envelope.
    {
        double worst_gap = 0.0;
        bool decay_ok = true;
        double worst_decay = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const double i1 = 0.3 + 2.2 * rng.uniform();
            const double o1 = 0.3 + 2.2 * rng.uniform();
            AggregateRates agg{{i1, i1 * rng.uniform()},
                               {o1, o1 * rng.uniform()}};
            const double m0 = rng.uniform();
            const MassTrajectory traj = mass_ode_rk4(agg, m0, 10.0, 1e-3);
            const double m_star = mass_fixed_point(agg);
            const DPair pair(agg.injection, agg.removal);
            double vbar = std::numeric_limits<double>::infinity();
            for (double m : traj.m)
                vbar = std::min(vbar, flux_slope(pair, m, m_star));
            for (std::size_t s = 0; s < traj.t.size(); ++s) {
                const double gap = std::abs(
                    traj.m[s] - mass_closed_form(agg, m0, traj.t[s]));
                worst_gap = std::max(worst_gap, gap);
                const double envelope =
                    std::abs(m0 - m_star) * std::exp(-vbar * traj.t[s]) +
                    spec.tols.at("riccati_decay_slack");
                const double excess = std::abs(traj.m[s] - m_star) - envelope;
                worst_decay = std::max(worst_decay, excess);
                if (excess > 0.0) decay_ok = false;
            }
        }
        rep.metrics.push_back(metric_le("riccati_gap_max", worst_gap,
                                        spec.tols.at("riccati_gap_abs"),
                                        "RK4 vs closed form, t in [0,10]"));
        rep.metrics.push_back(metric(
            "riccati_decay_excess", worst_decay, 0.0, decay_ok,
            "|m_t - m*| <= |m0 - m*| exp(-vbar t) pointwise"));
    }

    return rep;
}

// ---------------------------------------------------------------------------

ComparisonReport run_experiment(const ExperimentSpec& spec) {
    ComparisonReport rep;
    switch (spec.kind) {
        case ExperimentKind::Hydrodynamic: rep = run_hydrodynamic(spec); break;
        case ExperimentKind::FicksLaw: rep = run_ficks_law(spec); break;
        case ExperimentKind::HydrostaticRobin:
            rep = run_hydrostatic_robin(spec);
            break;
        case ExperimentKind::HydrostaticNeumannMass:
            rep = run_hydrostatic_neumann_mass(spec);
            break;
        case ExperimentKind::OracleCertify: rep = run_oracle_certify(spec); break;
        case ExperimentKind::OperatorChecks:
            rep = run_operator_checks(spec);
            break;
    }
    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        std::ostringstream csv;
        rep.write_csv(csv);
        write_text_file(spec.out_dir + "/" + rep.kind + "_metrics.csv",
                        csv.str());
        write_text_file(spec.out_dir + "/" + rep.kind + "_manifest.json",
                        rep.manifest_json(spec));
    }
    return rep;
}

}  // namespace ssepwin
