// Command-line front end: raw simulation runs, PDE solves, stationary-profile
// and mass-flow computations, exact small-N references, operator batteries,
// and the full simulation-vs-theory comparison experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ssepwin/boundary_ops.hpp"
#include "ssepwin/config.hpp"
#include "ssepwin/dynamics.hpp"
#include "ssepwin/experiments.hpp"
#include "ssepwin/io.hpp"
#include "ssepwin/observables.hpp"
#include "ssepwin/oracle.hpp"
#include "ssepwin/pde.hpp"

namespace {

using namespace ssepwin;

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 20240901;
};

ConfigFile load_config(const CommonOpts& opts) {
    if (opts.config_path.empty())
        throw std::runtime_error("a --config file is required");
    return ConfigFile::parse_file(opts.config_path);
}

std::vector<std::string> provenance_lines(const ConfigFile& cfg, int N,
                                          std::uint64_t seed) {
    std::vector<std::string> lines = cfg.raw_lines();
    lines.push_back("N = " + std::to_string(N));
    lines.push_back("run_seed = " + std::to_string(seed));
    lines.push_back(std::string("generator = ") + Rng::generator_name());
    return lines;
}

InitialCondition init_from_string(const std::string& s) {
    if (s == "linear")
        return InitialCondition::bernoulli(
            GridFunction::sample(256, [](double u) { return u; }));
    if (s.rfind("const:", 0) == 0)
        return InitialCondition::constant_density(std::stod(s.substr(6)));
    if (s.rfind("bernoulli:", 0) == 0)
        return InitialCondition::bernoulli(
            GridFunction::constant(8, std::stod(s.substr(10))));
    if (s.rfind("bits:", 0) == 0) {
        std::vector<std::uint8_t> bits;
        for (char c : s.substr(5)) bits.push_back(c == '1' ? 1 : 0);
        return InitialCondition::explicit_bits(bits);
    }
    throw std::runtime_error("unknown initial condition: " + s);
}

void write_or_print(const std::string& path, const std::string& body) {
    if (path.empty()) {
        std::cout << body;
        return;
    }
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream f(path, std::ios::binary);
    f << body;
}

int cmd_simulate(const CommonOpts& opts, int N, double t_end,
                 const std::string& scale_name, const std::string& init_name,
                 int samples, bool with_profile) {
    const ConfigFile cfg = load_config(opts);
    const BoundaryParams params = params_from_config(cfg);
    const TimeScale scale = scale_name == "subdiffusive"
                                ? TimeScale::Subdiffusive
                                : TimeScale::Diffusive;

    LatticeState state(N, params, init_from_string(init_name), opts.seed);
    ObservationLog log;
    log.with_profile = with_profile;
    log.header = provenance_lines(cfg, N, opts.seed);
    log.header.push_back("scale = " + scale_name);

    std::vector<double> grid(samples + 1);
    for (int i = 0; i <= samples; ++i) grid[i] = t_end * i / samples;
    const RunStatus status =
        run_until(state, t_end, scale, grid, logging_observer(log));

    std::ostringstream body;
    log.write_csv(body);
    write_or_print(opts.out_path, body.str());
    if (status.absorbed)
        std::cerr << "note: chain absorbed at t = " << status.t_macro_absorbed
                  << " (irreducibility fails for these rates)\n";
    return 0;
}

int cmd_pde(const CommonOpts& opts, double t_end, int m, double dt,
            const std::string& f0_name, const std::string& method,
            int store_every) {
    const ConfigFile cfg = load_config(opts);
    pde::Problem problem;
    problem.params = params_from_config(cfg);
    problem.bc = pde::bc_for_theta(problem.params.theta);
    if (f0_name == "linear")
        problem.f0 = GridFunction::sample(m, [](double u) { return u; });
    else if (f0_name.rfind("const:", 0) == 0)
        problem.f0 = GridFunction::constant(m, std::stod(f0_name.substr(6)));
    else
        throw std::runtime_error("unknown f0: " + f0_name);

    const pde::Solution sol = method == "mild"
                                  ? pde::mild_solve(problem, t_end, m, dt,
                                                    store_every)
                                  : pde::solve(problem, t_end, m, dt,
                                               store_every);

    std::ostringstream body;
    write_header_comments(body, provenance_lines(cfg, 0, opts.seed));
    body << "# method = " << method << ", m = " << m
         << ", dt = " << format_double(sol.dt) << '\n';
    body << "t,u,value\n";
    for (const auto& frame : sol.frames)
        for (int i = 0; i <= frame.m; ++i)
            body << format_double(frame.t) << ',' << format_double(frame.u(i))
                 << ',' << format_double(frame.values[i]) << '\n';
    write_or_print(opts.out_path, body.str());
    return 0;
}

int cmd_stationary(const CommonOpts& opts) {
    const ConfigFile cfg = load_config(opts);
    const BoundaryParams params = params_from_config(cfg);
    const StationaryProfile prof = stationary_profile(params);
    std::ostringstream body;
    write_header_comments(body, provenance_lines(cfg, 0, opts.seed));
    body << "rho0,rho1\n"
         << format_double(prof.rho0) << ',' << format_double(prof.rho1) << '\n';
    write_or_print(opts.out_path, body.str());
    return 0;
}

int cmd_mass(const CommonOpts& opts, double m0, double t_end, double dt) {
    const ConfigFile cfg = load_config(opts);
    const BoundaryParams params = params_from_config(cfg);
    const AggregateRates agg = aggregates(params);
    const double m_star = mass_fixed_point(agg);
    const MassTrajectory traj = mass_ode_rk4(agg, m0, t_end, dt);

    std::ostringstream body;
    write_header_comments(body, provenance_lines(cfg, 0, opts.seed));
    body << "# m_star = " << format_double(m_star) << '\n';
    body << (params.K == 2 ? "t,m_rk4,m_closed\n" : "t,m_rk4\n");
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        body << format_double(traj.t[i]) << ',' << format_double(traj.m[i]);
        if (params.K == 2)
            body << ',' << format_double(mass_closed_form(agg, m0, traj.t[i]));
        body << '\n';
    }
    write_or_print(opts.out_path, body.str());
    return 0;
}

int cmd_oracle(const CommonOpts& opts, int N, double t_micro) {
    const ConfigFile cfg = load_config(opts);
    const BoundaryParams params = params_from_config(cfg);
    const auto gen = oracle::generator_matrix(N, params);
    const auto pi = oracle::stationary(gen, params);

    std::ostringstream body;
    write_header_comments(body, provenance_lines(cfg, N, opts.seed));
    body << "# stationary_residual_inf = "
         << format_double(oracle::residual_inf(pi, gen)) << '\n';
    body << "site,stationary_marginal";
    const bool with_evolved = t_micro > 0.0;
    std::vector<double> evolved;
    if (with_evolved) {
        // Evolve the alternating start to t_micro for reference marginals.
        std::uint32_t config = 0;
        for (int x = 1; x <= N - 1; x += 2) config |= 1u << (x - 1);
        const auto d =
            oracle::evolve(oracle::point_mass(N - 1, config), gen, t_micro);
        evolved = d.site_marginals();
        body << ",evolved_marginal_t" << format_double(t_micro);
    }
    body << '\n';
    const auto marg = pi.site_marginals();
    for (int x = 1; x <= N - 1; ++x) {
        body << x << ',' << format_double(marg[x - 1]);
        if (with_evolved) body << ',' << format_double(evolved[x - 1]);
        body << '\n';
    }
    write_or_print(opts.out_path, body.str());
    return 0;
}

int cmd_check_operators(const CommonOpts& opts) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::OperatorChecks;
    spec.params = BoundaryParams{1, {1}, {1}, {1}, {1}, 1.0};
    spec.seed_base = opts.seed;
    if (!opts.config_path.empty()) {
        const ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
        spec.tols.apply_overrides(cfg);
        spec.provenance = cfg.raw_lines();
    }
    const ComparisonReport rep = run_operator_checks(spec);
    std::ostringstream body;
    rep.write_csv(body);
    write_or_print(opts.out_path, body.str());
    return rep.all_pass() ? 0 : 1;
}

int cmd_compare(const CommonOpts& opts) {
    const ConfigFile cfg = load_config(opts);
    ExperimentSpec spec = ExperimentSpec::from_config(cfg);
    if (!opts.out_path.empty()) spec.out_dir = opts.out_path;
    if (cfg.has("seed") == false) spec.seed_base = opts.seed;
    const ComparisonReport rep = run_experiment(spec);
    std::ostringstream body;
    rep.write_csv(body);
    std::cout << body.str();
    for (const auto& m : rep.metrics)
        std::cerr << (m.pass ? "[pass] " : "[FAIL] ") << m.name << " = "
                  << format_double(m.value) << " (tol "
                  << format_double(m.tolerance) << ")\n";
    return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-driven exclusion simulator and verification suite"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.add_option("--config", opts.config_path, "key/value parameter file")
        ->envname("SSEPWIN_CONFIG");
    app.add_option("--out", opts.out_path, "output file or directory");
    app.add_option("--seed", opts.seed, "base RNG seed");

    int N = 64, samples = 20, m = 128, store_every = 1;
    double t_end = 1.0, dt = -1.0, m0 = 0.5, t_micro = 0.0;
    bool with_profile = false;
    std::string scale = "diffusive", init = "const:0.5", f0 = "linear",
                method = "cn";

    auto* sim = app.add_subcommand("simulate", "run one trajectory, log CSV");
    sim->add_option("--N", N, "lattice scale");
    sim->add_option("--t-end", t_end, "macroscopic end time");
    sim->add_option("--scale", scale, "diffusive|subdiffusive");
    sim->add_option("--init", init, "const:<rho>|linear|bits:<01...>");
    sim->add_option("--samples", samples, "sample grid size");
    sim->add_flag("--profile", with_profile, "log full occupation rows");

    auto* pde_cmd = app.add_subcommand("pde", "solve the macroscopic equation");
    pde_cmd->add_option("--t-end", t_end);
    pde_cmd->add_option("--m", m, "grid cells");
    pde_cmd->add_option("--dt", dt, "time step (<=0 auto)");
    pde_cmd->add_option("--f0", f0, "linear|const:<v>");
    pde_cmd->add_option("--method", method, "cn|mild");
    pde_cmd->add_option("--store-every", store_every);

    auto* stat = app.add_subcommand("stationary", "stationary boundary values");

    auto* mass_cmd = app.add_subcommand("mass", "mass flow on the slow clock");
    mass_cmd->add_option("--m0", m0);
    mass_cmd->add_option("--t-end", t_end);
    mass_cmd->add_option("--dt", dt);

    auto* oracle_cmd =
        app.add_subcommand("oracle", "exact small-N reference solution");
    oracle_cmd->add_option("--N", N);
    oracle_cmd->add_option("--t-micro", t_micro,
                           "also evolve the alternating start to this time");

    auto* check = app.add_subcommand("check-operators", "operator batteries");

    auto* compare = app.add_subcommand(
        "compare", "simulation vs theory experiment from config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(opts, N, t_end, scale, init, samples,
                                with_profile);
        if (pde_cmd->parsed())
            return cmd_pde(opts, t_end, m, dt, f0, method, store_every);
        if (stat->parsed()) return cmd_stationary(opts);
        if (mass_cmd->parsed())
            return cmd_mass(opts, m0, t_end, dt <= 0 ? 1e-3 : dt);
        if (oracle_cmd->parsed()) return cmd_oracle(opts, N, t_micro);
        if (check->parsed()) return cmd_check_operators(opts);
        if (compare->parsed()) return cmd_compare(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
