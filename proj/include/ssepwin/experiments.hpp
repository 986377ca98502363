#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ssepwin/config.hpp"
#include "ssepwin/dynamics.hpp"
#include "ssepwin/grid.hpp"
#include "ssepwin/params.hpp"

namespace ssepwin {

enum class ExperimentKind {
    Hydrodynamic,
    FicksLaw,
    HydrostaticRobin,
    HydrostaticNeumannMass,
    OracleCertify,
    OperatorChecks,
};

ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(ExperimentKind kind);

// Every pass/fail threshold used by the experiment drivers, in one table.
// Values are desk-scale calibrations, overridable from config as tol.<name>.
struct ToleranceTable {
    std::map<std::string, double> values;

    static ToleranceTable defaults();
    double at(const std::string& name) const;
    void apply_overrides(const ConfigFile& cfg);
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::OperatorChecks;
    BoundaryParams params;
    std::vector<int> N_list;
    int ensemble = 1;
    std::vector<double> t_grid;
    std::uint64_t seed_base = 20240901;
    std::string out_dir;  // empty: no files written

    GridFunction f0;           // initial macroscopic profile
    int profile_cells = 32;
    double box_eps = 0.05;
    int pde_m = 256;
    double pde_dt = -1.0;      // <= 0: auto
    double burn_in = 2.0;      // macro units, long-run experiments
    double t_average = 8.0;    // averaging window at large N
    double t_average_small = 20000.0;  // averaging window for oracle-size N
    std::vector<double> m0_list = {0.1, 0.5, 0.9};
    double mass_t_end = 1.6;
    double mass_dt = 1e-3;
    int threads = 0;  // 0: hardware concurrency

    ToleranceTable tols = ToleranceTable::defaults();
    std::vector<std::string> provenance;

    void require_valid() const;  // N >= 2K+2 each, ensemble >= 1, grid sorted
    static ExperimentSpec from_config(const ConfigFile& cfg);
};

struct MetricRow {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct ComparisonReport {
    std::string kind;
    std::vector<MetricRow> metrics;
    std::vector<std::string> provenance;

    bool all_pass() const;
    void write_csv(std::ostream& os) const;
    std::string manifest_json(const ExperimentSpec& spec) const;
};

ComparisonReport run_hydrodynamic(const ExperimentSpec& spec);
ComparisonReport run_ficks_law(const ExperimentSpec& spec,
                               const std::function<double(double)>& f =
                                   [](double) { return 1.0; });
ComparisonReport run_hydrostatic_robin(const ExperimentSpec& spec);
ComparisonReport run_hydrostatic_neumann_mass(const ExperimentSpec& spec);
ComparisonReport run_oracle_certify(const ExperimentSpec& spec);
ComparisonReport run_operator_checks(const ExperimentSpec& spec);

// Dispatch on spec.kind; writes <kind>_metrics.csv and <kind>_manifest.json
// under spec.out_dir when set.
ComparisonReport run_experiment(const ExperimentSpec& spec);

// Work-stealing loop over trajectory indices; exceptions propagate. Results
// must be stored per index by the body so that reductions are order-stable.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

// Least-squares slope of log(err) against log(N).
double fit_log_slope(const std::vector<int>& N, const std::vector<double>& err);

}  // namespace ssepwin
