#pragma once

#include <cstdint>
#include <vector>

#include "ssepwin/params.hpp"

namespace ssepwin::oracle {

// Exact reference computations on the full configuration space, feasible for
// N-1 <= 14 (16384 states). Bit b of a state index is the occupation of site
// b+1.
inline constexpr int kMaxSites = 14;

struct Distribution {
    int n_sites = 0;
    std::vector<double> probs;  // size 2^n_sites

    double total() const;
    std::vector<double> site_marginals() const;
    double mean_mass() const;  // E[(N-1)^-1 sum eta]
};

Distribution point_mass(int n_sites, std::uint32_t config);
Distribution product_bernoulli(int n_sites, const std::vector<double>& p);

// Sparse generator: off-diagonal rate 1 for each discrepant-bond exchange,
// N^-theta c_x for each active boundary flip, diagonal = -row sum.
struct GeneratorMatrix {
    struct Transition {
        std::uint32_t from, to;
        double rate;
    };
    int N = 0;
    int n_sites = 0;
    std::uint32_t dim = 0;
    std::vector<Transition> transitions;
    std::vector<double> exit_rate;  // -diagonal, per state

    double row_sum_error() const;  // max |diag + offdiag row sum|
};

GeneratorMatrix generator_matrix(int N, const BoundaryParams& params);

// Forward equation dpi/dt = pi L, integrated by RK4 with step-doubling error
// control (local error <= 1e-10), renormalising the total mass drift away.
// Aborts if a probability dips below -1e-10.
Distribution evolve(const Distribution& init, const GeneratorMatrix& gen,
                    double t_micro);

// The stationary distribution: pi L = 0, sum pi = 1, by a sparse LU solve with
// one equation replaced by the normalisation row (the generator is rank
// deficient by exactly that much when the chain is irreducible). Requires
// injection[1] != 0 and removal[1] != 0.
Distribution stationary(const GeneratorMatrix& gen, const BoundaryParams& params);

// ||pi L||_inf, the stationarity defect.
double residual_inf(const Distribution& dist, const GeneratorMatrix& gen);

}  // namespace ssepwin::oracle
