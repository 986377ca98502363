#pragma once

#include <string>
#include <vector>

namespace ssepwin {

// Boundary reservoir parameters. Each edge of the lattice carries a window of
// K sites; alpha/gamma are the left-edge injection/removal rate sequences and
// beta/delta the right-edge ones, the latter indexed by distance from the
// right edge (index 1 = site N-1). theta >= 1 is the slowdown exponent: the
// whole boundary dynamics runs at N^-theta relative to the bulk.
struct BoundaryParams {
    int K = 1;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> delta;
    double theta = 1.0;

    // Structural problems (wrong lengths, negative entries, theta < 1).
    // Empty means well-formed.
    std::vector<std::string> structural_issues() const;
    // Throws std::invalid_argument listing all issues.
    void require_valid() const;
};

// Aggregate window rates: injection[x] = alpha[x] + beta[x],
// removal[x] = gamma[x] + delta[x].
struct AggregateRates {
    std::vector<double> injection;
    std::vector<double> removal;
};

// Which of the standing model assumptions hold for a parameter set. Checked
// with exact comparisons: the assumptions are structural properties of
// user-chosen rates, and a tolerance would silently change the model class.
struct AssumptionReport {
    // alpha, gamma, beta, delta each non-increasing.
    bool rates_nonincreasing = false;
    // injection[1] != 0 and removal[1] != 0; makes the chain irreducible.
    bool irreducible = false;
    // irreducible and (delta1<=alpha1 and beta1<=gamma1) or the reverse
    // ordering on both edges; gives a unique stationary profile.
    bool boundary_ordered = false;
    // irreducible and both aggregate sequences non-increasing; gives
    // convergence of the mass on the slow time scale.
    bool aggregates_nonincreasing = false;

    std::vector<std::string> violations;
};

AssumptionReport validate(const BoundaryParams& params);
AggregateRates aggregates(const BoundaryParams& params);

}  // namespace ssepwin
