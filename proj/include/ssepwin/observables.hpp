#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ssepwin/dynamics.hpp"
#include "ssepwin/grid.hpp"

namespace ssepwin {

enum class Direction { Right, Left };

// Test function sampled on the lattice: g[x-1] = g(x/N) for x = 1..N-1.
std::vector<double> sample_on_lattice(int N,
                                      const std::function<double(double)>& g);

// Empirical pairing (N-1)^-1 sum_x eta(x) g(x/N).
double pair_empirical(const LatticeState& state, std::span<const double> g);

// (N-1)^-1 sum_x eta(x).
double mass(const LatticeState& state);

// Mean occupation over the floor(eps*N) sites strictly to one side of `site`
// (right window starts at site+1, left one at site-1). Throws when the window
// is empty or leaves the lattice.
double box_average(const LatticeState& state, int site, double eps,
                   Direction dir);

// Weighted current sums: conservative = N^-2 sum_bonds J(x) f(x/N),
// nonconservative = N^-1 sum_window K(x) f(x/N).
struct CurrentPairing {
    double conservative = 0.0;
    double nonconservative = 0.0;
};
CurrentPairing current_pairing(const LatticeState& state,
                               std::span<const double> f);

// A configuration captured at a macroscopic sample instant.
struct Snapshot {
    int N = 0;
    double t_macro = 0.0;
    std::vector<std::uint8_t> occ;
};
Snapshot snapshot(const LatticeState& state, double t_macro);

// Streaming cell-average estimator: site x contributes to the cell whose
// interval ((i-1/2)/m, (i+1/2)/m] contains x/N. Cells that contain no site
// (possible only when m approaches N) are filled by neighbour interpolation
// when the mean is taken.
class ProfileAccumulator {
public:
    ProfileAccumulator(int N, int m);
    void add(std::span<const std::uint8_t> occ);
    void merge(const ProfileAccumulator& other);
    GridFunction mean(double t_macro) const;
    long long samples() const { return count_; }
    int sites_in_cell(int i) const { return cell_sites_[i]; }

private:
    int n_ = 0, m_ = 0;
    long long count_ = 0;
    std::vector<int> cell_of_site_;  // site x -> cell index
    std::vector<int> cell_sites_;    // sites per cell
    std::vector<double> sums_;
};

// Ensemble-and-cell mean occupation on the m-cell grid. All snapshots must
// share N and t.
GridFunction density_profile(std::span<const Snapshot> ensemble, int m);

}  // namespace ssepwin
