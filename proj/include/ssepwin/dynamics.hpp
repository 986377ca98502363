#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ssepwin/grid.hpp"
#include "ssepwin/params.hpp"
#include "ssepwin/rng.hpp"

namespace ssepwin {

enum class Side { Left, Right };

struct InitialCondition {
    enum class Kind { ConstantDensity, BernoulliProfile, ExplicitBits };
    Kind kind = Kind::ConstantDensity;
    double density = 0.0;
    GridFunction profile;            // marginal f0, sampled at x/N per site
    std::vector<std::uint8_t> bits;  // sites 1..N-1

    static InitialCondition constant_density(double rho);
    static InitialCondition bernoulli(GridFunction f0);
    static InitialCondition explicit_bits(std::vector<std::uint8_t> occ);
};

// Rates of every possible event for a configuration. Bulk exchanges at bond
// x in 1..N-2 fire at rate 1 exactly when the bond is discrepant; boundary
// channel x in 1..K at each edge fires at N^-theta times the window rate
//   left x:  alpha_x eta(1)...eta(x-1)(1-eta(x)) + gamma_x (1-eta(1))...(1-eta(x-1)) eta(x)
//   right x: mirrored with beta, delta and sites counted from N-1 inward.
// At most one of the two summands is nonzero for a given configuration.
struct RateTable {
    std::vector<double> bulk;   // bond x -> index x-1, value 0 or 1
    std::vector<double> left;   // channel x -> index x-1, includes N^-theta
    std::vector<double> right;
    double total = 0.0;
};

struct Event {
    enum class Kind { BulkExchange, BoundaryFlip, Absorbed };
    Kind kind = Kind::Absorbed;
    int bond = 0;          // BulkExchange: bond x (sites x, x+1)
    Side side = Side::Left;
    int window_pos = 0;    // BoundaryFlip: distance-from-edge index 1..K
    bool created = false;  // BoundaryFlip: particle created (else removed)
    double dt_micro = 0.0;
};

// Occupation configuration on sites 1..N-1 with cached event rates, net bond
// crossings J and boundary creation counters, and its own RNG stream. The
// cached rates are maintained incrementally: an event within distance K of an
// edge refreshes all K channels of that edge (their prefix products depend on
// every site in the window). Single-threaded; ensembles parallelise across
// instances.
class LatticeState {
public:
    // Requires N >= 2K+2 so the two reservoir windows are disjoint.
    LatticeState(int N, BoundaryParams params, const InitialCondition& init,
                 std::uint64_t seed);

    int N() const { return n_; }
    int window() const { return params_.K; }
    const BoundaryParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }
    double t_micro() const { return t_micro_; }

    int occ(int site) const { return occ_[site - 1]; }            // site 1..N-1
    std::span<const std::uint8_t> occupation() const { return occ_; }
    int particle_count() const;

    long long bond_current(int bond) const { return jcur_[bond - 1]; }
    // Net creations minus removals at the window site `pos` sites from the
    // given edge (pos = 1..K).
    long long window_current(Side side, int pos) const;
    int window_site(Side side, int pos) const;  // lattice site of that channel

    double total_rate() const;
    RateTable rates() const;            // cached (fast path), materialised
    RateTable rates_reference() const;  // recomputed from scratch

    // One exact jump of the chain: exponential waiting time at the total rate,
    // event chosen proportionally to its rate, state and counters updated.
    // Returns Kind::Absorbed (and changes nothing) when the total rate is 0.
    Event step();

    // Two-phase form of step() for drivers that must observe the state between
    // jumps: draw the waiting time first, then commit the jump. Draw order and
    // results are identical to step().
    double next_waiting_time();            // throws if the total rate is 0
    Event commit_jump(double dt_micro);    // applies the jump dt after now

    // Move the clock forward with no event (the chain is constant between
    // jumps; used to park the state exactly at a time horizon).
    void advance_clock_to(double t_micro);

    // Throws if exclusion, counters, or the cached rates are inconsistent.
    void check_invariants() const;

private:
    void rebuild_caches();
    void refresh_edge(Side side);
    void set_bond_discrepancy(int bond);
    void apply_exchange(int bond);
    void apply_flip(Side side, int pos);

    int n_ = 0;
    BoundaryParams params_;
    double slowdown_ = 1.0;  // N^-theta
    std::uint64_t seed_ = 0;
    Rng rng_;
    double t_micro_ = 0.0;

    std::vector<std::uint8_t> occ_;
    std::vector<long long> jcur_;                 // bonds 1..N-2
    std::vector<long long> kcur_left_, kcur_right_;

    std::vector<int> disc_list_;  // discrepant bonds (unordered)
    std::vector<int> disc_pos_;   // bond -> position in disc_list_, -1 if absent
    std::vector<double> chan_left_, chan_right_;  // K channels each
    double chan_left_sum_ = 0.0, chan_right_sum_ = 0.0;
};

enum class TimeScale { Diffusive, Subdiffusive };

// Microscopic duration of one unit of macroscopic time: N^2 (diffusive) or
// N^(1+theta) (subdiffusive; the scale on which the total mass moves when
// theta > 1).
double micro_per_macro(int N, double theta, TimeScale scale);

struct RunStatus {
    bool absorbed = false;
    double t_macro_absorbed = 0.0;
    unsigned long long events = 0;
};

using Observer = std::function<void(const LatticeState&, double /*t_macro*/)>;

// Advances the state to macroscopic time t_macro, invoking the observer at
// each requested sample instant (sorted, within [0, t_macro]) with the
// piecewise-constant jump-chain state. If the chain absorbs (possible only
// when irreducibility fails) the remaining samples still fire — the absorbed
// configuration is the state at all later times — and the status reports it.
RunStatus run_until(LatticeState& state, double t_macro, TimeScale scale,
                    std::span<const double> sample_times, const Observer& observe);

// Per-sample log of the standard summaries: mass, flat-test-function current
// pairings, optionally the full occupation row.
struct ObservationRow {
    double t_macro = 0.0;
    double mass = 0.0;
    double j_flat = 0.0;  // N^-2 sum_x J(x)
    double k_flat = 0.0;  // N^-1 sum_window K(x)
    std::vector<std::uint8_t> occ;
};

struct ObservationLog {
    std::vector<std::string> header;  // provenance: params echo, N, seed, scale
    bool with_profile = false;
    std::vector<ObservationRow> rows;

    void write_csv(std::ostream& os) const;
};

Observer logging_observer(ObservationLog& log);

}  // namespace ssepwin
