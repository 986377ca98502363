#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ssepwin/dynamics.hpp"
#include "ssepwin/observables.hpp"
#include "ssepwin/oracle.hpp"

using namespace ssepwin;

namespace {

const BoundaryParams kStd{2, {1.0, 0.5}, {0.8, 0.4}, {1.0, 0.5}, {0.9, 0.45},
                          1.0};

BoundaryParams random_params(Rng& rng, int K, double theta = 1.0) {
    BoundaryParams p;
    p.K = K;
    p.theta = theta;
    p.alpha.resize(K);
    p.beta.resize(K);
    p.gamma.resize(K);
    p.delta.resize(K);
    for (int x = 0; x < K; ++x) {
        p.alpha[x] = 2.0 * rng.uniform();
        p.beta[x] = 2.0 * rng.uniform();
        p.gamma[x] = 2.0 * rng.uniform();
        p.delta[x] = 2.0 * rng.uniform();
    }
    return p;
}

std::vector<std::uint8_t> random_bits(Rng& rng, int n) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng.bits() & 1;
    return bits;
}

}  // namespace

TEST_CASE("vacuum start activates exactly the two first-site injections") {
    const int N = 12;
    LatticeState state(N, kStd, InitialCondition::constant_density(0.0), 1);
    const RateTable rt = state.rates();
    const double slow = std::pow(static_cast<double>(N), -kStd.theta);
    for (double b : rt.bulk) CHECK(b == 0.0);
    CHECK(rt.left[0] == doctest::Approx(slow * kStd.alpha[0]));
    CHECK(rt.left[1] == 0.0);
    CHECK(rt.right[0] == doctest::Approx(slow * kStd.beta[0]));
    CHECK(rt.right[1] == 0.0);
}

TEST_CASE("full start activates exactly the two first-site removals") {
    const int N = 12;
    LatticeState state(N, kStd, InitialCondition::constant_density(1.0), 1);
    const RateTable rt = state.rates();
    const double slow = std::pow(static_cast<double>(N), -kStd.theta);
    for (double b : rt.bulk) CHECK(b == 0.0);
    CHECK(rt.left[0] == doctest::Approx(slow * kStd.gamma[0]));
    CHECK(rt.left[1] == 0.0);
    CHECK(rt.right[0] == doctest::Approx(slow * kStd.delta[0]));
    CHECK(rt.right[1] == 0.0);
}

TEST_CASE("overlapping windows are rejected") {
    CHECK_THROWS_AS(
        LatticeState(5, kStd, InitialCondition::constant_density(0.0), 1),
        std::invalid_argument);
    CHECK_NOTHROW(
        LatticeState(6, kStd, InitialCondition::constant_density(0.0), 1));
}

TEST_CASE("Bernoulli profile sampling has binomial statistics") {
    const int N = 100;
    const int seeds = 10000;
    const GridFunction half = GridFunction::constant(4, 0.5);
    long long total = 0;
    for (int s = 0; s < seeds; ++s) {
        LatticeState state(N, kStd, InitialCondition::bernoulli(half),
                           stream_seed(999, s));
        total += state.particle_count();
    }
    const double n_draws = static_cast<double>(seeds) * (N - 1);
    const double mean = static_cast<double>(total) / n_draws;
    const double sigma = std::sqrt(0.25 / n_draws);
    CHECK(std::abs(mean - 0.5) <= 3.0 * sigma);
}

TEST_CASE("rates after a single leftmost particle") {
    // Occupation (1, 0, 0, ...): channel 1 carries the removal term, channel 2
    // the injection term behind the occupied first site.
    const int N = 10;
    std::vector<std::uint8_t> bits(N - 1, 0);
    bits[0] = 1;
    LatticeState state(N, kStd, InitialCondition::explicit_bits(bits), 1);
    const RateTable rt = state.rates();
    const double slow = std::pow(static_cast<double>(N), -kStd.theta);
    CHECK(rt.left[0] == doctest::Approx(slow * kStd.gamma[0]));
    CHECK(rt.left[1] == doctest::Approx(slow * kStd.alpha[1]));
    CHECK(rt.bulk[0] == 1.0);
    for (int b = 2; b <= N - 2; ++b) CHECK(rt.bulk[b - 1] == 0.0);
}

TEST_CASE("alternating configuration makes every bond active") {
    const int N = 11;
    std::vector<std::uint8_t> bits(N - 1);
    for (int x = 1; x <= N - 1; ++x) bits[x - 1] = x % 2;
    LatticeState state(N, kStd, InitialCondition::explicit_bits(bits), 1);
    const RateTable rt = state.rates();
    for (double b : rt.bulk) CHECK(b == 1.0);
}

TEST_CASE("cached rates equal the from-scratch evaluation on random states") {
    Rng rng(505);
    for (int trial = 0; trial < 50; ++trial) {
        const int K = 1 + static_cast<int>(rng.bits() % 2);
        const BoundaryParams p = random_params(rng, K);
        const int N = 8 + static_cast<int>(rng.bits() % 8);
        if (N < 2 * K + 2) continue;
        LatticeState state(N, p, InitialCondition::explicit_bits(
                                     random_bits(rng, N - 1)),
                           rng.bits());
        const RateTable fast = state.rates();
        const RateTable ref = state.rates_reference();
        for (std::size_t i = 0; i < fast.bulk.size(); ++i)
            CHECK(fast.bulk[i] == ref.bulk[i]);
        for (int x = 0; x < K; ++x) {
            CHECK((fast.left[x] == 0.0) == (ref.left[x] == 0.0));
            CHECK(fast.left[x] == doctest::Approx(ref.left[x]).epsilon(1e-12));
            CHECK((fast.right[x] == 0.0) == (ref.right[x] == 0.0));
            CHECK(fast.right[x] == doctest::Approx(ref.right[x]).epsilon(1e-12));
        }
    }
}

TEST_CASE("two-channel race from the vacuum") {
    // Only the two first-site injections are active; the first event is a
    // creation at site 1 with probability alpha1 / (alpha1 + beta1).
    const int N = 8;
    const double a1 = 1.0, b1 = 0.25;
    const BoundaryParams p{1, {a1}, {b1}, {0.5}, {0.5}, 1.0};
    const int trials = 100000;
    int left = 0;
    for (int i = 0; i < trials; ++i) {
        LatticeState state(N, p, InitialCondition::constant_density(0.0),
                           stream_seed(31337, i));
        const Event ev = state.step();
        REQUIRE(ev.kind == Event::Kind::BoundaryFlip);
        REQUIRE(ev.created);
        if (ev.side == Side::Left) ++left;
    }
    const double expect = a1 / (a1 + b1);
    const double sigma = std::sqrt(expect * (1 - expect) / trials);
    CHECK(std::abs(static_cast<double>(left) / trials - expect) <=
          4.0 * sigma);
}

TEST_CASE("bond current signs follow the moved particle") {
    // All boundary rates zero: only the stirring dynamics acts.
    const BoundaryParams closed{1, {0}, {0}, {0}, {0}, 1.0};
    std::vector<std::uint8_t> bits{1, 0, 0, 0, 0};
    LatticeState state(6, closed, InitialCondition::explicit_bits(bits), 7);
    const Event ev = state.step();
    REQUIRE(ev.kind == Event::Kind::BulkExchange);
    CHECK(ev.bond == 1);
    CHECK(state.bond_current(1) == 1);
    CHECK(state.occ(1) == 0);
    CHECK(state.occ(2) == 1);
}

TEST_CASE("first-event distribution matches the rate table") {
    Rng rng(99);
    const int N = 12;
    const BoundaryParams p = random_params(rng, 2, 1.0);
    const auto bits = random_bits(rng, N - 1);

    // Channel probabilities from the reference rates.
    LatticeState probe(N, p, InitialCondition::explicit_bits(bits), 0);
    const RateTable rt = probe.rates_reference();
    std::map<std::string, double> expect;
    for (int b = 1; b <= N - 2; ++b)
        if (rt.bulk[b - 1] > 0)
            expect["bulk" + std::to_string(b)] = rt.bulk[b - 1] / rt.total;
    for (int x = 1; x <= 2; ++x) {
        if (rt.left[x - 1] > 0)
            expect["L" + std::to_string(x)] = rt.left[x - 1] / rt.total;
        if (rt.right[x - 1] > 0)
            expect["R" + std::to_string(x)] = rt.right[x - 1] / rt.total;
    }

    const int trials = 40000;
    std::map<std::string, int> counts;
    for (int i = 0; i < trials; ++i) {
        LatticeState state(N, p, InitialCondition::explicit_bits(bits),
                           stream_seed(777, i));
        const Event ev = state.step();
        std::string key;
        if (ev.kind == Event::Kind::BulkExchange)
            key = "bulk" + std::to_string(ev.bond);
        else
            key = (ev.side == Side::Left ? "L" : "R") +
                  std::to_string(ev.window_pos);
        counts[key] += 1;
    }
    for (const auto& [key, prob] : expect) {
        const double freq = static_cast<double>(counts[key]) / trials;
        const double sigma = std::sqrt(prob * (1 - prob) / trials);
        CHECK(std::abs(freq - prob) <= 4.0 * sigma);
    }
    // No event category outside the expected set.
    for (const auto& [key, c] : counts) CHECK(expect.count(key) == 1);
}

TEST_CASE("run_until with zero horizon reports the initial state once") {
    LatticeState state(10, kStd, InitialCondition::constant_density(0.5), 3);
    int calls = 0;
    const std::vector<double> grid{0.0};
    const RunStatus st = run_until(state, 0.0, TimeScale::Diffusive, grid,
                                   [&](const LatticeState&, double t) {
                                       CHECK(t == 0.0);
                                       ++calls;
                                   });
    CHECK(calls == 1);
    CHECK(st.events == 0);
    CHECK_FALSE(st.absorbed);
}

TEST_CASE("diffusive and subdiffusive clocks coincide at theta = 1") {
    CHECK(micro_per_macro(64, 1.0, TimeScale::Diffusive) ==
          micro_per_macro(64, 1.0, TimeScale::Subdiffusive));
    CHECK(micro_per_macro(64, 2.0, TimeScale::Subdiffusive) ==
          doctest::Approx(std::pow(64.0, 3.0)));
}

TEST_CASE("absorbed chain still reports the remaining samples") {
    const BoundaryParams closed{1, {0}, {0}, {0}, {0}, 1.0};
    LatticeState state(6, closed, InitialCondition::constant_density(0.0), 5);
    CHECK(state.total_rate() == 0.0);
    CHECK(state.step().kind == Event::Kind::Absorbed);
    int calls = 0;
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const RunStatus st = run_until(state, 1.0, TimeScale::Diffusive, grid,
                                   [&](const LatticeState&, double) { ++calls; });
    CHECK(st.absorbed);
    CHECK(calls == 3);
}

TEST_CASE("bookkeeping identities hold along random trajectories") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const int K = 1 + static_cast<int>(rng.bits() % 3);
        const int N = std::max(2 * K + 2, 8 + static_cast<int>(rng.bits() % 56));
        const BoundaryParams p = random_params(rng, K);
        const auto bits = random_bits(rng, N - 1);
        LatticeState state(N, p, InitialCondition::explicit_bits(bits),
                           rng.bits());
        const int n0 = state.particle_count();

        for (int ev = 0; ev < 5000; ++ev) {
            if (state.step().kind == Event::Kind::Absorbed) break;
            if (ev % 500 == 0) state.check_invariants();
        }
        state.check_invariants();

        // Particle bookkeeping: the total change equals the net creations.
        long long net_k = 0;
        for (int pos = 1; pos <= K; ++pos)
            net_k += state.window_current(Side::Left, pos) +
                     state.window_current(Side::Right, pos);
        CHECK(state.particle_count() - n0 == net_k);

        // Discrete continuity: per site, the change is the inflow minus the
        // outflow plus the window source.
        for (int x = 1; x <= N - 1; ++x) {
            const long long in = x >= 2 ? state.bond_current(x - 1) : 0;
            const long long out = x <= N - 2 ? state.bond_current(x) : 0;
            long long source = 0;
            if (x <= K) source = state.window_current(Side::Left, x);
            if (x >= N - K) source = state.window_current(Side::Right, N - x);
            CHECK(static_cast<long long>(state.occ(x)) - bits[x - 1] ==
                  in - out + source);
        }
    }
}

TEST_CASE("identical seeds give identical trajectories") {
    const auto run = [](std::uint64_t seed) {
        LatticeState state(32, kStd, InitialCondition::constant_density(0.4),
                           seed);
        for (int i = 0; i < 2000; ++i)
            if (state.step().kind == Event::Kind::Absorbed) break;
        return state;
    };
    const LatticeState a = run(42), b = run(42), c = run(43);
    CHECK(a.t_micro() == b.t_micro());
    bool same = true, diff_seed_same = true;
    for (int x = 1; x <= 31; ++x) {
        same = same && a.occ(x) == b.occ(x);
        diff_seed_same = diff_seed_same && a.occ(x) == c.occ(x);
    }
    CHECK(same);
    CHECK_FALSE(diff_seed_same);
    for (int bnd = 1; bnd <= 30; ++bnd)
        CHECK(a.bond_current(bnd) == b.bond_current(bnd));
}

TEST_CASE("long-run occupancy matches the exact stationary law") {
    // N = 6, K = 1: time averages along one trajectory against the
    // master-equation stationary marginals.
    const BoundaryParams p{1, {1.0}, {0.6}, {0.8}, {1.2}, 1.0};
    const int N = 6;
    const auto gen = oracle::generator_matrix(N, p);
    const auto pi = oracle::stationary(gen, p);
    const auto exact = pi.site_marginals();

    LatticeState state(N, p, InitialCondition::constant_density(0.5), 914);
    // Burn in, then average occupancy over a long window by sampling densely.
    run_until(state, 200.0, TimeScale::Diffusive, {}, nullptr);
    const int batches = 20, per_batch = 4000;
    const double t_total = 20000.0;
    std::vector<double> grid(batches * per_batch);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = t_total * static_cast<double>(i + 1) / grid.size();
    std::vector<std::vector<double>> batch_mean(
        batches, std::vector<double>(N - 1, 0.0));
    int idx = 0;
    run_until(state, t_total, TimeScale::Diffusive, grid,
              [&](const LatticeState& st, double) {
                  for (int x = 1; x <= N - 1; ++x)
                      batch_mean[idx / per_batch][x - 1] +=
                          static_cast<double>(st.occ(x)) / per_batch;
                  ++idx;
              });
    for (int x = 0; x < N - 1; ++x) {
        double mean = 0.0;
        for (int b = 0; b < batches; ++b) mean += batch_mean[b][x] / batches;
        double var = 0.0;
        for (int b = 0; b < batches; ++b)
            var += (batch_mean[b][x] - mean) * (batch_mean[b][x] - mean);
        var /= (batches - 1);
        const double sem = std::sqrt(var / batches);
        CHECK(std::abs(mean - exact[x]) <= 3.0 * std::max(sem, 1e-4));
    }
}
