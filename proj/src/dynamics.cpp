#include "ssepwin/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ssepwin/io.hpp"

namespace ssepwin {

InitialCondition InitialCondition::constant_density(double rho) {
    if (rho < 0.0 || rho > 1.0)
        throw std::invalid_argument("constant density must lie in [0,1]");
    InitialCondition ic;
    ic.kind = Kind::ConstantDensity;
    ic.density = rho;
    return ic;
}

InitialCondition InitialCondition::bernoulli(GridFunction f0) {
    InitialCondition ic;
    ic.kind = Kind::BernoulliProfile;
    ic.profile = std::move(f0);
    return ic;
}

InitialCondition InitialCondition::explicit_bits(std::vector<std::uint8_t> occ) {
    InitialCondition ic;
    ic.kind = Kind::ExplicitBits;
    ic.bits = std::move(occ);
    return ic;
}

LatticeState::LatticeState(int N, BoundaryParams params,
                           const InitialCondition& init, std::uint64_t seed)
    : n_(N), params_(std::move(params)), seed_(seed), rng_(seed) {
    params_.require_valid();
    if (N < 2 * params_.K + 2)
        throw std::invalid_argument(
            "N < 2K+2: overlapping reservoir windows; the model assumes the two "
            "windows are disjoint");
    slowdown_ = std::pow(static_cast<double>(n_), -params_.theta);

    occ_.assign(n_ - 1, 0);
    switch (init.kind) {
        case InitialCondition::Kind::ConstantDensity:
            if (init.density == 0.0) {
                // exact vacuum
            } else if (init.density == 1.0) {
                std::fill(occ_.begin(), occ_.end(), 1);
            } else {
                for (auto& o : occ_) o = rng_.bernoulli(init.density) ? 1 : 0;
            }
            break;
        case InitialCondition::Kind::BernoulliProfile:
            for (int x = 1; x <= n_ - 1; ++x)
                occ_[x - 1] =
                    rng_.bernoulli(init.profile.eval(static_cast<double>(x) / n_))
                        ? 1
                        : 0;
            break;
        case InitialCondition::Kind::ExplicitBits:
            if (static_cast<int>(init.bits.size()) != n_ - 1)
                throw std::invalid_argument("explicit bits must have length N-1");
            for (std::uint8_t b : init.bits)
                if (b > 1) throw std::invalid_argument("occupation bits must be 0/1");
            occ_ = init.bits;
            break;
    }

    jcur_.assign(n_ - 2, 0);
    kcur_left_.assign(params_.K, 0);
    kcur_right_.assign(params_.K, 0);
    rebuild_caches();
}

int LatticeState::particle_count() const {
    return std::accumulate(occ_.begin(), occ_.end(), 0);
}

int LatticeState::window_site(Side side, int pos) const {
    if (pos < 1 || pos > params_.K)
        throw std::out_of_range("window position outside 1..K");
    return side == Side::Left ? pos : n_ - pos;
}

long long LatticeState::window_current(Side side, int pos) const {
    if (pos < 1 || pos > params_.K)
        throw std::out_of_range("window position outside 1..K");
    return side == Side::Left ? kcur_left_[pos - 1] : kcur_right_[pos - 1];
}

void LatticeState::set_bond_discrepancy(int bond) {
    if (bond < 1 || bond > n_ - 2) return;
    const bool want = occ_[bond - 1] != occ_[bond];
    const int pos = disc_pos_[bond - 1];
    if (want && pos < 0) {
        disc_pos_[bond - 1] = static_cast<int>(disc_list_.size());
        disc_list_.push_back(bond);
    } else if (!want && pos >= 0) {
        const int last = disc_list_.back();
        disc_list_[pos] = last;
        disc_pos_[last - 1] = pos;
        disc_list_.pop_back();
        disc_pos_[bond - 1] = -1;
    }
}

void LatticeState::refresh_edge(Side side) {
    const int K = params_.K;
    auto& chan = side == Side::Left ? chan_left_ : chan_right_;
    double sum = 0.0;
    // Prefix products over the window: occupied run from the edge inward for
    // the injection term, vacant run for the removal term.
    double occ_run = 1.0, vac_run = 1.0;
    for (int x = 1; x <= K; ++x) {
        const int site = window_site(side, x);
        const double eta = occ_[site - 1];
        const double inject_rate =
            side == Side::Left ? params_.alpha[x - 1] : params_.beta[x - 1];
        const double remove_rate =
            side == Side::Left ? params_.gamma[x - 1] : params_.delta[x - 1];
        const double c =
            inject_rate * occ_run * (1.0 - eta) + remove_rate * vac_run * eta;
        chan[x - 1] = slowdown_ * c;
        sum += chan[x - 1];
        occ_run *= eta;
        vac_run *= 1.0 - eta;
    }
    (side == Side::Left ? chan_left_sum_ : chan_right_sum_) = sum;
}

void LatticeState::rebuild_caches() {
    disc_list_.clear();
    disc_pos_.assign(n_ - 2, -1);
    for (int bond = 1; bond <= n_ - 2; ++bond) set_bond_discrepancy(bond);
    chan_left_.assign(params_.K, 0.0);
    chan_right_.assign(params_.K, 0.0);
    refresh_edge(Side::Left);
    refresh_edge(Side::Right);
}

double LatticeState::total_rate() const {
    return static_cast<double>(disc_list_.size()) + chan_left_sum_ +
           chan_right_sum_;
}

RateTable LatticeState::rates() const {
    RateTable rt;
    rt.bulk.assign(n_ - 2, 0.0);
    for (int bond : disc_list_) rt.bulk[bond - 1] = 1.0;
    rt.left = chan_left_;
    rt.right = chan_right_;
    rt.total = total_rate();
    return rt;
}

RateTable LatticeState::rates_reference() const {
    RateTable rt;
    rt.bulk.assign(n_ - 2, 0.0);
    for (int bond = 1; bond <= n_ - 2; ++bond)
        rt.bulk[bond - 1] = occ_[bond - 1] != occ_[bond] ? 1.0 : 0.0;

    const int K = params_.K;
    rt.left.assign(K, 0.0);
    rt.right.assign(K, 0.0);
    for (int x = 1; x <= K; ++x) {
        // Literal products, no running state: the slow reference path.
        double occ_run_l = 1.0, vac_run_l = 1.0;
        for (int y = 1; y < x; ++y) {
            occ_run_l *= occ_[y - 1];
            vac_run_l *= 1.0 - occ_[y - 1];
        }
        const double eta_l = occ_[x - 1];
        rt.left[x - 1] =
            slowdown_ * (params_.alpha[x - 1] * occ_run_l * (1.0 - eta_l) +
                         params_.gamma[x - 1] * vac_run_l * eta_l);

        double occ_run_r = 1.0, vac_run_r = 1.0;
        for (int y = 1; y < x; ++y) {
            const int site = n_ - y;
            occ_run_r *= occ_[site - 1];
            vac_run_r *= 1.0 - occ_[site - 1];
        }
        const double eta_r = occ_[n_ - x - 1];
        rt.right[x - 1] =
            slowdown_ * (params_.beta[x - 1] * occ_run_r * (1.0 - eta_r) +
                         params_.delta[x - 1] * vac_run_r * eta_r);
    }
    rt.total = std::accumulate(rt.bulk.begin(), rt.bulk.end(), 0.0) +
               std::accumulate(rt.left.begin(), rt.left.end(), 0.0) +
               std::accumulate(rt.right.begin(), rt.right.end(), 0.0);
    return rt;
}

void LatticeState::apply_exchange(int bond) {
    const bool moved_right = occ_[bond - 1] == 1;
    std::swap(occ_[bond - 1], occ_[bond]);
    jcur_[bond - 1] += moved_right ? 1 : -1;
    set_bond_discrepancy(bond - 1);
    set_bond_discrepancy(bond);
    set_bond_discrepancy(bond + 1);
    if (bond <= params_.K) refresh_edge(Side::Left);
    if (bond + 1 >= n_ - params_.K) refresh_edge(Side::Right);
}

void LatticeState::apply_flip(Side side, int pos) {
    const int site = window_site(side, pos);
    const bool created = occ_[site - 1] == 0;
    occ_[site - 1] ^= 1;
    auto& k = side == Side::Left ? kcur_left_ : kcur_right_;
    k[pos - 1] += created ? 1 : -1;
    set_bond_discrepancy(site - 1);
    set_bond_discrepancy(site);
    refresh_edge(side);
}

double LatticeState::next_waiting_time() {
    const double total = total_rate();
    if (!(total > 0.0))
        throw std::logic_error("next_waiting_time called on an absorbed chain");
    return rng_.exponential(total);
}

void LatticeState::advance_clock_to(double t_micro) {
    if (t_micro < t_micro_)
        throw std::invalid_argument("clock can only move forward");
    t_micro_ = t_micro;
}

Event LatticeState::step() {
    if (!(total_rate() > 0.0)) {
        Event ev;
        ev.kind = Event::Kind::Absorbed;
        return ev;
    }
    return commit_jump(next_waiting_time());
}

Event LatticeState::commit_jump(double dt_micro) {
    const double total = total_rate();
    Event ev;
    ev.dt_micro = dt_micro;

    // Single draw over [0, total): the bulk block first (all active bonds have
    // rate exactly 1, so the integer part is a uniform pick), then a linear
    // scan over the 2K boundary channels.
    double r = rng_.uniform() * total;
    const double nbulk = static_cast<double>(disc_list_.size());
    if (r < nbulk) {
        const auto idx = std::min(static_cast<std::size_t>(r),
                                  disc_list_.size() - 1);
        ev.kind = Event::Kind::BulkExchange;
        ev.bond = disc_list_[idx];
        t_micro_ += ev.dt_micro;
        apply_exchange(ev.bond);
        return ev;
    }
    r -= nbulk;
    Side side = Side::Left;
    int pos = 0;
    for (int pass = 0; pass < 2 && pos == 0; ++pass) {
        const auto& chan = pass == 0 ? chan_left_ : chan_right_;
        for (int x = 1; x <= params_.K; ++x) {
            if (r < chan[x - 1]) {
                side = pass == 0 ? Side::Left : Side::Right;
                pos = x;
                break;
            }
            r -= chan[x - 1];
        }
    }
    if (pos == 0) {
        // Float residue walked past the end; take the last active channel.
        for (int pass = 1; pass >= 0 && pos == 0; --pass) {
            const auto& chan = pass == 0 ? chan_left_ : chan_right_;
            for (int x = params_.K; x >= 1; --x) {
                if (chan[x - 1] > 0.0) {
                    side = pass == 0 ? Side::Left : Side::Right;
                    pos = x;
                    break;
                }
            }
        }
    }
    ev.kind = Event::Kind::BoundaryFlip;
    ev.side = side;
    ev.window_pos = pos;
    ev.created = occ_[window_site(side, pos) - 1] == 0;
    t_micro_ += ev.dt_micro;
    apply_flip(side, pos);
    return ev;
}

void LatticeState::check_invariants() const {
    for (std::uint8_t o : occ_)
        if (o > 1) throw std::logic_error("exclusion violated");
    const RateTable fast = rates();
    const RateTable ref = rates_reference();
    for (int i = 0; i < n_ - 2; ++i)
        if (fast.bulk[i] != ref.bulk[i])
            throw std::logic_error("bulk rate cache out of sync");
    for (int x = 0; x < params_.K; ++x) {
        const double dl = std::abs(fast.left[x] - ref.left[x]);
        const double dr = std::abs(fast.right[x] - ref.right[x]);
        const double sl = std::max(std::abs(ref.left[x]), 1e-300);
        const double sr = std::max(std::abs(ref.right[x]), 1e-300);
        if ((fast.left[x] == 0.0) != (ref.left[x] == 0.0) || dl / sl > 1e-12)
            throw std::logic_error("left channel cache out of sync");
        if ((fast.right[x] == 0.0) != (ref.right[x] == 0.0) || dr / sr > 1e-12)
            throw std::logic_error("right channel cache out of sync");
    }
    if (std::abs(fast.total - ref.total) >
        1e-9 * std::max(1.0, std::abs(ref.total)))
        throw std::logic_error("total rate drifted");
}

double micro_per_macro(int N, double theta, TimeScale scale) {
    const double n = static_cast<double>(N);
    return scale == TimeScale::Diffusive ? n * n : std::pow(n, 1.0 + theta);
}

RunStatus run_until(LatticeState& state, double t_macro, TimeScale scale,
                    std::span<const double> sample_times,
                    const Observer& observe) {
    if (t_macro < 0.0) throw std::invalid_argument("t_macro must be >= 0");
    const double factor =
        micro_per_macro(state.N(), state.params().theta, scale);
    const double micro_end = state.t_micro() + t_macro * factor;
    const double micro_origin = state.t_micro();

    std::size_t si = 0;
    RunStatus status;
    // Samples strictly before the next jump see the current (pre-jump) state;
    // a sample exactly at a jump time sees the post-jump state (the chain is
    // right-continuous).
    const auto fire_samples_before = [&](double micro_t) {
        while (si < sample_times.size() &&
               micro_origin + sample_times[si] * factor < micro_t) {
            if (observe) observe(state, sample_times[si]);
            ++si;
        }
    };

    while (state.t_micro() < micro_end) {
        if (!(state.total_rate() > 0.0)) {
            status.absorbed = true;
            status.t_macro_absorbed = (state.t_micro() - micro_origin) / factor;
            break;
        }
        const double dt = state.next_waiting_time();
        const double t_next = state.t_micro() + dt;
        if (t_next > micro_end) {
            // Next jump lands past the horizon: the state is constant up to
            // micro_end. Dropping the drawn waiting time is exact (the
            // exponential clock is memoryless).
            state.advance_clock_to(micro_end);
            break;
        }
        fire_samples_before(t_next);
        state.commit_jump(dt);
        ++status.events;
    }

    // Remaining samples: the horizon was reached or the chain absorbed; either
    // way the current configuration is the state at every remaining instant.
    while (si < sample_times.size()) {
        if (observe) observe(state, sample_times[si]);
        ++si;
    }
    return status;
}

Observer logging_observer(ObservationLog& log) {
    return [&log](const LatticeState& s, double t_macro) {
        ObservationRow row;
        row.t_macro = t_macro;
        const int N = s.N();
        int count = 0;
        for (int x = 1; x <= N - 1; ++x) count += s.occ(x);
        row.mass = static_cast<double>(count) / (N - 1);
        long long j = 0;
        for (int b = 1; b <= N - 2; ++b) j += s.bond_current(b);
        row.j_flat = static_cast<double>(j) / (static_cast<double>(N) * N);
        long long k = 0;
        for (int pos = 1; pos <= s.window(); ++pos)
            k += s.window_current(Side::Left, pos) +
                 s.window_current(Side::Right, pos);
        row.k_flat = static_cast<double>(k) / N;
        if (log.with_profile)
            row.occ.assign(s.occupation().begin(), s.occupation().end());
        log.rows.push_back(std::move(row));
    };
}

void ObservationLog::write_csv(std::ostream& os) const {
    write_header_comments(os, header);
    os << "t_macro,mass,j_flat,k_flat";
    if (with_profile && !rows.empty())
        for (std::size_t x = 1; x <= rows.front().occ.size(); ++x)
            os << ",eta_" << x;
    os << '\n';
    for (const auto& row : rows) {
        os << format_double(row.t_macro) << ',' << format_double(row.mass) << ','
           << format_double(row.j_flat) << ',' << format_double(row.k_flat);
        if (with_profile)
            for (std::uint8_t o : row.occ) os << ',' << static_cast<int>(o);
        os << '\n';
    }
}

}  // namespace ssepwin
