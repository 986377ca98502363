#include "ssepwin/observables.hpp"

#include <cmath>
#include <stdexcept>

namespace ssepwin {

std::vector<double> sample_on_lattice(int N,
                                      const std::function<double(double)>& g) {
    std::vector<double> out(N - 1);
    for (int x = 1; x <= N - 1; ++x)
        out[x - 1] = g(static_cast<double>(x) / N);
    return out;
}

double pair_empirical(const LatticeState& state, std::span<const double> g) {
    const int N = state.N();
    if (static_cast<int>(g.size()) != N - 1)
        throw std::invalid_argument("test function must be sampled on sites 1..N-1");
    double s = 0.0;
    for (int x = 1; x <= N - 1; ++x)
        if (state.occ(x)) s += g[x - 1];
    return s / (N - 1);
}

double mass(const LatticeState& state) {
    return static_cast<double>(state.particle_count()) / (state.N() - 1);
}

double box_average(const LatticeState& state, int site, double eps,
                   Direction dir) {
    const int N = state.N();
    const int w = static_cast<int>(std::floor(eps * N));
    if (w < 1) throw std::invalid_argument("box window floor(eps*N) must be >= 1");
    int lo, hi;
    if (dir == Direction::Right) {
        lo = site + 1;
        hi = site + w;
    } else {
        lo = site - w;
        hi = site - 1;
    }
    if (lo < 1 || hi > N - 1)
        throw std::out_of_range("box window leaves the lattice");
    int s = 0;
    for (int x = lo; x <= hi; ++x) s += state.occ(x);
    return static_cast<double>(s) / w;
}

CurrentPairing current_pairing(const LatticeState& state,
                               std::span<const double> f) {
    const int N = state.N();
    if (static_cast<int>(f.size()) != N - 1)
        throw std::invalid_argument("test function must be sampled on sites 1..N-1");
    CurrentPairing cp;
    double j = 0.0;
    for (int b = 1; b <= N - 2; ++b)
        j += static_cast<double>(state.bond_current(b)) * f[b - 1];
    cp.conservative = j / (static_cast<double>(N) * N);
    double k = 0.0;
    for (int pos = 1; pos <= state.window(); ++pos) {
        const int ls = state.window_site(Side::Left, pos);
        const int rs = state.window_site(Side::Right, pos);
        k += static_cast<double>(state.window_current(Side::Left, pos)) * f[ls - 1];
        k += static_cast<double>(state.window_current(Side::Right, pos)) * f[rs - 1];
    }
    cp.nonconservative = k / N;
    return cp;
}

Snapshot snapshot(const LatticeState& state, double t_macro) {
    Snapshot s;
    s.N = state.N();
    s.t_macro = t_macro;
    s.occ.assign(state.occupation().begin(), state.occupation().end());
    return s;
}

ProfileAccumulator::ProfileAccumulator(int N, int m) : n_(N), m_(m) {
    if (m < 1 || N < 2) throw std::invalid_argument("bad profile grid");
    cell_of_site_.resize(N - 1);
    cell_sites_.assign(m + 1, 0);
    sums_.assign(m + 1, 0.0);
    for (int x = 1; x <= N - 1; ++x) {
        // x/N in ((i-1/2)/m, (i+1/2)/m]  <=>  i = ceil(x*m/N - 1/2).
        const double v = static_cast<double>(x) * m / N;
        int i = static_cast<int>(std::ceil(v - 0.5));
        if (i < 0) i = 0;
        if (i > m) i = m;
        cell_of_site_[x - 1] = i;
        ++cell_sites_[i];
    }
}

void ProfileAccumulator::add(std::span<const std::uint8_t> occ) {
    if (static_cast<int>(occ.size()) != n_ - 1)
        throw std::invalid_argument("occupation size mismatch");
    for (int x = 1; x <= n_ - 1; ++x)
        if (occ[x - 1]) sums_[cell_of_site_[x - 1]] += 1.0;
    ++count_;
}

void ProfileAccumulator::merge(const ProfileAccumulator& other) {
    if (other.n_ != n_ || other.m_ != m_)
        throw std::invalid_argument("accumulator shape mismatch");
    for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
    count_ += other.count_;
}

GridFunction ProfileAccumulator::mean(double t_macro) const {
    if (count_ == 0) throw std::logic_error("no samples accumulated");
    GridFunction g;
    g.m = m_;
    g.t = t_macro;
    g.values.assign(m_ + 1, -1.0);
    for (int i = 0; i <= m_; ++i)
        if (cell_sites_[i] > 0)
            g.values[i] =
                sums_[i] / (static_cast<double>(count_) * cell_sites_[i]);
    // Empty cells inherit the nearest populated value(s).
    for (int i = 0; i <= m_; ++i) {
        if (g.values[i] >= 0.0) continue;
        int l = i - 1, r = i + 1;
        while (l >= 0 && g.values[l] < 0.0) --l;
        while (r <= m_ && g.values[r] < 0.0) ++r;
        if (l >= 0 && r <= m_)
            g.values[i] = 0.5 * (g.values[l] + g.values[r]);
        else if (l >= 0)
            g.values[i] = g.values[l];
        else if (r <= m_)
            g.values[i] = g.values[r];
        else
            throw std::logic_error("profile grid has no populated cell");
    }
    return g;
}

GridFunction density_profile(std::span<const Snapshot> ensemble, int m) {
    if (ensemble.empty())
        throw std::invalid_argument("density_profile needs a non-empty ensemble");
    const int N = ensemble.front().N;
    const double t = ensemble.front().t_macro;
    for (const auto& s : ensemble)
        if (s.N != N || s.t_macro != t)
            throw std::invalid_argument("mixed N or t in density_profile ensemble");
    ProfileAccumulator acc(N, m);
    for (const auto& s : ensemble) acc.add(s.occ);
    return acc.mean(t);
}

}  // namespace ssepwin
