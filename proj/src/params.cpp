#include "ssepwin/params.hpp"

#include <stdexcept>

namespace ssepwin {

namespace {

void check_sequence(const std::vector<double>& seq, int K, const char* name,
                    std::vector<std::string>& issues) {
    if (static_cast<int>(seq.size()) != K) {
        issues.push_back(std::string(name) + " has length " +
                         std::to_string(seq.size()) + ", expected K = " +
                         std::to_string(K));
        return;
    }
    for (double v : seq) {
        if (!(v >= 0.0)) {
            issues.push_back(std::string(name) + " has a negative or non-finite entry");
            return;
        }
    }
}

bool nonincreasing(const std::vector<double>& seq) {
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (seq[i] > seq[i - 1]) return false;
    return true;
}

}  // namespace

std::vector<std::string> BoundaryParams::structural_issues() const {
    std::vector<std::string> issues;
    if (K < 1) issues.push_back("K must be a positive integer");
    check_sequence(alpha, K, "alpha", issues);
    check_sequence(beta, K, "beta", issues);
    check_sequence(gamma, K, "gamma", issues);
    check_sequence(delta, K, "delta", issues);
    if (!(theta >= 1.0)) issues.push_back("theta must be >= 1");
    return issues;
}

void BoundaryParams::require_valid() const {
    auto issues = structural_issues();
    if (issues.empty()) return;
    std::string msg = "invalid boundary parameters:";
    for (const auto& s : issues) msg += " [" + s + "]";
    throw std::invalid_argument(msg);
}

AssumptionReport validate(const BoundaryParams& params) {
    params.require_valid();
    AssumptionReport rep;

    rep.rates_nonincreasing = true;
    const std::pair<const char*, const std::vector<double>*> seqs[] = {
        {"alpha", &params.alpha},
        {"gamma", &params.gamma},
        {"beta", &params.beta},
        {"delta", &params.delta}};
    for (auto [name, seq] : seqs) {
        if (!nonincreasing(*seq)) {
            rep.rates_nonincreasing = false;
            rep.violations.push_back(std::string(name) + " is not non-increasing");
        }
    }

    const double i1 = params.alpha[0] + params.beta[0];
    const double o1 = params.gamma[0] + params.delta[0];
    rep.irreducible = (i1 != 0.0) && (o1 != 0.0);
    if (i1 == 0.0)
        rep.violations.push_back("alpha1 + beta1 = 0 (empty configuration is absorbing)");
    if (o1 == 0.0)
        rep.violations.push_back("gamma1 + delta1 = 0 (full configuration is absorbing)");

    const bool inject_dominated =
        params.delta[0] <= params.alpha[0] && params.beta[0] <= params.gamma[0];
    const bool remove_dominated =
        params.delta[0] >= params.alpha[0] && params.beta[0] >= params.gamma[0];
    rep.boundary_ordered = rep.irreducible && (inject_dominated || remove_dominated);
    if (!(inject_dominated || remove_dominated))
        rep.violations.push_back(
            "first-site rates are not consistently ordered across the two edges");

    const AggregateRates agg = aggregates(params);
    const bool agg_mono =
        nonincreasing(agg.injection) && nonincreasing(agg.removal);
    rep.aggregates_nonincreasing = rep.irreducible && agg_mono;
    if (!agg_mono)
        rep.violations.push_back("aggregate rates alpha+beta or gamma+delta not non-increasing");

    return rep;
}

AggregateRates aggregates(const BoundaryParams& params) {
    params.require_valid();
    AggregateRates agg;
    agg.injection.resize(params.K);
    agg.removal.resize(params.K);
    for (int x = 0; x < params.K; ++x) {
        agg.injection[x] = params.alpha[x] + params.beta[x];
        agg.removal[x] = params.gamma[x] + params.delta[x];
    }
    return agg;
}

}  // namespace ssepwin
