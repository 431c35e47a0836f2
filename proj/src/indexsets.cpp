#include "krt/indexsets.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace krt::index {

WeightVector::WeightVector(std::vector<double> xi) : xi_(std::move(xi)) {
    for (double v : xi_) {
        if (!(v > 1.0)) throw std::invalid_argument("WeightVector: every xi_j must exceed 1");
    }
}

WeightVector WeightVector::prefix(std::size_t k) const {
    if (k > xi_.size()) throw std::invalid_argument("WeightVector::prefix: k too large");
    return WeightVector(std::vector<double>(xi_.begin(), xi_.begin() + static_cast<std::ptrdiff_t>(k)));
}

double gamma(const WeightVector& xi, const MultiIndex& nu) {
    const std::size_t k = xi.size();
    if (k == 0) throw std::invalid_argument("gamma: empty weight vector");
    if (nu.size() > k) throw std::invalid_argument("gamma: multiindex longer than weight vector");
    double g = std::pow(xi[k - 1], -static_cast<double>(std::max(1u, nu[k - 1])));
    for (std::size_t j = 0; j + 1 < k; ++j) {
        if (nu[j] > 0) g *= std::pow(xi[j], -static_cast<double>(nu[j]));
    }
    return g;
}

bool IndexSet::contains(const MultiIndex& nu) const {
    return std::binary_search(members.begin(), members.end(), nu, poly::GradedLex{});
}

namespace {

// Bound used for pruning: a subtree is skipped only when its largest
// possible weight is clearly below eps; leaves are then decided by gamma().
constexpr double kPruneSlack = 1.0 - 1e-12;

void descend(const WeightVector& xi, double eps, std::size_t j, double running,
             std::vector<unsigned>& exps, std::vector<MultiIndex>& out) {
    const std::size_t k = xi.size();
    if (j == k) {
        MultiIndex nu(exps);
        if (gamma(xi, nu) >= eps) out.push_back(std::move(nu));
        return;
    }
    // The last coordinate always pays at least xi_k^{-1}, already included
    // in `running`; its first increment is free.
    const bool last = (j + 1 == k);
    double factor = running;
    for (unsigned n = 0;; ++n) {
        if (n > 0 && !(last && n == 1)) factor /= xi[j];
        if (factor < eps * kPruneSlack) break;
        exps[j] = n;
        descend(xi, eps, j + 1, factor, exps, out);
        if (std::isinf(xi[j])) break;
    }
    exps[j] = 0;
}

}  // namespace

IndexSet enumerate_lambda(const WeightVector& xi, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("enumerate_lambda: epsilon must lie in (0,1)");
    }
    IndexSet set;
    set.k = xi.size();
    set.epsilon = epsilon;
    if (set.k == 0) return set;
    std::vector<unsigned> exps(set.k, 0);
    descend(xi, epsilon, 0, 1.0 / xi[set.k - 1], exps, set.members);
    std::sort(set.members.begin(), set.members.end(), poly::GradedLex{});
    return set;
}

double cardinality_bound_simple(const WeightVector& xi, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("cardinality_bound_simple: epsilon must lie in (0,1)");
    }
    const double xi_min = *std::min_element(xi.values().begin(), xi.values().end());
    return std::pow(1.0 - std::log(epsilon) / std::log(xi_min), static_cast<double>(xi.size()));
}

double cardinality_bound_sharp(const WeightVector& xi, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("cardinality_bound_sharp: epsilon must lie in (0,1)");
    }
    const std::size_t k = xi.size();
    double sum_log = 0.0;
    double prod_inv = 1.0;
    for (double v : xi.values()) {
        sum_log += std::log(v);
        prod_inv /= std::log(v);
    }
    // (1/k!) s^k computed in log space to stay finite for larger k
    const double s = -std::log(epsilon) + sum_log;
    const double log_term = static_cast<double>(k) * std::log(s) - std::lgamma(static_cast<double>(k) + 1.0);
    return std::exp(log_term) * prod_inv;
}

WeightVector xi_from_anisotropy(std::span<const double> b, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("xi_from_anisotropy: alpha must be positive");
    std::vector<double> xi;
    xi.reserve(b.size());
    for (double bj : b) {
        if (!(bj > 0.0)) throw std::invalid_argument("xi_from_anisotropy: b_j must be positive");
        xi.push_back(1.0 + alpha / bj);
    }
    return WeightVector(std::move(xi));
}

void to_json(nlohmann::json& j, const IndexSet& set) {
    j = {{"k", set.k}, {"epsilon", set.epsilon}, {"nus", nlohmann::json::array()}};
    for (const auto& nu : set.members) j["nus"].push_back(nu.padded(set.k));
}

void from_json(const nlohmann::json& j, IndexSet& set) {
    set.k = j.at("k").get<std::size_t>();
    set.epsilon = j.at("epsilon").get<double>();
    set.members.clear();
    for (const auto& nu : j.at("nus")) set.members.push_back(nu.get<MultiIndex>());
    std::sort(set.members.begin(), set.members.end(), poly::GradedLex{});
}

}  // namespace krt::index
