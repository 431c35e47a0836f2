#include "krt/quadrature.hpp"

#include "krt/errors.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace krt::quadrature {

namespace {

Rule compute_gauss_legendre(std::size_t n) {
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Root i counted from the right end; cosine initial guess.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t j = 2; j <= n; ++j) {
                const double jj = static_cast<double>(j);
                const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
                p0 = p1;
                p1 = p2;
            }
            // P_n = p1, P_{n-1} = p0
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-15) break;
        }
        // recompute derivative at the converged root
        {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t j = 2; j <= n; ++j) {
                const double jj = static_cast<double>(j);
                const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        }
        // Standard weight 2/((1-x^2) P_n'(x)^2), halved for mu.
        const double w = 1.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        rule.weights[n - 1 - i] = w;
        rule.weights[i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const Rule& gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<Rule>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, std::make_unique<Rule>(compute_gauss_legendre(n))).first;
    }
    return *it->second;
}

Rule mapped(const Rule& rule, double a, double b) {
    Rule out;
    out.nodes.resize(rule.size());
    out.weights.resize(rule.size());
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        out.nodes[i] = mid + half * rule.nodes[i];
        out.weights[i] = half * rule.weights[i];
    }
    return out;
}

Rule composite(std::size_t n, std::size_t panels) {
    if (panels == 0) throw std::invalid_argument("composite: panels must be positive");
    const Rule& base = gauss_legendre(n);
    Rule out;
    out.nodes.reserve(n * panels);
    out.weights.reserve(n * panels);
    const double width = 2.0 / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double a = -1.0 + width * static_cast<double>(p);
        const double b = (p + 1 == panels) ? 1.0 : a + width;
        Rule panel = mapped(base, a, b);
        out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
        out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
    }
    return out;
}

TensorGrid::TensorGrid(std::vector<Rule> rules) : rules_(std::move(rules)) {
    size_ = 1;
    for (const auto& r : rules_) size_ *= r.size();
}

TensorGrid::TensorGrid(std::size_t d, std::size_t n)
    : TensorGrid(std::vector<Rule>(d, gauss_legendre(n))) {}

double TensorGrid::node(std::size_t index, std::span<double> x) const {
    double w = 1.0;
    for (std::size_t j = rules_.size(); j-- > 0;) {
        const std::size_t nj = rules_[j].size();
        const std::size_t i = index % nj;
        index /= nj;
        x[j] = rules_[j].nodes[i];
        w *= rules_[j].weights[i];
    }
    return w;
}

std::vector<double> TensorGrid::nodes() const {
    std::vector<double> out(size_ * dim());
    for (std::size_t i = 0; i < size_; ++i) {
        node(i, std::span<double>(out.data() + i * dim(), dim()));
    }
    return out;
}

std::vector<double> TensorGrid::weights() const {
    std::vector<double> out(size_);
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < size_; ++i) out[i] = node(i, x);
    return out;
}

double integrate(const Integrand& f, const TensorGrid& grid) {
    std::vector<double> x(grid.dim());
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.node(i, x);
        const double v = f(x);
        if (!std::isfinite(v)) {
            throw NumericalError("integrate: non-finite integrand value at node " +
                                 std::to_string(i));
        }
        sum += w * v;
    }
    return sum;
}

double integrate_values(std::span<const double> values, const TensorGrid& grid) {
    if (values.size() != grid.size()) {
        throw std::invalid_argument("integrate_values: size mismatch");
    }
    std::vector<double> x(grid.dim());
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.node(i, x);
        if (!std::isfinite(values[i])) {
            throw NumericalError("integrate_values: non-finite value at node " + std::to_string(i));
        }
        sum += w * values[i];
    }
    return sum;
}

}  // namespace krt::quadrature
