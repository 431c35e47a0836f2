#include "krt/transport.hpp"

#include "krt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace krt::transport {

MapEval IdentityMap::evaluate(std::span<const double> x) const {
    return {std::vector<double>(x.begin(), x.end()), std::vector<double>(x.size(), 1.0)};
}

std::vector<double> IdentityMap::inverse(std::span<const double> y) const { return {y.begin(), y.end()}; }

MapEval InverseMap::evaluate(std::span<const double> x) const {
    // The preimage of a prefix is a prefix of the preimage.
    MapEval out;
    out.value = base_.inverse(x);
    const MapEval fwd = base_.evaluate(out.value);
    out.diag.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out.diag[k] = 1.0 / fwd.diag[k];
    return out;
}

std::vector<double> InverseMap::inverse(std::span<const double> y) const { return base_(y); }

double solve_monotone(const std::function<std::pair<double, double>(double)>& eval, double target, double g_lo,
                      double g_hi, const RootSettings& settings) {
    const double tol = settings.tolerance;
    if (!(target >= g_lo - tol && target <= g_hi + tol) || !(g_hi > g_lo)) {
        throw NumericalError("solve_monotone: target " + std::to_string(target) + " not bracketed by [" +
                             std::to_string(g_lo) + ", " + std::to_string(g_hi) + "]");
    }
    if (target <= g_lo) return -1.0;
    if (target >= g_hi) return 1.0;
    double lo = -1.0;
    double hi = 1.0;
    double t = std::clamp(-1.0 + 2.0 * (target - g_lo) / (g_hi - g_lo), -1.0, 1.0);
    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        const auto [g, dg] = eval(t);
        if (!std::isfinite(g)) throw NumericalError("solve_monotone: non-finite function value");
        const double r = g - target;
        if (std::abs(r) <= tol) return t;
        if (r < 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) return t;
        const double newton = t - r / dg;
        if (dg > 0.0 && std::isfinite(newton) && newton > lo && newton < hi) {
            t = newton;
        } else {
            t = 0.5 * (lo + hi);
        }
    }
    throw NumericalError("solve_monotone: no convergence within " + std::to_string(settings.max_iterations) +
                         " iterations");
}

double invert_cdf(const std::function<std::pair<double, double>(double)>& eval, double y,
                  const RootSettings& settings) {
    if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("invert_cdf: y must lie in [0,1]");
    return solve_monotone(eval, y, 0.0, 1.0, settings);
}

ConditionalSlice::ConditionalSlice(const density::Density& f, std::size_t k, std::span<const double> prefix,
                                   std::size_t cdf_order)
    : f_(f), k_(k), rule_(quadrature::gauss_legendre(cdf_order)), point_(k, 0.0) {
    if (k == 0 || k > f.dim()) throw std::invalid_argument("ConditionalSlice: need 1 <= k <= d");
    if (prefix.size() < k - 1) throw std::invalid_argument("ConditionalSlice: prefix too short");
    std::copy(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(k - 1), point_.begin());
    double sum = 0.0;
    for (std::size_t i = 0; i < rule_.size(); ++i) sum += rule_.weights[i] * joint(rule_.nodes[i]);
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        throw NumericalError("ConditionalSlice: non-positive normalizer for component " + std::to_string(k));
    }
    norm_ = sum;
}

double ConditionalSlice::joint(double t) const {
    point_[k_ - 1] = t;
    return density::marginal_hat(f_, k_, point_);
}

double ConditionalSlice::pdf(double t) const { return joint(t) / norm_; }

double ConditionalSlice::cdf(double t) const {
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double half = 0.5 * (t + 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule_.size(); ++i) {
        sum += rule_.weights[i] * joint(-1.0 + half * (rule_.nodes[i] + 1.0));
    }
    return half * sum / norm_;
}

double ConditionalSlice::quantile(double y, const RootSettings& settings) const {
    return invert_cdf([this](double t) { return std::pair{cdf(t), 0.5 * pdf(t)}; }, std::clamp(y, 0.0, 1.0),
                      settings);
}

double conditional_cdf(const density::Density& f, std::size_t k, std::span<const double> prefix, double t,
                       std::size_t cdf_order) {
    return ConditionalSlice(f, k, prefix, cdf_order).cdf(t);
}

ExactTransport::ExactTransport(density::Density reference, density::Density target, ExactSettings settings)
    : reference_(std::move(reference)), target_(std::move(target)), settings_(settings) {
    if (reference_.dim() != target_.dim()) {
        throw ConfigError("reference and target dimensions differ (" + std::to_string(reference_.dim()) + " vs " +
                          std::to_string(target_.dim()) + ")");
    }
    if (settings_.cdf_order == 0) throw ConfigError("cdf_order must be positive");
}

ExactTransport::Step ExactTransport::step(std::size_t k, std::span<const double> x,
                                          std::span<const double> image_prefix) const {
    const ConditionalSlice from(reference_, k, x.first(k - 1), settings_.cdf_order);
    const ConditionalSlice to(target_, k, image_prefix.first(k - 1), settings_.cdf_order);
    const double xk = x[k - 1];
    const double u = from.cdf(xk);
    const double y = to.quantile(u, settings_.root);
    const double denom = to.pdf(y);
    if (!(denom > 0.0)) throw NumericalError("ExactTransport: non-positive target conditional density");
    return {y, from.pdf(xk) / denom};
}

MapEval ExactTransport::evaluate(std::span<const double> x) const {
    if (x.size() > dim()) throw std::invalid_argument("ExactTransport: point dimension exceeds map dimension");
    MapEval out;
    out.value.reserve(x.size());
    out.diag.reserve(x.size());
    for (std::size_t k = 1; k <= x.size(); ++k) {
        const Step s = step(k, x.first(k), out.value);
        out.value.push_back(s.value);
        out.diag.push_back(s.derivative);
    }
    return out;
}

std::vector<double> ExactTransport::inverse(std::span<const double> y) const { return swapped()(y); }

std::vector<double> ExactTransport::inverse_by_root_finding(std::span<const double> y) const {
    if (y.size() > dim()) throw std::invalid_argument("ExactTransport: point dimension exceeds map dimension");
    std::vector<double> x;
    x.reserve(y.size());
    for (std::size_t k = 1; k <= y.size(); ++k) {
        // T_{[k-1]}(x_{[k-1]}) = y_{[k-1]} by construction of the earlier coordinates.
        const ConditionalSlice from(reference_, k, x, settings_.cdf_order);
        const ConditionalSlice to(target_, k, y.first(k - 1), settings_.cdf_order);
        auto component = [&](double s) {
            const double value = to.quantile(from.cdf(s), settings_.root);
            return std::pair{value, from.pdf(s) / to.pdf(value)};
        };
        x.push_back(solve_monotone(component, y[k - 1], -1.0, 1.0, settings_.root));
    }
    return x;
}

double ExactTransport::diag_derivative(std::size_t k, std::span<const double> x) const {
    if (k == 0 || k > dim() || x.size() < k) throw std::invalid_argument("diag_derivative: need 1 <= k <= d");
    return evaluate(x.first(k)).diag.back();
}

ExactTransport ExactTransport::swapped() const { return ExactTransport(target_, reference_, settings_); }

namespace {
constexpr double kDerivativeFloor = 1e-14;
}

double pushforward_density(const TriangularMap& map, const density::Density& rho, std::span<const double> y) {
    const std::vector<double> x = map.inverse(y);
    const MapEval e = map.evaluate(x);
    double det = 1.0;
    for (double dk : e.diag) {
        if (!(dk > kDerivativeFloor)) throw NumericalError("pushforward_density: diagonal derivative underflow");
        det *= dk;
    }
    return rho(x) / det;
}

double pullback_density(const TriangularMap& map, const density::Density& rho, std::span<const double> x) {
    const MapEval e = map.evaluate(x);
    double det = 1.0;
    for (double dk : e.diag) det *= dk;
    return rho(e.value) * det;
}

}  // namespace krt::transport
