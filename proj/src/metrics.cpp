#include "krt/metrics.hpp"

#include "krt/errors.hpp"
#include "krt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

namespace krt::metrics {

namespace {

std::vector<double> values_on(const DensityFn& f, const quadrature::TensorGrid& grid) {
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        std::vector<double> x(grid.dim());
        grid.node(i, x);
        out[i] = f(x);
    });
    for (double v : out) {
        if (!std::isfinite(v)) throw NumericalError("distance: non-finite density value");
    }
    return out;
}

void require_nonnegative(std::span<const double> v) {
    for (double x : v) {
        if (x < 0.0) throw NumericalError("distance: negative density value");
    }
}

double hellinger_values(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double diff = std::sqrt(f[i]) - std::sqrt(g[i]);
        s += w[i] * diff * diff;
    }
    return std::sqrt(0.5 * s);
}

double tv_values(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::abs(f[i] - g[i]);
    return 0.5 * s;
}

// Summand f log(f/g) - f + g: same integral for probability densities,
// but pointwise nonnegative, so small divergences do not drown in the
// quadrature error of int (f - g).
double kl_values(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (f[i] <= 0.0) {
            s += w[i] * g[i];
            continue;
        }
        if (g[i] <= 0.0) return std::numeric_limits<double>::infinity();
        const double u = (f[i] - g[i]) / g[i];
        s += w[i] * g[i] * ((1.0 + u) * std::log1p(u) - u);
    }
    return s;
}

// int |F_f - F_g| dx in one dimension with F = int_{-1}^x (.) dmu.
double w1_exact_1d(const DensityFn& f, const DensityFn& g, std::size_t order) {
    constexpr std::size_t kPanels = 32;
    const auto& base = quadrature::gauss_legendre(order);
    const double width = 2.0 / kPanels;
    double gap_at_left = 0.0;  // F_f - F_g at the panel's left end
    double total = 0.0;
    double x[1];
    auto diff = [&](double t) {
        x[0] = t;
        return f(x) - g(x);
    };
    for (std::size_t p = 0; p < kPanels; ++p) {
        const double a = -1.0 + width * static_cast<double>(p);
        const double b = (p + 1 == kPanels) ? 1.0 : a + width;
        const auto outer = quadrature::mapped(base, a, b);
        for (std::size_t i = 0; i < outer.size(); ++i) {
            const auto inner = quadrature::mapped(base, a, outer.nodes[i]);
            double gap = gap_at_left;
            for (std::size_t m = 0; m < inner.size(); ++m) gap += inner.weights[m] * diff(inner.nodes[m]);
            // outer weights integrate against dx/2
            total += 2.0 * outer.weights[i] * std::abs(gap);
        }
        const auto whole = quadrature::mapped(base, a, b);
        for (std::size_t m = 0; m < whole.size(); ++m) gap_at_left += whole.weights[m] * diff(whole.nodes[m]);
    }
    return total;
}

double tv_oversampled(const DensityFn& f, const DensityFn& g, std::size_t d, std::size_t order) {
    const auto rule = quadrature::composite(order, 4);
    const quadrature::TensorGrid grid(std::vector<quadrature::Rule>(d, rule));
    const auto fv = values_on(f, grid);
    const auto gv = values_on(g, grid);
    return tv_values(fv, gv, grid.weights());
}

}  // namespace

double hellinger(const DensityFn& f, const DensityFn& g, const quadrature::TensorGrid& grid) {
    const auto fv = values_on(f, grid);
    const auto gv = values_on(g, grid);
    require_nonnegative(fv);
    require_nonnegative(gv);
    return hellinger_values(fv, gv, grid.weights());
}

double total_variation(const DensityFn& f, const DensityFn& g, const quadrature::TensorGrid& grid) {
    return tv_values(values_on(f, grid), values_on(g, grid), grid.weights());
}

double kl_divergence(const DensityFn& f, const DensityFn& g, const quadrature::TensorGrid& grid) {
    return kl_values(values_on(f, grid), values_on(g, grid), grid.weights());
}

Wasserstein wasserstein1(const DensityFn& f, const DensityFn& g, std::size_t d, const quadrature::TensorGrid& grid) {
    if (d == 0 || grid.dim() != d) throw std::invalid_argument("wasserstein1: grid dimension must equal d");
    if (d == 1) return {w1_exact_1d(f, g, grid.rule(0).size()), true};
    return {w1_tv_bound(total_variation(f, g, grid), d), false};
}

double w1_tv_bound(double tv, std::size_t d) { return 2.0 * std::sqrt(static_cast<double>(d)) * tv; }

std::size_t default_distance_order(std::size_t d) {
    if (d <= 3) return 30;
    if (d == 4) return 15;
    throw ConfigError("tensor-grid distances are limited to d <= 4");
}

DistanceReport distances(const DensityFn& f, const DensityFn& g, std::size_t d, const DistanceSettings& settings) {
    const std::size_t order = settings.order ? settings.order : default_distance_order(d);
    const quadrature::TensorGrid grid(d, order);
    const auto fv = values_on(f, grid);
    const auto gv = values_on(g, grid);
    require_nonnegative(fv);
    require_nonnegative(gv);
    const auto w = grid.weights();
    DistanceReport r;
    r.dim = d;
    r.grid_order = order;
    r.hellinger = hellinger_values(fv, gv, w);
    r.tv = tv_values(fv, gv, w);
    r.kl = kl_values(fv, gv, w);
    r.tv_oversampled = (settings.oversample && d <= 3) ? tv_oversampled(f, g, d, order)
                                                        : std::numeric_limits<double>::quiet_NaN();
    if (d == 1) {
        r.w1 = w1_exact_1d(f, g, order);
        r.w1_exact = true;
    } else {
        r.w1 = w1_tv_bound(r.tv, d);
        r.w1_exact = false;
    }
    return r;
}

DistanceReport pullback_distance(const transport::TriangularMap& map, const density::Density& rho,
                                 const density::Density& pi, const DistanceSettings& settings) {
    if (map.dim() != rho.dim() || rho.dim() != pi.dim()) {
        throw std::invalid_argument("pullback_distance: dimension mismatch");
    }
    auto pulled = [&](std::span<const double> x) { return transport::pullback_density(map, rho, x); };
    auto target = [&](std::span<const double> x) { return pi(x); };
    return distances(pulled, target, rho.dim(), settings);
}

BoundCheck det_product_bound(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("det_product_bound: sequences must match");
    double prod_a = 1.0;
    double prod_b = 1.0;
    double sum_diff = 0.0;
    double a_min = std::numeric_limits<double>::infinity();
    double b_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (!(a[j] > 0.0) || !(b[j] > 0.0)) throw std::invalid_argument("det_product_bound: entries must be positive");
        prod_a *= a[j];
        prod_b *= b[j];
        sum_diff += std::abs(a[j] - b[j]);
        a_min = std::min(a_min, a[j]);
        b_min = std::min(b_min, b[j]);
    }
    const double c = std::exp(sum_diff / a_min) * prod_a / std::min(a_min, b_min);
    return {std::abs(prod_a - prod_b), c * sum_diff};
}

BoundCheck integral_difference_bound(const DensityFn& g, const DensityFn& f, const DensityFn& h,
                                     const quadrature::TensorGrid& grid) {
    const auto gv = values_on(g, grid);
    const auto fv = values_on(f, grid);
    const auto hv = values_on(h, grid);
    const auto w = grid.weights();
    double diff = 0.0;
    double norm_f = 0.0;
    double norm_h = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        diff += w[i] * gv[i] * (fv[i] - hv[i]);
        norm_f += w[i] * gv[i] * gv[i] * fv[i];
        norm_h += w[i] * gv[i] * gv[i] * hv[i];
    }
    const double dh = hellinger_values(fv, hv, w);
    return {std::abs(diff), std::sqrt(2.0) * dh * (std::sqrt(norm_f) + std::sqrt(norm_h))};
}

void to_json(nlohmann::json& j, const DistanceReport& r) {
    j = {{"hellinger", r.hellinger},
         {"tv", r.tv},
         {"tv_oversampled", r.tv_oversampled},
         {"kl", r.kl},
         {"w1", r.w1},
         {"w1_exact", r.w1_exact},
         {"grid", {{"dim", r.dim}, {"order", r.grid_order}, {"rule", "gauss-legendre tensor"}}}};
}

}  // namespace krt::metrics
