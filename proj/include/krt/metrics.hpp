#pragma once

#include "krt/density.hpp"
#include "krt/quadrature.hpp"
#include "krt/transport.hpp"

#include <cstddef>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <span>

namespace krt::metrics {

using DensityFn = std::function<double(std::span<const double>)>;

// Distances between two densities w.r.t. mu on [-1,1]^d.
struct DistanceReport {
    double hellinger = 0.0;
    double tv = 0.0;
    double tv_oversampled = 0.0;  // 4 panels per coordinate, NaN for d > 3
    double kl = 0.0;              // KL(first || second)
    double w1 = 0.0;
    bool w1_exact = true;  // false: w1_tv_bound upper bound
    std::size_t dim = 0;
    std::size_t grid_order = 0;
};

[[nodiscard]] double hellinger(const DensityFn& f, const DensityFn& g, const quadrature::TensorGrid& grid);
[[nodiscard]] double total_variation(const DensityFn& f, const DensityFn& g, const quadrature::TensorGrid& grid);
// +inf when g <= 0 somewhere f > 0.
[[nodiscard]] double kl_divergence(const DensityFn& f, const DensityFn& g, const quadrature::TensorGrid& grid);

// 2 sqrt(d) tv. Coupling through the common part and the origin gives
// W1 <= sup|x| int |f - g| dmu = sqrt(d) * 2 tv on [-1,1]^d.
[[nodiscard]] double w1_tv_bound(double tv, std::size_t d);

struct Wasserstein {
    double value = 0.0;
    bool exact = true;
};

// d = 1: int |F_f - F_g| dx on a composite rule built from grid's order.
// d > 1: w1_tv_bound, flagged as a bound.
[[nodiscard]] Wasserstein wasserstein1(const DensityFn& f, const DensityFn& g, std::size_t d,
                                       const quadrature::TensorGrid& grid);

struct DistanceSettings {
    // 0 picks 30 for d <= 3 and 15 for d = 4
    std::size_t order = 0;
    // 4-panel TV; NaN when off or d > 3
    bool oversample = true;
};

[[nodiscard]] std::size_t default_distance_order(std::size_t d);

// All four distances on one shared grid (f evaluated once per node).
[[nodiscard]] DistanceReport distances(const DensityFn& f, const DensityFn& g, std::size_t d,
                                       const DistanceSettings& settings = {});

// Distances between the pullback of rho under S (density f_rho(S) det dS)
// and pi.
[[nodiscard]] DistanceReport pullback_distance(const transport::TriangularMap& map, const density::Density& rho,
                                               const density::Density& pi, const DistanceSettings& settings = {});

struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    [[nodiscard]] bool holds() const { return lhs <= rhs; }
};

// lhs = |prod a - prod b|,
// rhs = exp(sum|a_j - b_j| / a_min) prod a / min(a_min, b_min) * sum|a_j - b_j|.
[[nodiscard]] BoundCheck det_product_bound(std::span<const double> a, std::span<const double> b);

// |int g f dmu - int g h dmu| against sqrt(2) d_H(f,h) (|g|_{L2(f)} + |g|_{L2(h)}).
[[nodiscard]] BoundCheck integral_difference_bound(const DensityFn& g, const DensityFn& f, const DensityFn& h,
                                                   const quadrature::TensorGrid& grid);

void to_json(nlohmann::json& j, const DistanceReport& r);

}  // namespace krt::metrics
