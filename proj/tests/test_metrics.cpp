#include "doctest.h"

#include "krt/metrics.hpp"
#include "krt/errors.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

using namespace krt;
using metrics::DensityFn;

namespace {
const DensityFn kOne = [](std::span<const double>) { return 1.0; };
const DensityFn kHalfSlope = [](std::span<const double> x) { return 1.0 + x[0] / 2.0; };

// random positive density 1 + sum_j c_j x_j + q x_1 x_2 style product of linear factors
DensityFn random_density(std::mt19937_64& gen, std::size_t d) {
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    std::vector<double> c(d);
    for (auto& v : c) v = u(gen);
    return [c](std::span<const double> x) {
        double p = 1.0;
        for (std::size_t j = 0; j < c.size(); ++j) p *= 1.0 + c[j] * x[j];
        return p;
    };
}
}  // namespace

TEST_CASE("one-dimensional examples") {
    const auto r = metrics::distances(kOne, kHalfSlope, 1);
    const double h2 = 1.0 - (2.0 / 3.0) * (std::pow(1.5, 1.5) - std::pow(0.5, 1.5));
    CHECK(std::abs(r.hellinger - std::sqrt(h2)) < 1e-12);
    CHECK(std::abs(r.tv_oversampled - 0.125) < 1e-14);
    CHECK(std::abs(r.tv - 0.125) < 1e-3);
    const double kl = -(3.0 * std::log(1.5) + std::log(2.0) - 2.0) / 2.0;
    CHECK(std::abs(kl - 0.0452287) < 1e-7);
    CHECK(std::abs(r.kl - kl) < 1e-12);
    CHECK(r.w1_exact);
    CHECK(std::abs(r.w1 - 1.0 / 6.0) < 1e-12);
    CHECK(r.grid_order == 30);
    // sqrt(d) tv alone would be 1/8 < 1/6
    CHECK(metrics::w1_tv_bound(r.tv_oversampled, 1) >= r.w1);

    const auto same = metrics::distances(kHalfSlope, kHalfSlope, 1);
    CHECK(same.hellinger == 0.0);
    CHECK(same.tv == 0.0);
    CHECK(same.kl == 0.0);
    CHECK(same.w1 == 0.0);

    const auto back = metrics::distances(kHalfSlope, kOne, 1);
    CHECK(std::abs(back.hellinger - r.hellinger) < 1e-14);
}

TEST_CASE("kl is infinite when the second density vanishes") {
    const DensityFn vanish = [](std::span<const double> x) { return x[0] > 0.5 ? 0.0 : 4.0 / 3.0; };
    const quadrature::TensorGrid grid(1, 10);
    CHECK(std::isinf(metrics::kl_divergence(kOne, vanish, grid)));
}

TEST_CASE("wasserstein bound in two dimensions") {
    const DensityFn g = [](std::span<const double> x) { return 1.0 + 0.3 * x[0] - 0.2 * x[1]; };
    const auto r = metrics::distances(kOne, g, 2);
    CHECK_FALSE(r.w1_exact);
    CHECK(std::abs(r.w1 - 2.0 * std::sqrt(2.0) * r.tv) < 1e-15);
    CHECK_THROWS_AS((void)metrics::default_distance_order(5), ConfigError);
    CHECK(metrics::default_distance_order(4) == 15);
}

TEST_CASE("distance inequalities on random pairs") {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 50; ++i) {
        const std::size_t d = 1 + static_cast<std::size_t>(i % 3);
        const auto f = random_density(gen, d);
        const auto g = random_density(gen, d);
        const auto r = metrics::distances(f, g, d, {12});
        CHECK(r.hellinger >= 0.0);
        CHECK(r.hellinger * r.hellinger <= r.tv_oversampled + 1e-12);
        CHECK(r.tv_oversampled <= 1.0);
        CHECK(r.kl >= -1e-12);
        if (d == 1) {
            CHECK(r.w1 <= metrics::w1_tv_bound(r.tv_oversampled, 1) + 1e-12);
        }
    }
}

TEST_CASE("determinant product bound") {
    const std::vector<double> a{2.0, 1.0}, b{1.9, 1.0};
    const auto r = metrics::det_product_bound(a, b);
    CHECK(std::abs(r.lhs - 0.1) < 1e-14);
    CHECK(std::abs(r.rhs - std::exp(0.1) * 2.0 * 0.1) < 1e-14);
    CHECK(std::abs(r.rhs - 0.2210) < 1e-4);
    const auto z = metrics::det_product_bound(a, a);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK_THROWS((void)metrics::det_product_bound(std::vector<double>{1.0, -1.0}, a));

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.05, 3.0), eps(-0.5, 0.5);
    std::uniform_int_distribution<int> len(1, 20);
    for (int i = 0; i < 1000; ++i) {
        const int n = len(gen);
        std::vector<double> x(n), y(n);
        for (int j = 0; j < n; ++j) {
            x[j] = u(gen);
            y[j] = std::max(0.01, x[j] * (1.0 + eps(gen)));
        }
        CHECK(metrics::det_product_bound(x, y).holds());
    }
}

TEST_CASE("integral difference bound") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> n(0.0, 1.0);
    const quadrature::TensorGrid grid(2, 20);
    for (int i = 0; i < 20; ++i) {
        const auto f = random_density(gen, 2);
        const auto h = random_density(gen, 2);
        const double a = n(gen), b = n(gen), c = n(gen);
        const DensityFn g = [=](std::span<const double> x) { return a + b * x[0] * x[0] + c * std::sin(3.0 * x[1]); };
        CHECK(metrics::integral_difference_bound(g, f, h, grid).holds());
    }
}

TEST_CASE("pullback distance of exact inverse is small") {
    const auto pi = density::gaussian_posterior(1, 2, {1.0, -0.6}, {0.3}, 0.5);
    const auto rho = density::uniform(2);
    const transport::ExactTransport t(rho, pi);
    const transport::InverseMap s(t);
    const auto r = metrics::pullback_distance(s, rho, pi, {12});
    CHECK(r.hellinger < 1e-7);
    CHECK(r.tv < 1e-7);
    CHECK(std::abs(r.kl) < 1e-7);

    const transport::IdentityMap id(2);
    const auto base = metrics::pullback_distance(id, rho, pi, {12});
    const auto direct = metrics::distances([&](auto x) { return rho(x); }, [&](auto x) { return pi(x); }, 2, {12});
    CHECK(std::abs(base.tv - direct.tv) < 1e-15);

    const nlohmann::json j = r;
    CHECK(j["grid"]["order"] == 12);
}
