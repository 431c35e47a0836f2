#include "doctest.h"

#include "krt/density.hpp"
#include "krt/errors.hpp"

#include <cmath>
#include <random>

using namespace krt::density;

namespace {
std::vector<double> random_point(std::mt19937_64& gen, std::size_t d) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(d);
    for (auto& v : x) v = u(gen);
    return x;
}
}  // namespace

TEST_CASE("uniform density") {
    const auto f = uniform(3);
    CHECK(f(std::vector<double>{0.1, -0.5, 0.9}) == 1.0);
    for (std::size_t k = 0; k <= 3; ++k) CHECK(marginal_hat(f, k, std::vector<double>{0.2, 0.3, 0.4}) == 1.0);
    CHECK(std::abs(krt::quadrature::integrate([&](auto x) { return f(x); }, krt::quadrature::TensorGrid(3, 2)) - 1.0) <
          1e-14);
}

TEST_CASE("linear density") {
    const auto f = linear({0.3, 0.2});
    CHECK(f(std::vector<double>{1.0, 1.0}) == doctest::Approx(1.5));
    CHECK(marginal_hat(f, 1, std::vector<double>{0.5}) == doctest::Approx(1.15));
    CHECK(std::abs(conditional(f, 2, std::vector<double>{0.5, -1.0}) - 0.95 / 1.15) < 1e-15);
    CHECK(std::abs(krt::quadrature::integrate([&](auto x) { return f(x); }, krt::quadrature::TensorGrid(2, 2)) - 1.0) <
          1e-14);
    CHECK(f.anisotropy() == std::vector<double>{0.3, 0.2});
    CHECK_THROWS_AS((void)linear({0.6, -0.4}), krt::ConfigError);
}

TEST_CASE("oracle and quadrature marginals agree on linear densities") {
    std::mt19937_64 gen(1);
    for (std::size_t d = 1; d <= 4; ++d) {
        std::vector<double> c(d);
        for (std::size_t j = 0; j < d; ++j) c[j] = 0.8 / static_cast<double>(d) * (j % 2 ? -1.0 : 1.0);
        const auto f = linear(c);
        for (int trial = 0; trial < 10; ++trial) {
            const auto x = random_point(gen, d);
            for (std::size_t k = 0; k <= d; ++k) {
                CHECK(std::abs(marginal_hat(f, k, x) - marginal_hat_quadrature(f, k, x, 6)) < 1e-8);
            }
        }
    }
}

TEST_CASE("gaussian posterior") {
    // A = 0: flat likelihood
    const auto flat = gaussian_posterior(1, 2, {0.0, 0.0}, {0.3}, 0.5);
    CHECK(std::abs(flat(std::vector<double>{0.4, -0.2}) - 1.0) < 1e-13);

    // d = 1, A = 1, obs = 0, sigma = 1: Z = (1/2) int e^{-t^2/2} dt = sqrt(pi/2) erf(1/sqrt 2)
    const auto g = gaussian_posterior(1, 1, {1.0}, {0.0}, 1.0);
    const double z = std::sqrt(std::acos(-1.0) / 2.0) * std::erf(1.0 / std::sqrt(2.0));
    CHECK(std::abs(z - 0.8556243918921488) < 1e-12);
    CHECK(std::abs(g(std::vector<double>{0.0}) - 1.0 / z) < 1e-12);
    CHECK(std::abs(g(std::vector<double>{0.7}) - std::exp(-0.245) / z) < 1e-12);

    const auto h = gaussian_posterior(2, 2, {1.0, 0.5, -0.3, 0.8}, {0.0, 0.0}, 0.7);
    std::mt19937_64 gen(9);
    for (int i = 0; i < 100; ++i) {
        auto x = random_point(gen, 2);
        std::vector<double> mx{-x[0], -x[1]};
        CHECK(std::abs(h(x) - h(mx)) < 1e-14 * h(x));
    }
    CHECK(h.anisotropy()[0] == doctest::Approx(std::sqrt(1.0 + 0.09)));
    CHECK(std::abs(krt::quadrature::integrate([&](auto x) { return h(x); }, krt::quadrature::TensorGrid(2, 40)) - 1.0) <
          1e-12);

    CHECK_THROWS_AS((void)gaussian_posterior(1, 6, std::vector<double>(6, 1.0), {0.0}, 1.0), krt::ConfigError);
    CHECK_THROWS_AS((void)gaussian_posterior(1, 1, {1.0}, {0.0}, 0.0), krt::ConfigError);
}

TEST_CASE("marginal edge cases and conditional normalization") {
    const auto h = gaussian_posterior(2, 3, {1.0, 0.5, 0.2, -0.3, 0.8, 0.4}, {0.2, -0.1}, 0.6);
    const auto f = linear({0.3, -0.2, 0.1});
    std::mt19937_64 gen(4);
    const auto x = random_point(gen, 3);
    CHECK(marginal_hat(h, 3, x) == h(x));
    CHECK(std::abs(marginal_hat(h, 0, {}) - 1.0) < 1e-12);
    CHECK(marginal_hat(f, 0, {}) == 1.0);

    const auto& rule = krt::quadrature::gauss_legendre(40);
    for (int trial = 0; trial < 50; ++trial) {
        const auto z = random_point(gen, 3);
        for (std::size_t k = 1; k <= 3; ++k) {
            for (const auto* dens : {&f, &h}) {
                std::vector<double> p(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(k));
                double s = 0.0;
                for (std::size_t i = 0; i < rule.size(); ++i) {
                    p[k - 1] = rule.nodes[i];
                    s += rule.weights[i] * conditional(*dens, k, p);
                }
                const double tol = dens->has_marginal_oracle() ? 1e-10 : 1e-7;
                CHECK(std::abs(s - 1.0) < tol);
            }
        }
    }
}

TEST_CASE("positivity on random samples") {
    const auto f = linear({0.5, -0.3, 0.15});
    const auto h = gaussian_posterior(1, 2, {2.0, -1.0}, {0.5}, 0.3);
    std::mt19937_64 gen(8);
    for (int i = 0; i < 10000; ++i) {
        CHECK(f(random_point(gen, 3)) > 0.0);
        CHECK(h(random_point(gen, 2)) > 0.0);
    }
}

TEST_CASE("density specs") {
    auto f = from_spec({{"family", "linear"}, {"c", {0.3, 0.2}}});
    CHECK(f.dim() == 2);
    auto g = from_spec(
        {{"family", "gaussian_posterior"}, {"A", {{1.0, 0.0}}}, {"observation", {0.1}}, {"sigma", 0.5}, {"marginal_order", 20}});
    CHECK(g.marginal_order() == 20);
    CHECK(from_spec(g.spec()).dim() == 2);
    CHECK_THROWS_AS((void)from_spec({{"family", "cauchy"}}), krt::ConfigError);
    CHECK_THROWS_AS((void)from_spec({{"family", "uniform"}, {"dim", 2}, {"bogus", 1}}), krt::ConfigError);
    CHECK_THROWS_AS((void)from_spec({{"family", "linear"}}), krt::ConfigError);
}
