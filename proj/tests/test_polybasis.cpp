#include "doctest.h"

#include "krt/polybasis.hpp"

#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <random>

using namespace krt::poly;
using krt::quadrature::TensorGrid;

TEST_CASE("orthonormal Legendre values") {
    CHECK(legendre(0, 0.37) == 1.0);
    CHECK(std::abs(legendre(1, 0.5) - std::sqrt(3.0) * 0.5) < 1e-15);
    CHECK(std::abs(legendre(2, 1.0) - std::sqrt(5.0)) < 1e-14);
    std::vector<double> vals(8);
    legendre_values(-0.3, vals);
    for (unsigned n = 0; n < 8; ++n) CHECK(std::abs(vals[n] - legendre(n, -0.3)) < 1e-14);
}

TEST_CASE("multiindex canonical form and graded-lex order") {
    CHECK(MultiIndex{1, 0, 0} == MultiIndex{1});
    CHECK(MultiIndex{0, 0}.size() == 0);
    CHECK(MultiIndex{2, 1}.total() == 3);
    GradedLex lt;
    CHECK(lt(MultiIndex{}, MultiIndex{0, 1}));
    CHECK(lt(MultiIndex{1}, MultiIndex{0, 1}));
    CHECK(lt(MultiIndex{0, 1}, MultiIndex{2}));
    CHECK_FALSE(lt(MultiIndex{1}, MultiIndex{1, 0}));
}

TEST_CASE("sparse polynomial evaluation") {
    SparsePolynomial one(1);
    one.add(MultiIndex{}, 1.0);
    CHECK(one(std::vector<double>{0.42}) == 1.0);

    SparsePolynomial p(2);
    p.add(MultiIndex{1, 0}, 2.0);
    CHECK(std::abs(p(std::vector<double>{0.5, -0.3}) - 2.0 * std::sqrt(3.0) * 0.5) < 1e-14);

    SparsePolynomial empty(3);
    CHECK(empty(std::vector<double>{0.1, 0.2, 0.3}) == 0.0);

    CHECK_THROWS_AS((void)p(std::vector<double>{0.1}), std::invalid_argument);
}

TEST_CASE("projection examples") {
    const TensorGrid g8(1, 8);
    const std::vector<MultiIndex> lambda{MultiIndex{}, MultiIndex{1}, MultiIndex{2}, MultiIndex{3}};
    auto p = project([](std::span<const double> x) { return legendre(2, x[0]); }, lambda, g8);
    CHECK(std::abs(p.coefficient(MultiIndex{2}) - 1.0) < 1e-13);
    CHECK(std::abs(p.coefficient(MultiIndex{})) < 1e-13);
    CHECK(std::abs(p.coefficient(MultiIndex{1})) < 1e-13);
    CHECK(std::abs(p.coefficient(MultiIndex{3})) < 1e-13);

    auto c = project([](std::span<const double>) { return 1.0; }, lambda, g8);
    CHECK(std::abs(c.coefficient(MultiIndex{}) - 1.0) < 1e-14);

    auto lin = project([](std::span<const double> x) { return x[0]; }, lambda, g8);
    CHECK(std::abs(lin.coefficient(MultiIndex{1}) - 1.0 / std::sqrt(3.0)) < 1e-14);

    // grid too coarse for the requested degree
    const TensorGrid g2(1, 2);
    CHECK_THROWS_AS((void)project([](std::span<const double>) { return 1.0; }, lambda, g2), std::invalid_argument);
}

TEST_CASE("sup norm bound") {
    CHECK(sup_norm_bound(MultiIndex{0, 0}) == 1.0);
    CHECK(std::abs(sup_norm_bound(MultiIndex{1, 2}) - std::sqrt(3.0) * std::sqrt(5.0)) < 1e-14);
    // dense sampling oracle for L_3
    double sampled = 0.0;
    for (int i = 0; i <= 1000; ++i) sampled = std::max(sampled, std::abs(legendre(3, -1.0 + 2.0 * i / 1000.0)));
    CHECK(sampled <= sup_norm_bound(MultiIndex{3}) + 1e-14);
    CHECK(std::abs(sup_norm_bound(MultiIndex{3}) - std::sqrt(7.0)) < 1e-14);
}

TEST_CASE("sampled sup of |L_nu| respects the bound") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (unsigned a = 0; a <= 6; ++a) {
        for (unsigned b = 0; b + a <= 6; ++b) {
            const MultiIndex nu{a, b};
            SparsePolynomial p(2);
            p.add(nu, 1.0);
            double sup = 0.0;
            for (int i = 0; i < 10000; ++i) sup = std::max(sup, std::abs(p(std::vector<double>{u(gen), u(gen)})));
            CHECK(sup <= sup_norm_bound(nu) * (1.0 + 1e-14));
        }
    }
}

TEST_CASE("Gram matrix is the identity for |nu| <= 6, k <= 3") {
    for (std::size_t k = 1; k <= 3; ++k) {
        std::vector<MultiIndex> basis;
        std::vector<unsigned> e(k, 0);
        // all nu with |nu| <= 6
        std::function<void(std::size_t, unsigned)> rec = [&](std::size_t j, unsigned budget) {
            if (j == k) {
                basis.emplace_back(e);
                return;
            }
            for (unsigned n = 0; n <= budget; ++n) {
                e[j] = n;
                rec(j + 1, budget - n);
            }
            e[j] = 0;
        };
        rec(0, 6);
        const TensorGrid grid(k, 8);
        double worst = 0.0;
        for (const auto& a : basis) {
            SparsePolynomial pa(k);
            pa.add(a, 1.0);
            auto col = project([&](std::span<const double> x) { return pa(x); }, basis, grid);
            for (const auto& b : basis) {
                worst = std::max(worst, std::abs(col.coefficient(b) - (a == b ? 1.0 : 0.0)));
            }
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("project inverts eval on P_Lambda") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<MultiIndex> lambda;
    for (unsigned a = 0; a <= 4; ++a)
        for (unsigned b = 0; b <= 3; ++b) lambda.push_back(MultiIndex{a, b});
    SparsePolynomial p(2);
    for (const auto& nu : lambda) p.add(nu, u(gen));
    const auto grid = projection_grid(lambda, 2, GridRule{});
    auto q = project([&](std::span<const double> x) { return p(x); }, lambda, grid);
    for (const auto& nu : lambda) CHECK(std::abs(q.coefficient(nu) - p.coefficient(nu)) < 1e-12);
}

TEST_CASE("antiderivative in the last coordinate") {
    CHECK(antiderivative_in_last(SparsePolynomial(2)).empty());

    SparsePolynomial c(1);
    c.add(MultiIndex{}, 1.0);
    auto q = antiderivative_in_last(c);
    CHECK(std::abs(q.coefficient(MultiIndex{}) - 1.0) < 1e-15);
    CHECK(std::abs(q.coefficient(MultiIndex{1}) - 1.0 / std::sqrt(3.0)) < 1e-15);

    // finite-difference round trip on a random 2d polynomial
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SparsePolynomial p(2);
    for (unsigned a = 0; a <= 3; ++a)
        for (unsigned b = 0; b <= 5; ++b) p.add(MultiIndex{a, b}, u(gen));
    auto anti = antiderivative_in_last(p);
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
        const double x0 = u(gen);
        const double t = 0.99 * u(gen);
        const double fd = (anti(std::vector<double>{x0, t + h}) - anti(std::vector<double>{x0, t - h})) / (2 * h);
        CHECK(std::abs(fd - p(std::vector<double>{x0, t})) < 1e-6);
        CHECK(std::abs(anti(std::vector<double>{x0, -1.0})) < 1e-13);
    }
}

TEST_CASE("slice_last matches full evaluation") {
    SparsePolynomial p(3);
    p.add(MultiIndex{1, 0, 2}, 0.5);
    p.add(MultiIndex{0, 2, 1}, -0.25);
    p.add(MultiIndex{}, 0.1);
    const std::vector<double> z{0.3, -0.7};
    const auto coeffs = p.slice_last(z);
    for (double t : {-1.0, -0.2, 0.6, 1.0}) {
        CHECK(std::abs(eval_series(coeffs, t) - p(std::vector<double>{z[0], z[1], t})) < 1e-14);
    }
}

TEST_CASE("JSON serialization is graded-lex ordered and round-trips") {
    SparsePolynomial p(2);
    p.add(MultiIndex{0, 2}, 3.0);
    p.add(MultiIndex{1}, 2.0);
    p.add(MultiIndex{}, 1.0);
    nlohmann::json j = p;
    CHECK(j["dim"] == 2);
    CHECK(j["terms"][0]["nu"].empty());
    CHECK(j["terms"][1]["nu"] == nlohmann::json::array({1}));
    CHECK(j["terms"][2]["nu"] == nlohmann::json::array({0, 2}));
    auto back = j.get<SparsePolynomial>();
    CHECK(back.terms() == p.terms());
}
