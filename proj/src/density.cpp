#include "krt/density.hpp"

#include "krt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace krt::density {

Density::Density(std::string family, std::size_t dim, Fn evaluate, MarginalFn marginal_oracle,
                 std::vector<double> anisotropy, nlohmann::json params)
    : family_(std::move(family)),
      dim_(dim),
      evaluate_(std::move(evaluate)),
      oracle_(std::move(marginal_oracle)),
      anisotropy_(std::move(anisotropy)),
      params_(std::move(params)) {
    if (dim_ == 0) throw ConfigError("density dimension must be positive");
    if (!oracle_ && dim_ > kMaxQuadratureDim) {
        throw ConfigError("density family '" + family_ + "' needs quadrature marginals; dimension " +
                          std::to_string(dim_) + " exceeds the limit of " +
                          std::to_string(kMaxQuadratureDim));
    }
    if (anisotropy_.empty()) anisotropy_.assign(dim_, 0.0);
    if (anisotropy_.size() != dim_) throw ConfigError("anisotropy length must equal the dimension");
}

void Density::set_marginal_order(std::size_t n) {
    if (n == 0) throw ConfigError("marginal_order must be positive");
    marginal_order_ = n;
}

nlohmann::json Density::spec() const {
    nlohmann::json j = params_;
    j["family"] = family_;
    if (!oracle_) j["marginal_order"] = marginal_order_;
    return j;
}

Density uniform(std::size_t d) {
    return Density(
        "uniform", d, [](std::span<const double>) { return 1.0; },
        [](std::size_t, std::span<const double>) { return 1.0; }, std::vector<double>(d, 0.0),
        {{"dim", d}});
}

Density linear(std::vector<double> c) {
    if (c.empty()) throw ConfigError("linear density needs at least one coefficient");
    double total = 0.0;
    for (double v : c) {
        if (!std::isfinite(v)) throw ConfigError("linear density coefficients must be finite");
        total += std::abs(v);
    }
    if (!(total < 1.0)) {
        throw ConfigError("linear density requires sum |c_j| < 1 (got " + std::to_string(total) + ")");
    }
    std::vector<double> b(c.size());
    std::transform(c.begin(), c.end(), b.begin(), [](double v) { return std::abs(v); });
    const std::size_t d = c.size();
    auto affine = [c](std::size_t k, std::span<const double> x) {
        double s = 1.0;
        for (std::size_t j = 0; j < k; ++j) s += c[j] * x[j];
        return s;
    };
    return Density(
        "linear", d, [affine, d](std::span<const double> x) { return affine(d, x); },
        // odd moments of mu vanish, so integrating out y_j just drops c_j y_j
        [affine](std::size_t k, std::span<const double> x) { return affine(k, x); }, std::move(b),
        {{"c", c}});
}

Density gaussian_posterior(std::size_t m, std::size_t d, std::vector<double> a, std::vector<double> obs,
                           double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("gaussian_posterior: sigma must be positive");
    if (m == 0 || d == 0) throw ConfigError("gaussian_posterior: empty forward matrix");
    if (a.size() != m * d) throw ConfigError("gaussian_posterior: A must be m x d");
    if (obs.size() != m) throw ConfigError("gaussian_posterior: observation length must equal rows of A");
    if (d > kMaxQuadratureDim) {
        throw ConfigError("gaussian_posterior: dimension " + std::to_string(d) + " exceeds the limit of " +
                          std::to_string(kMaxQuadratureDim));
    }
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    auto misfit = [a, obs, m, d, inv2s2](std::span<const double> y) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double r = -obs[i];
            for (std::size_t j = 0; j < d; ++j) r += a[i * d + j] * y[j];
            s += r * r;
        }
        return s * inv2s2;
    };
    // log Z with a shift by the smallest misfit on the grid, so peaked
    // posteriors do not underflow.
    const quadrature::TensorGrid grid(d, 40);
    std::vector<double> x(d);
    std::vector<double> phi(grid.size());
    double phi_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.node(i, x);
        phi[i] = misfit(x);
        phi_min = std::min(phi_min, phi[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.node(i, x);
        z += w * std::exp(-(phi[i] - phi_min));
    }
    if (!std::isfinite(z) || !(z > 0.0)) throw NumericalError("gaussian_posterior: normalization failed");
    const double log_z = std::log(z) - phi_min;

    std::vector<double> b(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a[i * d + j] * a[i * d + j];
        b[j] = std::sqrt(s);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(std::vector<double>(a.begin() + static_cast<std::ptrdiff_t>(i * d),
                                           a.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
    }
    nlohmann::json params = {{"A", rows}, {"observation", obs}, {"sigma", sigma}};
    return Density(
        "gaussian_posterior", d, [misfit, log_z](std::span<const double> y) { return std::exp(-misfit(y) - log_z); },
        {}, std::move(b), std::move(params));
}

namespace {

std::vector<double> number_list(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(std::string(what) + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

void check_keys(const nlohmann::json& spec, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : spec.items()) {
        if (key == "family" || key == "marginal_order") continue;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError("unknown key '" + key + "' in density specification");
        }
    }
}

}  // namespace

Density from_spec(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("family") || !spec["family"].is_string()) {
        throw ConfigError("density specification needs a string 'family'");
    }
    const auto family = spec["family"].get<std::string>();
    auto require = [&](const char* key) -> const nlohmann::json& {
        if (!spec.contains(key)) throw ConfigError("density '" + family + "' requires key '" + key + "'");
        return spec[key];
    };
    Density out = [&]() {
        if (family == "uniform") {
            check_keys(spec, {"dim"});
            const auto& d = require("dim");
            if (!d.is_number_unsigned() || d.get<std::size_t>() == 0) {
                throw ConfigError("uniform: 'dim' must be a positive integer");
            }
            return uniform(d.get<std::size_t>());
        }
        if (family == "linear") {
            check_keys(spec, {"c"});
            return linear(number_list(require("c"), "linear: 'c'"));
        }
        if (family == "gaussian_posterior") {
            check_keys(spec, {"A", "observation", "sigma"});
            const auto& rows = require("A");
            if (!rows.is_array() || rows.empty()) throw ConfigError("gaussian_posterior: 'A' must be a nonempty matrix");
            std::vector<double> a;
            std::size_t d = 0;
            for (const auto& row : rows) {
                auto r = number_list(row, "gaussian_posterior: rows of 'A'");
                if (d == 0) d = r.size();
                if (r.size() != d || d == 0) throw ConfigError("gaussian_posterior: 'A' rows must have equal nonzero length");
                a.insert(a.end(), r.begin(), r.end());
            }
            const auto& sigma = require("sigma");
            if (!sigma.is_number()) throw ConfigError("gaussian_posterior: 'sigma' must be a number");
            return gaussian_posterior(rows.size(), d, std::move(a),
                                      number_list(require("observation"), "gaussian_posterior: 'observation'"),
                                      sigma.get<double>());
        }
        throw ConfigError("unknown density family '" + family + "'");
    }();
    if (spec.contains("marginal_order")) {
        const auto& n = spec["marginal_order"];
        if (!n.is_number_integer() || n.get<long long>() <= 0) throw ConfigError("marginal_order must be a positive integer");
        out.set_marginal_order(n.get<std::size_t>());
    }
    return out;
}

double marginal_hat_quadrature(const Density& f, std::size_t k, std::span<const double> x, std::size_t order) {
    const std::size_t d = f.dim();
    if (k > d || x.size() < k) throw std::invalid_argument("marginal_hat: need 0 <= k <= d and |x| >= k");
    if (k == d) return f(x.first(d));
    const quadrature::Rule& rule = quadrature::gauss_legendre(order);
    const std::size_t tail = d - k;
    std::vector<double> point(d);
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), point.begin());
    std::vector<std::size_t> idx(tail, 0);
    double sum = 0.0;
    for (;;) {
        double w = 1.0;
        for (std::size_t j = 0; j < tail; ++j) {
            point[k + j] = rule.nodes[idx[j]];
            w *= rule.weights[idx[j]];
        }
        sum += w * f(point);
        std::size_t j = tail;
        while (j > 0) {
            --j;
            if (++idx[j] < rule.size()) break;
            idx[j] = 0;
            if (j == 0) return sum;
        }
    }
}

double marginal_hat(const Density& f, std::size_t k, std::span<const double> x) {
    if (k > f.dim() || x.size() < k) throw std::invalid_argument("marginal_hat: need 0 <= k <= d and |x| >= k");
    if (f.has_marginal_oracle()) return f.marginal_oracle()(k, x.first(k));
    return marginal_hat_quadrature(f, k, x, f.marginal_order());
}

double conditional(const Density& f, std::size_t k, std::span<const double> x) {
    if (k == 0 || k > f.dim()) throw std::invalid_argument("conditional: need 1 <= k <= d");
    const double den = marginal_hat(f, k - 1, x.first(k - 1));
    if (!(den > 0.0)) throw NumericalError("conditional: non-positive marginal in the denominator");
    return marginal_hat(f, k, x.first(k)) / den;
}

}  // namespace krt::density
