#include "krt/approx.hpp"

#include "krt/errors.hpp"
#include "krt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

namespace krt::approx {

RationalComponent::RationalComponent(std::size_t k, poly::SparsePolynomial p) : k_(k), p_(std::move(p)) {
    if (k_ == 0) throw std::invalid_argument("RationalComponent: k must be positive");
    if (p_.dim() != k_) {
        if (!p_.empty()) throw std::invalid_argument("RationalComponent: polynomial dimension must equal k");
        p_ = poly::SparsePolynomial(k_);
    }
}

double RationalComponent::Slice::partial(double t) const {
    const double scale = t + 1.0;
    const double half = 0.5 * scale;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule_->size(); ++i) {
        const double s = -1.0 + half * (rule_->nodes[i] + 1.0);
        const double v = 1.0 + poly::eval_series(coeffs_, s);
        sum += rule_->weights[i] * v * v;
    }
    return scale * sum;
}

double RationalComponent::Slice::value(double t) const {
    if (identity_) return t;
    if (t <= -1.0) return -1.0;
    if (t >= 1.0) return 1.0;
    return -1.0 + 2.0 * partial(t) / c_;
}

double RationalComponent::Slice::derivative(double t) const {
    if (identity_) return 1.0;
    const double v = 1.0 + poly::eval_series(coeffs_, t);
    return 2.0 * v * v / c_;
}

double RationalComponent::Slice::invert(double y, const transport::RootSettings& settings) const {
    if (identity_) return y;
    return transport::solve_monotone([this](double t) { return std::pair{value(t), derivative(t)}; }, y, -1.0, 1.0,
                                     settings);
}

RationalComponent::Slice RationalComponent::slice(std::span<const double> prefix) const {
    Slice s;
    if (p_.empty()) return s;
    s.identity_ = false;
    s.coeffs_ = p_.slice_last(prefix.first(k_ - 1));
    // (1+q)^2 has degree 2m; an (m+1)-point rule integrates it exactly
    s.rule_ = &quadrature::gauss_legendre(s.coeffs_.size());
    s.c_ = s.partial(1.0);
    if (!(s.c_ > kMinNormalizer) || !std::isfinite(s.c_)) {
        throw NumericalError("RationalComponent: degenerate normalizer c_" + std::to_string(k_) + " = " +
                             std::to_string(s.c_));
    }
    return s;
}

double RationalComponent::operator()(std::span<const double> x) const {
    return slice(x.first(k_ - 1)).value(x[k_ - 1]);
}

double RationalComponent::derivative(std::span<const double> x) const {
    return slice(x.first(k_ - 1)).derivative(x[k_ - 1]);
}

double RationalComponent::invert(std::span<const double> prefix, double y) const {
    return slice(prefix.first(k_ - 1)).invert(y);
}

ApproxTransport::ApproxTransport(double epsilon, index::WeightVector xi, std::vector<RationalComponent> components,
                                 std::vector<ComponentInfo> info)
    : epsilon_(epsilon), xi_(std::move(xi)), components_(std::move(components)), info_(std::move(info)) {
    for (std::size_t k = 0; k < components_.size(); ++k) {
        if (components_[k].k() != k + 1) throw std::invalid_argument("ApproxTransport: components out of order");
    }
    if (info_.size() != components_.size()) info_.resize(components_.size());
}

std::size_t ApproxTransport::degrees_of_freedom() const {
    std::size_t n = 0;
    for (const auto& i : info_) n += i.lambda.size();
    return n;
}

std::size_t ApproxTransport::effective_dimension() const {
    std::size_t k_eff = 0;
    for (std::size_t k = 0; k < info_.size(); ++k) {
        if (!info_[k].lambda.empty()) k_eff = k + 1;
    }
    return k_eff;
}

transport::MapEval ApproxTransport::evaluate(std::span<const double> x) const {
    if (x.size() > dim()) throw std::invalid_argument("ApproxTransport: point dimension exceeds map dimension");
    transport::MapEval out;
    out.value.resize(x.size());
    out.diag.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const auto s = components_[k].slice(x.first(k));
        out.value[k] = s.value(x[k]);
        out.diag[k] = s.derivative(x[k]);
    }
    return out;
}

std::vector<double> ApproxTransport::inverse(std::span<const double> y) const {
    if (y.size() > dim()) throw std::invalid_argument("ApproxTransport: point dimension exceeds map dimension");
    std::vector<double> x;
    x.reserve(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) x.push_back(components_[k].slice(x).invert(y[k]));
    return x;
}

namespace {

std::atomic<std::size_t> g_clamps{0};
constexpr double kDerivativeClamp = 1e-14;

double sqrt_shift(double derivative) {
    if (!(derivative > kDerivativeClamp)) {
        g_clamps.fetch_add(1, std::memory_order_relaxed);
        derivative = kDerivativeClamp;
    }
    return std::sqrt(derivative) - 1.0;
}

// Depth-first walk over the tensor grid, first coordinate outermost, so
// T_1..T_{j} are computed once per distinct node prefix.
void walk(const transport::ExactTransport& exact, const quadrature::TensorGrid& grid, std::size_t depth,
          std::vector<double>& x, std::vector<double>& y, double*& out) {
    const std::size_t k = grid.dim();
    const auto& rule = grid.rule(depth);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        x[depth] = rule.nodes[i];
        const auto s = exact.step(depth + 1, std::span<const double>(x).first(depth + 1), y);
        if (depth + 1 == k) {
            *out++ = sqrt_shift(s.derivative);
        } else {
            y.push_back(s.value);
            walk(exact, grid, depth + 1, x, y, out);
            y.pop_back();
        }
    }
}

}  // namespace

std::size_t sqrt_shift_clamp_count() { return g_clamps.load(); }

std::function<double(std::span<const double>)> sqrt_shift_target(const transport::ExactTransport& exact,
                                                                 std::size_t k) {
    return [&exact, k](std::span<const double> x) { return sqrt_shift(exact.diag_derivative(k, x)); };
}

std::vector<double> sqrt_shift_on_grid(const transport::ExactTransport& exact, std::size_t k,
                                       const quadrature::TensorGrid& grid) {
    if (grid.dim() != k || k == 0) throw std::invalid_argument("sqrt_shift_on_grid: grid dimension must equal k");
    std::vector<double> values(grid.size());
    const auto& outer = grid.rule(0);
    const std::size_t block = grid.size() / outer.size();
    parallel_for(outer.size(), [&](std::size_t i) {
        std::vector<double> x(k, 0.0);
        std::vector<double> y;
        y.reserve(k);
        x[0] = outer.nodes[i];
        const auto s = exact.step(1, std::span<const double>(x).first(1), y);
        double* out = values.data() + i * block;
        if (k == 1) {
            *out = sqrt_shift(s.derivative);
            return;
        }
        y.push_back(s.value);
        walk(exact, grid, 1, x, y, out);
    });
    return values;
}

namespace {

// Every distinct x_{[k-1]} of the grid must give a usable normalizer.
bool slices_nondegenerate(const RationalComponent& comp, const quadrature::TensorGrid& grid) {
    const std::size_t k = comp.k();
    if (k == 1) {
        try {
            (void)comp.slice({});
        } catch (const NumericalError&) {
            return false;
        }
        return true;
    }
    std::vector<quadrature::Rule> leading(grid.rules().begin(), grid.rules().begin() + static_cast<std::ptrdiff_t>(k - 1));
    const quadrature::TensorGrid prefixes(std::move(leading));
    std::vector<double> z(k - 1);
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        prefixes.node(i, z);
        try {
            (void)comp.slice(z);
        } catch (const NumericalError&) {
            return false;
        }
    }
    return true;
}

}  // namespace

RationalComponent fit_component(const transport::ExactTransport& exact, std::size_t k, const index::IndexSet& lambda,
                                const FitSettings& settings, bool* fallback) {
    if (fallback) *fallback = false;
    if (lambda.empty()) return RationalComponent(k, poly::SparsePolynomial(k));
    const auto grid = poly::projection_grid(lambda.members, k, settings.grid);
    const auto values = sqrt_shift_on_grid(exact, k, grid);
    RationalComponent comp(k, poly::project_values(values, lambda.members, grid));
    if (!slices_nondegenerate(comp, grid)) {
        if (fallback) *fallback = true;
        return RationalComponent(k, poly::SparsePolynomial(k));
    }
    return comp;
}

ApproxTransport build_approx_transport(const transport::ExactTransport& exact, const index::WeightVector& xi,
                                       double epsilon, const FitSettings& settings) {
    const std::size_t d = exact.dim();
    if (xi.size() != d) throw ConfigError("weight vector length must equal the transport dimension");
    std::vector<RationalComponent> comps;
    std::vector<ComponentInfo> info;
    comps.reserve(d);
    info.reserve(d);
    for (std::size_t k = 1; k <= d; ++k) {
        ComponentInfo ci;
        ci.lambda = index::enumerate_lambda(xi.prefix(k), epsilon);
        comps.push_back(fit_component(exact, k, ci.lambda, settings, &ci.fallback));
        info.push_back(std::move(ci));
    }
    return ApproxTransport(epsilon, xi, std::move(comps), std::move(info));
}

void to_json(nlohmann::json& j, const ApproxTransport& t) {
    nlohmann::json xi = nlohmann::json::array();
    for (double v : t.xi().values()) {
        if (std::isinf(v)) {
            xi.push_back(nullptr);
        } else {
            xi.push_back(v);
        }
    }
    nlohmann::json comps = nlohmann::json::array();
    for (std::size_t k = 0; k < t.dim(); ++k) {
        const auto& comp = t.components()[k];
        const auto& ci = t.info()[k];
        nlohmann::json lambda = nlohmann::json::array();
        nlohmann::json coeffs = nlohmann::json::array();
        for (const auto& nu : ci.lambda.members) {
            lambda.push_back(nu.padded(k + 1));
            if (!comp.is_identity()) coeffs.push_back(comp.polynomial().coefficient(nu));
        }
        comps.push_back({{"k", k + 1}, {"lambda", lambda}, {"p_coeffs", coeffs}, {"fallback", ci.fallback}});
    }
    j = {{"epsilon", t.epsilon()}, {"xi", xi}, {"components", comps}};
}

ApproxTransport approx_from_json(const nlohmann::json& j) {
    try {
        const double epsilon = j.at("epsilon").get<double>();
        std::vector<double> xi;
        for (const auto& v : j.at("xi")) xi.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
        std::vector<RationalComponent> comps;
        std::vector<ComponentInfo> info;
        for (const auto& c : j.at("components")) {
            const auto k = c.at("k").get<std::size_t>();
            ComponentInfo ci;
            ci.lambda.k = k;
            ci.lambda.epsilon = epsilon;
            ci.fallback = c.value("fallback", false);
            poly::SparsePolynomial p(k);
            const auto& lambda = c.at("lambda");
            const auto& coeffs = c.at("p_coeffs");
            if (!coeffs.empty() && coeffs.size() != lambda.size()) {
                throw ConfigError("approx transport: p_coeffs must match lambda in length");
            }
            for (std::size_t i = 0; i < lambda.size(); ++i) {
                auto nu = lambda[i].get<poly::MultiIndex>();
                if (!coeffs.empty()) p.add(nu, coeffs[i].get<double>());
                ci.lambda.members.push_back(std::move(nu));
            }
            std::sort(ci.lambda.members.begin(), ci.lambda.members.end(), poly::GradedLex{});
            comps.emplace_back(k, std::move(p));
            info.push_back(std::move(ci));
        }
        return ApproxTransport(epsilon, index::WeightVector(std::move(xi)), std::move(comps), std::move(info));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed approx transport JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("malformed approx transport JSON: ") + e.what());
    }
}

}  // namespace krt::approx
