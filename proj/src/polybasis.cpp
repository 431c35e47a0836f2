#include "krt/polybasis.hpp"

#include "krt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

namespace krt::poly {

MultiIndex::MultiIndex(std::initializer_list<unsigned> exps) : MultiIndex(std::vector<unsigned>(exps)) {}

MultiIndex::MultiIndex(std::vector<unsigned> exps) : exps_(std::move(exps)) {
    while (!exps_.empty() && exps_.back() == 0) exps_.pop_back();
}

unsigned MultiIndex::total() const {
    unsigned s = 0;
    for (unsigned e : exps_) s += e;
    return s;
}

std::vector<unsigned> MultiIndex::padded(std::size_t k) const {
    std::vector<unsigned> out(std::max(k, exps_.size()), 0u);
    std::copy(exps_.begin(), exps_.end(), out.begin());
    return out;
}

bool GradedLex::operator()(const MultiIndex& a, const MultiIndex& b) const {
    const unsigned ta = a.total();
    const unsigned tb = b.total();
    if (ta != tb) return ta < tb;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t j = 0; j < n; ++j) {
        if (a[j] != b[j]) return a[j] > b[j];
    }
    return false;
}

double legendre(unsigned n, double x) {
    double p0 = 1.0;
    if (n == 0) return 1.0;
    double p1 = x;
    for (unsigned j = 2; j <= n; ++j) {
        const double jj = j;
        const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
        p0 = p1;
        p1 = p2;
    }
    return std::sqrt(2.0 * n + 1.0) * p1;
}

void legendre_values(double x, std::span<double> out) {
    if (out.empty()) return;
    // Recurrence on classical P_n, scaled at the end.
    double p0 = 1.0;
    out[0] = 1.0;
    if (out.size() == 1) return;
    double p1 = x;
    out[1] = std::sqrt(3.0) * x;
    for (std::size_t j = 2; j < out.size(); ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
        p0 = p1;
        p1 = p2;
        out[j] = std::sqrt(2.0 * jj + 1.0) * p2;
    }
}

double sup_norm_bound(const MultiIndex& nu) {
    double b = 1.0;
    for (unsigned e : nu.exponents()) b *= std::sqrt(1.0 + 2.0 * e);
    return b;
}

SparsePolynomial::SparsePolynomial(std::size_t dim, Terms terms) : dim_(dim), terms_(std::move(terms)) {
    for (const auto& [nu, c] : terms_) {
        if (nu.size() > dim_) {
            throw std::invalid_argument("SparsePolynomial: multiindex longer than dimension");
        }
    }
}

void SparsePolynomial::add(const MultiIndex& nu, double c) {
    if (nu.size() > dim_) {
        throw std::invalid_argument("SparsePolynomial::add: multiindex longer than dimension");
    }
    terms_[nu] += c;
}

double SparsePolynomial::coefficient(const MultiIndex& nu) const {
    auto it = terms_.find(nu);
    return it == terms_.end() ? 0.0 : it->second;
}

unsigned SparsePolynomial::max_degree(std::size_t j) const {
    unsigned m = 0;
    for (const auto& [nu, c] : terms_) m = std::max(m, nu[j]);
    return m;
}

double SparsePolynomial::operator()(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw std::invalid_argument("SparsePolynomial: expected point of dimension " +
                                    std::to_string(dim_) + ", got " + std::to_string(x.size()));
    }
    if (terms_.empty()) return 0.0;
    std::vector<std::vector<double>> table(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        table[j].resize(max_degree(j) + 1);
        legendre_values(x[j], table[j]);
    }
    double sum = 0.0;
    for (const auto& [nu, c] : terms_) {
        double prod = c;
        for (std::size_t j = 0; j < nu.size(); ++j) prod *= table[j][nu[j]];
        sum += prod;
    }
    return sum;
}

std::vector<double> SparsePolynomial::slice_last(std::span<const double> prefix) const {
    if (dim_ == 0 || prefix.size() + 1 != dim_) {
        throw std::invalid_argument("slice_last: prefix must have dimension dim-1");
    }
    const std::size_t last = dim_ - 1;
    std::vector<double> out(max_degree(last) + 1, 0.0);
    if (terms_.empty()) return out;
    std::vector<std::vector<double>> table(last);
    for (std::size_t j = 0; j < last; ++j) {
        table[j].resize(max_degree(j) + 1);
        legendre_values(prefix[j], table[j]);
    }
    for (const auto& [nu, c] : terms_) {
        double prod = c;
        for (std::size_t j = 0; j < std::min(nu.size(), last); ++j) prod *= table[j][nu[j]];
        out[nu[last]] += prod;
    }
    return out;
}

double eval_series(std::span<const double> coeffs, double t) {
    if (coeffs.empty()) return 0.0;
    double p0 = 1.0;
    double sum = coeffs[0];
    if (coeffs.size() == 1) return sum;
    double p1 = t;
    sum += coeffs[1] * std::sqrt(3.0) * t;
    for (std::size_t j = 2; j < coeffs.size(); ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2.0 * jj - 1.0) * t * p1 - (jj - 1.0) * p0) / jj;
        p0 = p1;
        p1 = p2;
        sum += coeffs[j] * std::sqrt(2.0 * jj + 1.0) * p2;
    }
    return sum;
}

SparsePolynomial antiderivative_in_last(const SparsePolynomial& p) {
    SparsePolynomial q(p.dim());
    if (p.dim() == 0) return q;
    const std::size_t last = p.dim() - 1;
    for (const auto& [nu, c] : p.terms()) {
        auto exps = nu.padded(p.dim());
        const unsigned n = exps[last];
        const double nn = n;
        auto shifted = [&](unsigned m) {
            auto e = exps;
            e[last] = m;
            return MultiIndex(std::move(e));
        };
        if (n == 0) {
            // int_{-1}^x L_0 = x + 1 = L_0 + L_1/sqrt(3)
            q.add(shifted(0), c);
            q.add(shifted(1), c / std::sqrt(3.0));
        } else {
            // int_{-1}^x P_n = (P_{n+1} - P_{n-1})/(2n+1)
            const double s = 1.0 / std::sqrt(2.0 * nn + 1.0);
            q.add(shifted(n + 1), c * s / std::sqrt(2.0 * nn + 3.0));
            q.add(shifted(n - 1), -c * s / std::sqrt(2.0 * nn - 1.0));
        }
    }
    return q;
}

SparsePolynomial project_values(std::span<const double> values, std::span<const MultiIndex> indices,
                                const quadrature::TensorGrid& grid) {
    const std::size_t dim = grid.dim();
    if (values.size() != grid.size()) {
        throw std::invalid_argument("project_values: value count does not match grid");
    }
    std::vector<unsigned> maxdeg(dim, 0);
    for (const auto& nu : indices) {
        if (nu.size() > dim) throw std::invalid_argument("project: multiindex longer than grid dimension");
        for (std::size_t j = 0; j < nu.size(); ++j) maxdeg[j] = std::max(maxdeg[j], nu[j]);
    }
    for (std::size_t j = 0; j < dim; ++j) {
        if (grid.rule(j).size() < maxdeg[j] + 1) {
            throw std::invalid_argument("project: grid order " + std::to_string(grid.rule(j).size()) +
                                        " in coordinate " + std::to_string(j + 1) +
                                        " is below max degree + 1 = " + std::to_string(maxdeg[j] + 1));
        }
    }
    // table[j][i * (maxdeg_j+1) + n] = L_n(node_i of rule j)
    std::vector<std::vector<double>> table(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        const auto& rule = grid.rule(j);
        const std::size_t w = maxdeg[j] + 1;
        table[j].resize(rule.size() * w);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            legendre_values(rule.nodes[i], std::span<double>(table[j].data() + i * w, w));
        }
    }
    std::vector<double> coeffs(indices.size(), 0.0);
    std::vector<std::size_t> idx(dim);
    for (std::size_t node = 0; node < grid.size(); ++node) {
        std::size_t rem = node;
        double w = 1.0;
        for (std::size_t j = dim; j-- > 0;) {
            const std::size_t nj = grid.rule(j).size();
            idx[j] = rem % nj;
            rem /= nj;
            w *= grid.rule(j).weights[idx[j]];
        }
        const double v = values[node];
        if (!std::isfinite(v)) throw NumericalError("project: non-finite function value");
        const double wv = w * v;
        for (std::size_t m = 0; m < indices.size(); ++m) {
            const auto& nu = indices[m];
            double prod = wv;
            for (std::size_t j = 0; j < nu.size(); ++j) {
                prod *= table[j][idx[j] * (maxdeg[j] + 1) + nu[j]];
            }
            coeffs[m] += prod;
        }
    }
    SparsePolynomial p(dim);
    for (std::size_t m = 0; m < indices.size(); ++m) p.add(indices[m], coeffs[m]);
    return p;
}

SparsePolynomial project(const quadrature::Integrand& f, std::span<const MultiIndex> indices,
                         const quadrature::TensorGrid& grid) {
    std::vector<double> values(grid.size());
    std::vector<double> x(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.node(i, x);
        values[i] = f(x);
    }
    return project_values(values, indices, grid);
}

quadrature::TensorGrid projection_grid(std::span<const MultiIndex> indices, std::size_t dim,
                                       const GridRule& rule) {
    if (rule.margin == 0) throw std::invalid_argument("projection_grid: margin must be at least 1");
    std::vector<unsigned> maxdeg(dim, 0);
    for (const auto& nu : indices) {
        for (std::size_t j = 0; j < std::min(dim, nu.size()); ++j) maxdeg[j] = std::max(maxdeg[j], nu[j]);
    }
    std::vector<quadrature::Rule> rules;
    rules.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        const std::size_t n = (rule.collapse_constant_dims && maxdeg[j] == 0) ? 1 : maxdeg[j] + rule.margin;
        rules.push_back(quadrature::gauss_legendre(n));
    }
    return quadrature::TensorGrid(std::move(rules));
}

void to_json(nlohmann::json& j, const MultiIndex& nu) { j = nu.exponents(); }

void from_json(const nlohmann::json& j, MultiIndex& nu) {
    nu = MultiIndex(j.get<std::vector<unsigned>>());
}

void to_json(nlohmann::json& j, const SparsePolynomial& p) {
    auto terms = nlohmann::json::array();
    for (const auto& [nu, c] : p.terms()) terms.push_back({{"nu", nu}, {"coeff", c}});
    j = {{"dim", p.dim()}, {"terms", terms}};
}

void from_json(const nlohmann::json& j, SparsePolynomial& p) {
    SparsePolynomial out(j.at("dim").get<std::size_t>());
    for (const auto& t : j.at("terms")) out.add(t.at("nu").get<MultiIndex>(), t.at("coeff").get<double>());
    p = std::move(out);
}

}  // namespace krt::poly
