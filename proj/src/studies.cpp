#include "krt/studies.hpp"

#include "krt/errors.hpp"
#include "krt/parallel.hpp"
#include "krt/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace krt::studies {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-component sup errors of value and diagonal derivative.
struct ComponentErrors {
    std::vector<double> value;
    std::vector<double> diag;
};

void accumulate(ComponentErrors& e, const transport::MapEval& exact, const transport::MapEval& approx) {
    for (std::size_t k = 0; k < exact.value.size(); ++k) {
        e.value[k] = std::max(e.value[k], std::abs(exact.value[k] - approx.value[k]));
        e.diag[k] = std::max(e.diag[k], std::abs(exact.diag[k] - approx.diag[k]));
    }
}

ComponentErrors errors_at(const transport::ExactTransport& exact, const approx::ApproxTransport& approx,
                          const std::vector<std::vector<double>>& points) {
    const std::size_t d = exact.dim();
    std::vector<ComponentErrors> local(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const auto& x = points[i];
        local[i] = {std::vector<double>(x.size(), 0.0), std::vector<double>(x.size(), 0.0)};
        accumulate(local[i], exact.evaluate(x), approx.evaluate(x));
    });
    ComponentErrors total{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& e : local) {
        for (std::size_t k = 0; k < e.value.size(); ++k) {
            total.value[k] = std::max(total.value[k], e.value[k]);
            total.diag[k] = std::max(total.diag[k], e.diag[k]);
        }
    }
    return total;
}

// Sup-norm sample: the seeded cloud plus, per fitted component, the nodes
// of its projection grid (k-dimensional prefixes).
ComponentErrors measure_errors(const transport::ExactTransport& exact, const approx::ApproxTransport& approx,
                               const SweepSettings& settings, std::size_t& count) {
    const std::size_t d = exact.dim();
    std::vector<std::vector<double>> points = rng::CounterRng(settings.seed, 0).cube_points(settings.sample_points, d);
    if (settings.grid_points) {
        for (std::size_t k = 1; k <= d; ++k) {
            const auto& lambda = approx.info()[k - 1].lambda;
            if (lambda.empty()) continue;
            const auto grid = poly::projection_grid(lambda.members, k, settings.fit.grid);
            std::vector<double> z(k);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                grid.node(i, z);
                points.push_back(z);
            }
        }
    }
    count = points.size();
    return errors_at(exact, approx, points);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

SweepRecord base_record(const approx::ApproxTransport& a, double eps) {
    SweepRecord r;
    r.epsilon = eps;
    r.n_eps = a.degrees_of_freedom();
    r.k_eff = a.effective_dimension();
    for (const auto& info : a.info()) r.cardinalities.push_back(info.lambda.size());
    r.distances.hellinger = r.distances.tv = r.distances.tv_oversampled = r.distances.kl = r.distances.w1 = kNaN;
    r.distances.w1_exact = false;
    return r;
}

void require_descending(std::span<const double> eps) {
    if (eps.empty()) throw ConfigError("epsilon list must not be empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0 && eps[i] < 1.0)) throw ConfigError("epsilon values must lie in (0,1)");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw ConfigError("epsilon list must be strictly descending");
    }
}

RateFit fit_or_degenerate(std::span<const SweepRecord> records, bool derivative, RateModel model, std::size_t dim) {
    std::vector<double> n, err;
    for (const auto& r : records) {
        n.push_back(static_cast<double>(r.n_eps));
        err.push_back(derivative ? r.sup_err_dT : r.sup_err_T);
    }
    try {
        if (std::all_of(err.begin(), err.end(), [](double e) { return e <= kMapErrorFloor; })) {
            throw NumericalError("errors at the map accuracy floor");
        }
        return fit_rate(n, err, model, dim);
    } catch (const NumericalError&) {
        RateFit f;
        f.model = model == RateModel::exponential ? "exponential" : "algebraic";
        f.status = "degenerate";
        f.slope = f.intercept = f.r_squared = kNaN;
        return f;
    }
}

}  // namespace

RateFit fit_rate(std::span<const double> n, std::span<const double> err, RateModel model, std::size_t dim) {
    if (n.size() != err.size()) throw std::invalid_argument("fit_rate: size mismatch");
    if (dim == 0) throw std::invalid_argument("fit_rate: dim must be positive");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(err[i] > kErrorFloor) || !std::isfinite(err[i]) || !(n[i] > 0.0)) continue;
        xs.push_back(model == RateModel::exponential ? std::pow(n[i], 1.0 / static_cast<double>(dim))
                                                      : std::log(n[i]));
        ys.push_back(std::log(err[i]));
    }
    if (xs.size() < 3) throw NumericalError("fit_rate: fewer than three points above the error floor");
    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    RateFit f;
    f.model = model == RateModel::exponential ? "exponential" : "algebraic";
    f.points = xs.size();
    if (sxx == 0.0) throw NumericalError("fit_rate: all abscissae coincide");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;
    return f;
}

RateFit fit_rate(std::span<const SweepRecord> records, RateModel model, std::size_t dim) {
    std::vector<double> n, err;
    for (const auto& r : records) {
        n.push_back(static_cast<double>(r.n_eps));
        err.push_back(r.sup_err_T);
    }
    return fit_rate(n, err, model, dim);
}

double beta_theory(const index::WeightVector& xi) {
    double log_prod = 0.0;
    std::size_t d = 0;
    for (double v : xi.values()) {
        if (std::isinf(v)) continue;
        log_prod += std::log(std::log(v));
        ++d;
    }
    if (d == 0) return kNaN;
    return std::exp((std::lgamma(static_cast<double>(d)) + log_prod) / static_cast<double>(d));
}

index::WeightVector default_xi(std::span<const double> b, double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    std::vector<double> xi(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        if (b[j] < 0.0 || !std::isfinite(b[j])) throw ConfigError("anisotropy entries must be finite and >= 0");
        xi[j] = b[j] == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 + alpha / b[j];
    }
    return index::WeightVector(std::move(xi));
}

ConvergenceResult convergence_study(const transport::ExactTransport& exact, const index::WeightVector& xi,
                                    std::span<const double> epsilons, const SweepSettings& settings) {
    require_descending(epsilons);
    const std::size_t d = exact.dim();
    ConvergenceResult out;
    for (double eps : epsilons) {
        const auto start = std::chrono::steady_clock::now();
        const auto a = approx::build_approx_transport(exact, xi, eps, settings.fit);
        auto r = base_record(a, eps);
        const auto e = measure_errors(exact, a, settings, r.sample_points);
        r.sup_err_T = *std::max_element(e.value.begin(), e.value.end());
        r.sup_err_dT = *std::max_element(e.diag.begin(), e.diag.end());
        if (settings.distances) {
            const transport::InverseMap s(a);
            r.distances = metrics::pullback_distance(s, exact.reference(), exact.target(), settings.distance);
            r.has_distances = true;
        }
        if (settings.timing) r.wall_ms = elapsed_ms(start);
        out.records.push_back(std::move(r));
    }
    out.fit = fit_or_degenerate(out.records, false, RateModel::exponential, d);
    out.fit_dT = fit_or_degenerate(out.records, true, RateModel::exponential, d);
    out.beta = beta_theory(xi);
    return out;
}

std::vector<double> truncation_coefficients(double amplitude, double decay, std::size_t d) {
    if (d == 0) throw ConfigError("d_max must be positive");
    if (!(amplitude > 0.0) || !(decay > 0.0)) throw ConfigError("amplitude and decay must be positive");
    std::vector<double> c(d);
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        c[j] = amplitude * std::pow(static_cast<double>(j + 1), -decay);
        sum += c[j];
    }
    if (!(sum < 1.0)) throw ConfigError("truncation coefficients must satisfy sum |c_j| < 1");
    return c;
}

TruncationResult truncation_study(const TruncationSettings& settings, std::span<const double> epsilons) {
    require_descending(epsilons);
    const auto c = truncation_coefficients(settings.amplitude, settings.decay, settings.d_max);
    const auto rho = density::uniform(settings.d_max);
    const auto pi = density::linear(c);
    transport::ExactSettings es;
    es.cdf_order = settings.cdf_order;
    const transport::ExactTransport exact(rho, pi, es);
    const auto xi = index::xi_from_anisotropy(pi.anisotropy(), settings.alpha);
    const bool with_distances = settings.sweep.distances && settings.d_max <= 4;

    TruncationResult out;
    for (double eps : epsilons) {
        const auto start = std::chrono::steady_clock::now();
        const auto a = approx::build_approx_transport(exact, xi, eps, settings.sweep.fit);
        auto r = base_record(a, eps);
        const auto e = measure_errors(exact, a, settings.sweep, r.sample_points);
        r.sup_err_T = r.sup_err_dT = 0.0;
        for (std::size_t k = 0; k < e.value.size(); ++k) {
            r.sup_err_T += e.value[k];
            r.sup_err_dT += e.diag[k];
        }
        if (with_distances) {
            const transport::InverseMap s(a);
            r.distances = metrics::pullback_distance(s, rho, pi, settings.sweep.distance);
            r.has_distances = true;
        }
        if (settings.sweep.timing) r.wall_ms = elapsed_ms(start);
        out.records.push_back(std::move(r));
    }
    out.fit = fit_or_degenerate(out.records, false, RateModel::algebraic, 1);
    out.fit_dT = fit_or_degenerate(out.records, true, RateModel::algebraic, 1);
    return out;
}

std::vector<std::vector<double>> pushforward_samples(const transport::TriangularMap& map, std::size_t n,
                                                     std::uint64_t seed) {
    auto points = rng::CounterRng(seed, 1).cube_points(n, map.dim());
    parallel_for(n, [&](std::size_t i) { points[i] = map(points[i]); });
    return points;
}

PosteriorReport posterior_demo(const PosteriorSettings& s) {
    if (s.d == 0 || s.d > 4) throw ConfigError("posterior demo requires 1 <= d <= 4");
    if (s.samples < 2) throw ConfigError("posterior demo needs at least two samples");
    if (!(s.epsilon > 0.0 && s.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    const auto pi = density::gaussian_posterior(s.m, s.d, s.a, s.observation, s.sigma);
    const auto rho = density::uniform(s.d);
    const transport::ExactTransport exact(rho, pi);
    auto xi = default_xi(pi.anisotropy(), s.alpha);
    auto map = approx::build_approx_transport(exact, xi, s.epsilon, s.fit);

    PosteriorReport r{std::move(map), std::move(xi), {}, {}, {}, {}, {}, false};
    const transport::InverseMap inv(r.map);
    r.distances = metrics::pullback_distance(inv, rho, pi, s.distance);
    r.samples = pushforward_samples(r.map, s.samples, s.seed);

    const double n = static_cast<double>(s.samples);
    r.sample_mean.assign(s.d, 0.0);
    r.sample_std.assign(s.d, 0.0);
    for (const auto& y : r.samples)
        for (std::size_t j = 0; j < s.d; ++j) r.sample_mean[j] += y[j];
    for (auto& v : r.sample_mean) v /= n;
    for (const auto& y : r.samples)
        for (std::size_t j = 0; j < s.d; ++j) r.sample_std[j] += (y[j] - r.sample_mean[j]) * (y[j] - r.sample_mean[j]);
    for (auto& v : r.sample_std) v = std::sqrt(v / (n - 1.0));

    const quadrature::TensorGrid grid(s.d, metrics::default_distance_order(s.d));
    r.quadrature_mean.assign(s.d, 0.0);
    std::vector<double> x(s.d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.node(i, x) * pi(x);
        for (std::size_t j = 0; j < s.d; ++j) r.quadrature_mean[j] += w * x[j];
    }
    r.mean_within_band = true;
    for (std::size_t j = 0; j < s.d; ++j) {
        if (std::abs(r.sample_mean[j] - r.quadrature_mean[j]) > 3.0 * r.sample_std[j] / std::sqrt(n)) {
            r.mean_within_band = false;
        }
    }
    return r;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, std::span<const SweepRecord> records) {
    os << "epsilon,N_eps,k_eff,sup_err_T,sup_err_dT,hellinger,tv,kl,w1,w1_exact,wall_ms\n";
    for (const auto& r : records) {
        const auto& d = r.distances;
        os << format_double(r.epsilon) << ',' << r.n_eps << ',' << r.k_eff << ',' << format_double(r.sup_err_T) << ','
           << format_double(r.sup_err_dT) << ',' << format_double(d.hellinger) << ',' << format_double(d.tv) << ','
           << format_double(d.kl) << ',' << format_double(d.w1) << ',' << (r.has_distances && d.w1_exact ? 1 : 0)
           << ',' << format_double(r.wall_ms) << '\n';
    }
}

void to_json(nlohmann::json& j, const SweepRecord& r) {
    j = {{"epsilon", r.epsilon},
         {"N_eps", r.n_eps},
         {"k_eff", r.k_eff},
         {"cardinalities", r.cardinalities},
         {"sup_err_T", r.sup_err_T},
         {"sup_err_dT", r.sup_err_dT},
         {"sample_points", r.sample_points},
         {"wall_ms", r.wall_ms}};
    if (r.has_distances) {
        j["distances"] = r.distances;
    } else {
        j["distances"] = nullptr;
    }
}

void to_json(nlohmann::json& j, const RateFit& f) {
    j = {{"model", f.model}, {"status", f.status}, {"points", f.points}};
    if (f.status == "ok") {
        j["slope"] = f.slope;
        j["intercept"] = f.intercept;
        j["r_squared"] = f.r_squared;
    }
}

void to_json(nlohmann::json& j, const PosteriorReport& r) {
    nlohmann::json xi = nlohmann::json::array();
    for (double v : r.xi.values()) {
        if (std::isinf(v)) {
            xi.push_back(nullptr);
        } else {
            xi.push_back(v);
        }
    }
    j = {{"xi", xi},
         {"N_eps", r.map.degrees_of_freedom()},
         {"distances", r.distances},
         {"samples", r.samples.size()},
         {"sample_mean", r.sample_mean},
         {"sample_std", r.sample_std},
         {"quadrature_mean", r.quadrature_mean},
         {"mean_within_band", r.mean_within_band}};
}

}  // namespace krt::studies
