#pragma once

#include "krt/approx.hpp"
#include "krt/density.hpp"
#include "krt/indexsets.hpp"
#include "krt/metrics.hpp"
#include "krt/transport.hpp"

#include <cstddef>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace krt::studies {

inline constexpr double kErrorFloor = 1e-12;
// Sweeps whose sup errors all stay below this are at the accuracy of the
// exact map's root finder; their rate fit is reported as degenerate.
inline constexpr double kMapErrorFloor = 1e-9;

struct SweepRecord {
    double epsilon = 0.0;
    std::size_t n_eps = 0;
    std::size_t k_eff = 0;
    std::vector<std::size_t> cardinalities;  // |Lambda_{k,eps}|, k = 1..d
    double sup_err_T = 0.0;   // max_k (convergence) or sum_k (truncation)
    double sup_err_dT = 0.0;
    // NaN when distances were not computed
    metrics::DistanceReport distances;
    bool has_distances = false;
    std::size_t sample_points = 0;
    double wall_ms = 0.0;
};

enum class RateModel { exponential, algebraic };

struct RateFit {
    std::string model;
    std::string status = "ok";  // "ok" | "degenerate"
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

// Least squares of log(err) on N^{1/d} (exponential) or log N (algebraic),
// over pairs with err > kErrorFloor. Throws NumericalError with fewer than
// three usable pairs.
[[nodiscard]] RateFit fit_rate(std::span<const double> n, std::span<const double> err, RateModel model,
                               std::size_t dim = 1);
[[nodiscard]] RateFit fit_rate(std::span<const SweepRecord> records, RateModel model, std::size_t dim = 1);

// ((d-1)! prod_j log xi_j)^{1/d}; infinite weights are skipped.
[[nodiscard]] double beta_theory(const index::WeightVector& xi);

// xi_j = 1 + alpha / b_j, with b_j = 0 mapped to an infinite weight.
[[nodiscard]] index::WeightVector default_xi(std::span<const double> b, double alpha = 1.0);

struct SweepSettings {
    std::size_t sample_points = 2048;
    std::uint64_t seed = 0;
    bool grid_points = true;  // add projection grid nodes to the sup-norm sample
    approx::FitSettings fit;
    metrics::DistanceSettings distance;
    bool distances = true;
    bool timing = false;  // record wall_ms; otherwise 0 so output is reproducible
};

struct ConvergenceResult {
    std::vector<SweepRecord> records;
    RateFit fit;      // of sup_err_T
    RateFit fit_dT;   // of sup_err_dT
    double beta = 0.0;
};

// One ApproxTransport per epsilon (descending), errors against the exact
// transport and distances between the pullback of rho under T~^{-1} and pi.
[[nodiscard]] ConvergenceResult convergence_study(const transport::ExactTransport& exact,
                                                  const index::WeightVector& xi, std::span<const double> epsilons,
                                                  const SweepSettings& settings = {});

struct TruncationSettings {
    double amplitude = 0.5;
    double decay = 3.0;  // c_j = amplitude * j^{-decay}
    std::size_t d_max = 32;
    double alpha = 1.0;
    std::size_t cdf_order = 4;
    SweepSettings sweep;
};

struct TruncationResult {
    std::vector<SweepRecord> records;
    RateFit fit;
    RateFit fit_dT;
};

[[nodiscard]] std::vector<double> truncation_coefficients(double amplitude, double decay, std::size_t d);

// Linear target with c_j = amplitude j^{-decay}; errors are summed over
// components. Distances only for d_max <= 4.
[[nodiscard]] TruncationResult truncation_study(const TruncationSettings& settings, std::span<const double> epsilons);

struct PosteriorSettings {
    std::size_t m = 1;
    std::size_t d = 2;
    std::vector<double> a;  // row-major m x d
    std::vector<double> observation;
    double sigma = 1.0;
    double epsilon = 1e-4;
    double alpha = 1.0;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    approx::FitSettings fit;
    metrics::DistanceSettings distance;
};

struct PosteriorReport {
    approx::ApproxTransport map;
    index::WeightVector xi;
    metrics::DistanceReport distances;
    std::vector<std::vector<double>> samples;
    std::vector<double> sample_mean;
    std::vector<double> sample_std;
    std::vector<double> quadrature_mean;
    bool mean_within_band = false;  // |sample - quadrature| <= 3 std / sqrt(N) for all j
};

[[nodiscard]] PosteriorReport posterior_demo(const PosteriorSettings& settings);

// y_i = map(x_i), x_i from the counter generator (stream 1) under seed.
[[nodiscard]] std::vector<std::vector<double>> pushforward_samples(const transport::TriangularMap& map, std::size_t n,
                                                                   std::uint64_t seed);

// Shortest round-trip decimal form.
[[nodiscard]] std::string format_double(double v);

void write_csv(std::ostream& os, std::span<const SweepRecord> records);
void to_json(nlohmann::json& j, const SweepRecord& r);
void to_json(nlohmann::json& j, const RateFit& f);
void to_json(nlohmann::json& j, const PosteriorReport& r);

}  // namespace krt::studies
