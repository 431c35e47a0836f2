#pragma once

#include "krt/approx.hpp"
#include "krt/density.hpp"
#include "krt/indexsets.hpp"
#include "krt/studies.hpp"
#include "krt/transport.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace krt::config {

// Either explicit weights or 1 + alpha / b with b taken from the densities
// (largest of reference and target per coordinate) unless given.
struct XiSpec {
    std::vector<double> explicit_xi;  // empty: derive; JSON null entries are +inf
    std::optional<std::vector<double>> anisotropy;
    double alpha = 1.0;
};

struct QuadratureConfig {
    std::size_t cdf_order = 40;
    unsigned projection_margin = 10;
    bool collapse_constant_dims = false;
    std::size_t distance_order = 0;  // 0: metrics default
    bool oversample_tv = true;
};

struct TruncationConfig {
    double amplitude = 0.5;
    double decay = 3.0;
    std::size_t d_max = 32;
    double alpha = 1.0;
};

struct PosteriorConfig {
    std::vector<std::vector<double>> a;
    std::vector<double> observation;
    double sigma = 1.0;
    double alpha = 1.0;
};

struct ExperimentConfig {
    std::optional<nlohmann::json> reference;  // density spec; default uniform
    std::optional<nlohmann::json> target;
    XiSpec xi;
    std::vector<double> epsilons;  // "epsilon" or "epsilon_list"
    QuadratureConfig quadrature;
    std::size_t sup_points = 2048;
    bool grid_points = true;
    bool distances = true;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    std::optional<std::size_t> threads;
    bool timing = false;
    // "exact" | "approx" | "identity"; the default depends on the command
    std::optional<std::string> map;
    std::string direction = "forward";  // "forward" | "inverse"
    std::optional<std::string> approx_file;
    std::optional<std::string> points_file;
    std::vector<std::vector<double>> points;
    std::optional<TruncationConfig> truncation;
    std::optional<PosteriorConfig> posterior;
    std::string out_dir = ".";
};

// Throws ConfigError on unknown keys, wrong types or out-of-range values.
[[nodiscard]] ExperimentConfig parse(const nlohmann::json& j);
[[nodiscard]] ExperimentConfig load(const std::filesystem::path& path);

// Parses a JSON document from a file; ConfigError when missing or invalid.
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

[[nodiscard]] density::Density target(const ExperimentConfig& c);
// Uniform of the target's dimension when absent.
[[nodiscard]] density::Density reference(const ExperimentConfig& c);
[[nodiscard]] index::WeightVector resolve_xi(const ExperimentConfig& c, const density::Density& rho,
                                             const density::Density& pi);
[[nodiscard]] transport::ExactSettings exact_settings(const ExperimentConfig& c);
[[nodiscard]] approx::FitSettings fit_settings(const ExperimentConfig& c);
[[nodiscard]] studies::SweepSettings sweep_settings(const ExperimentConfig& c);
[[nodiscard]] studies::TruncationSettings truncation_settings(const ExperimentConfig& c);
[[nodiscard]] studies::PosteriorSettings posterior_settings(const ExperimentConfig& c);

// Points from points_file (.json array of arrays, otherwise CSV rows) or
// the inline "points" list.
[[nodiscard]] std::vector<std::vector<double>> load_points(const ExperimentConfig& c);

}  // namespace krt::config
