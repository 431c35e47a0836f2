#include "krt/config.hpp"

#include "krt/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

namespace krt::config {

namespace {

using nlohmann::json;

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

double number(const json& v, std::string_view name) {
    if (!v.is_number()) throw ConfigError(std::string(name) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(std::string(name) + " must be finite");
    return x;
}

double positive(const json& v, std::string_view name) {
    const double x = number(v, name);
    if (!(x > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    return x;
}

std::uint64_t unsigned_int(const json& v, std::string_view name) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError(std::string(name) + " must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

std::size_t positive_int(const json& v, std::string_view name) {
    const auto n = unsigned_int(v, name);
    if (n == 0) throw ConfigError(std::string(name) + " must be positive");
    return static_cast<std::size_t>(n);
}

bool boolean(const json& v, std::string_view name) {
    if (!v.is_boolean()) throw ConfigError(std::string(name) + " must be a boolean");
    return v.get<bool>();
}

std::string string(const json& v, std::string_view name) {
    if (!v.is_string()) throw ConfigError(std::string(name) + " must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, std::string_view name) {
    if (!v.is_array()) throw ConfigError(std::string(name) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, name));
    return out;
}

std::vector<std::vector<double>> matrix(const json& v, std::string_view name) {
    if (!v.is_array() || v.empty()) throw ConfigError(std::string(name) + " must be a nonempty array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) out.push_back(numbers(row, name));
    for (const auto& row : out) {
        if (row.size() != out.front().size() || row.empty()) throw ConfigError(std::string(name) + " rows must have equal nonzero length");
    }
    return out;
}

XiSpec parse_xi(const json& v) {
    XiSpec xi;
    if (v.is_array()) {
        for (const auto& e : v) {
            xi.explicit_xi.push_back(e.is_null() ? std::numeric_limits<double>::infinity() : number(e, "xi"));
        }
        if (xi.explicit_xi.empty()) throw ConfigError("xi must not be empty");
        for (double x : xi.explicit_xi) {
            if (!(x > 1.0)) throw ConfigError("xi entries must exceed 1");
        }
        return xi;
    }
    only_keys(v, "xi", {"anisotropy", "alpha"});
    if (v.contains("anisotropy")) {
        xi.anisotropy = numbers(v["anisotropy"], "xi.anisotropy");
        for (double b : *xi.anisotropy) {
            if (b < 0.0) throw ConfigError("xi.anisotropy entries must be >= 0");
        }
    }
    if (v.contains("alpha")) xi.alpha = positive(v["alpha"], "xi.alpha");
    return xi;
}

QuadratureConfig parse_quadrature(const json& v) {
    only_keys(v, "quadrature", {"cdf_order", "projection_margin", "collapse_constant_dims", "distance_order", "oversample_tv"});
    QuadratureConfig q;
    if (v.contains("cdf_order")) q.cdf_order = positive_int(v["cdf_order"], "quadrature.cdf_order");
    if (v.contains("projection_margin")) {
        q.projection_margin = static_cast<unsigned>(positive_int(v["projection_margin"], "quadrature.projection_margin"));
    }
    if (v.contains("collapse_constant_dims")) {
        q.collapse_constant_dims = boolean(v["collapse_constant_dims"], "quadrature.collapse_constant_dims");
    }
    if (v.contains("distance_order")) q.distance_order = positive_int(v["distance_order"], "quadrature.distance_order");
    if (v.contains("oversample_tv")) q.oversample_tv = boolean(v["oversample_tv"], "quadrature.oversample_tv");
    return q;
}

TruncationConfig parse_truncation(const json& v) {
    only_keys(v, "truncation", {"amplitude", "decay", "d_max", "alpha"});
    TruncationConfig t;
    if (v.contains("amplitude")) t.amplitude = positive(v["amplitude"], "truncation.amplitude");
    if (v.contains("decay")) t.decay = positive(v["decay"], "truncation.decay");
    if (v.contains("d_max")) t.d_max = positive_int(v["d_max"], "truncation.d_max");
    if (v.contains("alpha")) t.alpha = positive(v["alpha"], "truncation.alpha");
    return t;
}

PosteriorConfig parse_posterior(const json& v) {
    only_keys(v, "posterior", {"A", "observation", "sigma", "alpha"});
    if (!v.contains("A") || !v.contains("observation")) throw ConfigError("posterior needs A and observation");
    PosteriorConfig p;
    p.a = matrix(v["A"], "posterior.A");
    p.observation = numbers(v["observation"], "posterior.observation");
    if (p.observation.size() != p.a.size()) throw ConfigError("posterior.observation length must equal rows of A");
    if (v.contains("sigma")) p.sigma = positive(v["sigma"], "posterior.sigma");
    if (v.contains("alpha")) p.alpha = positive(v["alpha"], "posterior.alpha");
    return p;
}

std::vector<double> parse_number_row(const std::string& line, std::size_t lineno) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        auto end = line.find(',', pos);
        if (end == std::string::npos) end = line.size();
        auto field = std::string_view(line).substr(pos, end - pos);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
        double x = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
        if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty()) {
            throw ConfigError("points file line " + std::to_string(lineno) + ": not a number list");
        }
        row.push_back(x);
        pos = end + 1;
    }
    return row;
}

}  // namespace

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

ExperimentConfig parse(const json& j) {
    only_keys(j, "config",
              {"reference", "target", "xi", "epsilon", "epsilon_list", "quadrature", "sup_points", "grid_points",
               "distances", "samples", "seed", "threads", "timing", "map", "direction", "approx_file", "points_file",
               "points", "truncation", "posterior", "out_dir"});
    ExperimentConfig c;
    if (j.contains("reference")) {
        c.reference = j["reference"];
        (void)density::from_spec(*c.reference);
    }
    if (j.contains("target")) {
        c.target = j["target"];
        (void)density::from_spec(*c.target);
    }
    if (j.contains("xi")) c.xi = parse_xi(j["xi"]);
    if (j.contains("epsilon") && j.contains("epsilon_list")) throw ConfigError("give epsilon or epsilon_list, not both");
    if (j.contains("epsilon")) c.epsilons = {number(j["epsilon"], "epsilon")};
    if (j.contains("epsilon_list")) c.epsilons = numbers(j["epsilon_list"], "epsilon_list");
    for (double e : c.epsilons) {
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("epsilon values must lie in (0,1)");
    }
    if (j.contains("quadrature")) c.quadrature = parse_quadrature(j["quadrature"]);
    if (j.contains("sup_points")) c.sup_points = static_cast<std::size_t>(unsigned_int(j["sup_points"], "sup_points"));
    if (j.contains("grid_points")) c.grid_points = boolean(j["grid_points"], "grid_points");
    if (j.contains("distances")) c.distances = boolean(j["distances"], "distances");
    if (j.contains("samples")) c.samples = positive_int(j["samples"], "samples");
    if (j.contains("seed")) c.seed = unsigned_int(j["seed"], "seed");
    if (j.contains("threads")) c.threads = positive_int(j["threads"], "threads");
    if (j.contains("timing")) c.timing = boolean(j["timing"], "timing");
    if (j.contains("map")) {
        c.map = string(j["map"], "map");
        if (*c.map != "exact" && *c.map != "approx" && *c.map != "identity") {
            throw ConfigError("map must be exact, approx or identity");
        }
    }
    if (j.contains("direction")) {
        c.direction = string(j["direction"], "direction");
        if (c.direction != "forward" && c.direction != "inverse") throw ConfigError("direction must be forward or inverse");
    }
    if (j.contains("approx_file")) c.approx_file = string(j["approx_file"], "approx_file");
    if (j.contains("points_file")) c.points_file = string(j["points_file"], "points_file");
    if (j.contains("points")) c.points = matrix(j["points"], "points");
    if (j.contains("truncation")) c.truncation = parse_truncation(j["truncation"]);
    if (j.contains("posterior")) c.posterior = parse_posterior(j["posterior"]);
    if (j.contains("out_dir")) c.out_dir = string(j["out_dir"], "out_dir");
    return c;
}

ExperimentConfig load(const std::filesystem::path& path) { return parse(read_json(path)); }

density::Density target(const ExperimentConfig& c) {
    if (!c.target) throw ConfigError("config needs a target density");
    return density::from_spec(*c.target);
}

density::Density reference(const ExperimentConfig& c) {
    if (c.reference) return density::from_spec(*c.reference);
    return density::uniform(target(c).dim());
}

index::WeightVector resolve_xi(const ExperimentConfig& c, const density::Density& rho, const density::Density& pi) {
    const std::size_t d = pi.dim();
    if (rho.dim() != d) throw ConfigError("reference and target dimensions differ");
    if (!c.xi.explicit_xi.empty()) {
        if (c.xi.explicit_xi.size() != d) throw ConfigError("xi length must equal the dimension");
        return index::WeightVector(c.xi.explicit_xi);
    }
    std::vector<double> b(d, 0.0);
    if (c.xi.anisotropy) {
        if (c.xi.anisotropy->size() != d) throw ConfigError("xi.anisotropy length must equal the dimension");
        b = *c.xi.anisotropy;
    } else {
        for (std::size_t j = 0; j < d; ++j) b[j] = std::max(rho.anisotropy()[j], pi.anisotropy()[j]);
    }
    return studies::default_xi(b, c.xi.alpha);
}

transport::ExactSettings exact_settings(const ExperimentConfig& c) {
    transport::ExactSettings s;
    s.cdf_order = c.quadrature.cdf_order;
    return s;
}

approx::FitSettings fit_settings(const ExperimentConfig& c) {
    approx::FitSettings s;
    s.grid.margin = c.quadrature.projection_margin;
    s.grid.collapse_constant_dims = c.quadrature.collapse_constant_dims;
    return s;
}

studies::SweepSettings sweep_settings(const ExperimentConfig& c) {
    studies::SweepSettings s;
    s.sample_points = c.sup_points;
    s.seed = c.seed;
    s.grid_points = c.grid_points;
    s.fit = fit_settings(c);
    s.distance.order = c.quadrature.distance_order;
    s.distance.oversample = c.quadrature.oversample_tv;
    s.distances = c.distances;
    s.timing = c.timing;
    return s;
}

studies::TruncationSettings truncation_settings(const ExperimentConfig& c) {
    if (!c.truncation) throw ConfigError("config needs a truncation section");
    studies::TruncationSettings s;
    s.amplitude = c.truncation->amplitude;
    s.decay = c.truncation->decay;
    s.d_max = c.truncation->d_max;
    s.alpha = c.truncation->alpha;
    s.cdf_order = c.quadrature.cdf_order;
    s.sweep = sweep_settings(c);
    return s;
}

studies::PosteriorSettings posterior_settings(const ExperimentConfig& c) {
    if (!c.posterior) throw ConfigError("config needs a posterior section");
    if (c.epsilons.size() != 1) throw ConfigError("posterior demo needs a single epsilon");
    const auto& p = *c.posterior;
    studies::PosteriorSettings s;
    s.m = p.a.size();
    s.d = p.a.front().size();
    for (const auto& row : p.a) s.a.insert(s.a.end(), row.begin(), row.end());
    s.observation = p.observation;
    s.sigma = p.sigma;
    s.alpha = p.alpha;
    s.epsilon = c.epsilons.front();
    s.samples = c.samples;
    s.seed = c.seed;
    s.fit = fit_settings(c);
    s.distance.order = c.quadrature.distance_order;
    s.distance.oversample = c.quadrature.oversample_tv;
    return s;
}

std::vector<std::vector<double>> load_points(const ExperimentConfig& c) {
    if (!c.points_file) {
        if (c.points.empty()) throw ConfigError("config needs points or points_file");
        return c.points;
    }
    const std::filesystem::path path(*c.points_file);
    if (path.extension() == ".json") return matrix(read_json(path), "points_file");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<std::vector<double>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r" || line.front() == '#') continue;
        out.push_back(parse_number_row(line, lineno));
    }
    if (out.empty()) throw ConfigError("points file is empty");
    for (const auto& row : out) {
        if (row.size() != out.front().size()) throw ConfigError("points file rows must have equal length");
    }
    return out;
}

}  // namespace krt::config
