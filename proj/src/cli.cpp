#include "krt/cli.hpp"

#include "krt/approx.hpp"
#include "krt/config.hpp"
#include "krt/errors.hpp"
#include "krt/metrics.hpp"
#include "krt/parallel.hpp"
#include "krt/rng.hpp"
#include "krt/studies.hpp"
#include "krt/transport.hpp"

#include <CLI11.hpp>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>

namespace krt::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string points;
    std::string approx;
    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* points_opt = nullptr;
    CLI::Option* approx_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
    c.out_opt = cmd->add_option("--out", c.out, "output directory");
    c.seed_opt = cmd->add_option("--seed", c.seed, "seed for the counter-based generator");
    c.threads_opt = cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

// Flag, then KRT_THREADS, then the config.
void apply_threads(const Common& c, const config::ExperimentConfig& cfg) {
    if (c.threads_opt->count() > 0) {
        set_thread_count(c.threads);
        return;
    }
    if (const char* env = std::getenv("KRT_THREADS"); env && *env) {
        char* end = nullptr;
        const unsigned long n = std::strtoul(env, &end, 10);
        if (*end != '\0' || n == 0) throw ConfigError("KRT_THREADS must be a positive integer");
        set_thread_count(n);
        return;
    }
    set_thread_count(cfg.threads.value_or(1));
}

config::ExperimentConfig load(const Common& c) {
    auto cfg = config::load(c.config);
    if (c.out_opt->count() > 0) cfg.out_dir = c.out;
    if (c.seed_opt->count() > 0) cfg.seed = c.seed;
    if (c.points_opt && c.points_opt->count() > 0) cfg.points_file = c.points;
    if (c.approx_opt && c.approx_opt->count() > 0) cfg.approx_file = c.approx;
    apply_threads(c, cfg);
    return cfg;
}

fs::path output_path(const config::ExperimentConfig& cfg, const std::string& name) {
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());
    return dir / name;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    return os;
}

void write_json(const fs::path& path, const json& j) {
    auto os = open_output(path);
    os << j.dump(2) << '\n';
}

void write_rows(const fs::path& path, const std::vector<std::vector<double>>& rows) {
    auto os = open_output(path);
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << studies::format_double(row[j]);
        os << '\n';
    }
}

double single_epsilon(const config::ExperimentConfig& cfg) {
    if (cfg.epsilons.size() != 1) throw ConfigError("this command needs a single epsilon");
    return cfg.epsilons.front();
}

// Exact, approximate (loaded or fitted) or identity map, kept alive
// together with what it references.
struct MapHolder {
    std::unique_ptr<transport::ExactTransport> exact;
    std::unique_ptr<approx::ApproxTransport> approx;
    std::unique_ptr<transport::IdentityMap> identity;

    [[nodiscard]] const transport::TriangularMap& map() const {
        if (approx) return *approx;
        if (exact) return *exact;
        return *identity;
    }
};

MapHolder make_map(const config::ExperimentConfig& cfg, const std::string& kind) {
    MapHolder h;
    if (kind == "identity") {
        const std::size_t d = cfg.target ? config::target(cfg).dim() : config::reference(cfg).dim();
        h.identity = std::make_unique<transport::IdentityMap>(d);
    } else if (kind == "approx" && cfg.approx_file) {
        h.approx = std::make_unique<approx::ApproxTransport>(approx::approx_from_json(config::read_json(*cfg.approx_file)));
    } else {
        const auto rho = config::reference(cfg);
        const auto pi = config::target(cfg);
        h.exact = std::make_unique<transport::ExactTransport>(rho, pi, config::exact_settings(cfg));
        if (kind == "approx") {
            const auto xi = config::resolve_xi(cfg, rho, pi);
            h.approx = std::make_unique<approx::ApproxTransport>(
                approx::build_approx_transport(*h.exact, xi, single_epsilon(cfg), config::fit_settings(cfg)));
        }
    }
    return h;
}

void check_points(const std::vector<std::vector<double>>& pts, std::size_t d) {
    for (const auto& p : pts) {
        if (p.size() != d) throw ConfigError("point dimension does not match the map dimension");
        for (double v : p) {
            if (!(v >= -1.0 && v <= 1.0)) throw ConfigError("points must lie in [-1,1]^d");
        }
    }
}

json transport_eval(const config::ExperimentConfig& cfg) {
    const auto kind = cfg.map.value_or(cfg.approx_file ? "approx" : "exact");
    const auto h = make_map(cfg, kind);
    const auto& map = h.map();
    auto pts = config::load_points(cfg);
    check_points(pts, map.dim());
    const bool inverse = cfg.direction == "inverse";
    parallel_for(pts.size(), [&](std::size_t i) { pts[i] = inverse ? map.inverse(pts[i]) : map(pts[i]); });
    const auto path = output_path(cfg, "transport_eval.csv");
    write_rows(path, pts);
    return {{"command", "transport eval"}, {"map", kind}, {"direction", cfg.direction}, {"points", pts.size()},
            {"output", path.string()}};
}

json approx_build(const config::ExperimentConfig& cfg) {
    const auto h = make_map(cfg, "approx");
    const auto path = output_path(cfg, "approx.json");
    write_json(path, json(*h.approx));
    return {{"command", "approx build"}, {"N_eps", h.approx->degrees_of_freedom()},
            {"k_eff", h.approx->effective_dimension()}, {"output", path.string()}};
}

json distance(const config::ExperimentConfig& cfg) {
    const auto kind = cfg.map.value_or("identity");
    const auto rho = config::reference(cfg);
    const auto pi = config::target(cfg);
    metrics::DistanceSettings ds;
    ds.order = cfg.quadrature.distance_order;
    ds.oversample = cfg.quadrature.oversample_tv;
    metrics::DistanceReport r;
    if (kind == "identity") {
        if (rho.dim() != pi.dim()) throw ConfigError("reference and target dimensions differ");
        r = metrics::distances([&](std::span<const double> x) { return rho(x); },
                               [&](std::span<const double> x) { return pi(x); }, pi.dim(), ds);
    } else {
        const auto h = make_map(cfg, kind);
        const transport::InverseMap s(h.map());
        r = metrics::pullback_distance(s, rho, pi, ds);
    }
    const auto path = output_path(cfg, "distance.json");
    json j = {{"map", kind}, {"distances", r}};
    write_json(path, j);
    j["command"] = "distance";
    j["output"] = path.string();
    return j;
}

json sample(const config::ExperimentConfig& cfg) {
    const auto kind = cfg.map.value_or(cfg.approx_file || !cfg.epsilons.empty() ? "approx" : "exact");
    const auto h = make_map(cfg, kind);
    const auto& map = h.map();
    const auto rho = config::reference(cfg);
    std::vector<std::vector<double>> ys;
    if (rho.family() == "uniform") {
        ys = studies::pushforward_samples(map, cfg.samples, cfg.seed);
    } else {
        // uniform draws carried to rho by its own KR map first
        const transport::ExactTransport to_rho(density::uniform(rho.dim()), rho, config::exact_settings(cfg));
        ys = rng::CounterRng(cfg.seed, 1).cube_points(cfg.samples, rho.dim());
        parallel_for(ys.size(), [&](std::size_t i) { ys[i] = map(to_rho(ys[i])); });
    }
    const auto path = output_path(cfg, "samples.csv");
    write_rows(path, ys);
    return {{"command", "sample"}, {"map", kind}, {"samples", ys.size()}, {"output", path.string()}};
}

json study_convergence(const config::ExperimentConfig& cfg) {
    const auto rho = config::reference(cfg);
    const auto pi = config::target(cfg);
    const transport::ExactTransport exact(rho, pi, config::exact_settings(cfg));
    const auto xi = config::resolve_xi(cfg, rho, pi);
    const auto r = studies::convergence_study(exact, xi, cfg.epsilons, config::sweep_settings(cfg));
    const auto csv = output_path(cfg, "convergence.csv");
    {
        auto os = open_output(csv);
        studies::write_csv(os, r.records);
    }
    json xi_json = json::array();
    for (double v : xi.values()) xi_json.push_back(std::isinf(v) ? json(nullptr) : json(v));
    const json j = {{"xi", xi_json}, {"records", r.records}, {"fit", r.fit}, {"fit_dT", r.fit_dT},
                    {"beta_theory", r.beta}};
    const auto js = output_path(cfg, "convergence.json");
    write_json(js, j);
    return {{"command", "study convergence"}, {"fit", r.fit}, {"csv", csv.string()}, {"json", js.string()}};
}

json study_truncation(const config::ExperimentConfig& cfg) {
    const auto r = studies::truncation_study(config::truncation_settings(cfg), cfg.epsilons);
    const auto csv = output_path(cfg, "truncation.csv");
    {
        auto os = open_output(csv);
        studies::write_csv(os, r.records);
    }
    const json j = {{"records", r.records}, {"fit", r.fit}, {"fit_dT", r.fit_dT}};
    const auto js = output_path(cfg, "truncation.json");
    write_json(js, j);
    return {{"command", "study truncation"}, {"fit", r.fit}, {"csv", csv.string()}, {"json", js.string()}};
}

json study_posterior(const config::ExperimentConfig& cfg) {
    const auto r = studies::posterior_demo(config::posterior_settings(cfg));
    const auto report = output_path(cfg, "posterior.json");
    write_json(report, json(r));
    const auto map = output_path(cfg, "posterior_map.json");
    write_json(map, json(r.map));
    const auto samples = output_path(cfg, "posterior_samples.csv");
    write_rows(samples, r.samples);
    return {{"command", "study posterior"}, {"mean_within_band", r.mean_within_band}, {"json", report.string()},
            {"samples", samples.string()}};
}

json error_json(std::string_view type, const std::string& message, int code) {
    return {{"error", {{"type", type}, {"message", message}}}, {"exit_code", code}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knothe-Rosenblatt transport approximation"};
    app.require_subcommand(1);

    // One option set per leaf command.
    std::array<Common, 7> common;
    auto* transport_cmd = app.add_subcommand("transport", "exact or approximate map evaluation")->require_subcommand(1);
    auto* eval_cmd = transport_cmd->add_subcommand("eval", "evaluate a map at points read from a file");
    auto* approx_cmd = app.add_subcommand("approx", "approximate transport")->require_subcommand(1);
    auto* build_cmd = approx_cmd->add_subcommand("build", "fit and serialize an approximate transport");
    auto* distance_cmd = app.add_subcommand("distance", "distances between densities or a pullback and the target");
    auto* sample_cmd = app.add_subcommand("sample", "pushforward samples of the reference");
    auto* study_cmd = app.add_subcommand("study", "experiment sweeps")->require_subcommand(1);
    auto* conv_cmd = study_cmd->add_subcommand("convergence", "exponential convergence sweep");
    auto* trunc_cmd = study_cmd->add_subcommand("truncation", "dimension truncation sweep");
    auto* post_cmd = study_cmd->add_subcommand("posterior", "Bayesian posterior demo");

    const std::array<CLI::App*, 7> leaves{eval_cmd, build_cmd, distance_cmd, sample_cmd, conv_cmd, trunc_cmd, post_cmd};
    for (std::size_t i = 0; i < leaves.size(); ++i) add_common(leaves[i], common[i]);
    common[0].points_opt = eval_cmd->add_option("--points", common[0].points, "points file (CSV rows or JSON)");
    common[0].approx_opt = eval_cmd->add_option("--approx", common[0].approx, "serialized approximate transport");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what(), 2).dump() << '\n';
        return 2;
    }

    try {
        std::size_t leaf = 0;
        while (leaf + 1 < leaves.size() && !leaves[leaf]->parsed()) ++leaf;
        const auto cfg = load(common[leaf]);
        json summary;
        if (eval_cmd->parsed()) {
            summary = transport_eval(cfg);
        } else if (build_cmd->parsed()) {
            summary = approx_build(cfg);
        } else if (distance_cmd->parsed()) {
            summary = distance(cfg);
        } else if (sample_cmd->parsed()) {
            summary = sample(cfg);
        } else if (conv_cmd->parsed()) {
            if (cfg.epsilons.empty()) throw ConfigError("study convergence needs epsilon_list");
            summary = study_convergence(cfg);
        } else if (trunc_cmd->parsed()) {
            if (cfg.epsilons.empty()) throw ConfigError("study truncation needs epsilon_list");
            summary = study_truncation(cfg);
        } else {
            summary = study_posterior(cfg);
        }
        out << summary.dump() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        err << error_json("config", e.what(), 2).dump() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << error_json("config", e.what(), 2).dump() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << error_json("numerical", e.what(), 3).dump() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what(), 1).dump() << '\n';
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace krt::cli
