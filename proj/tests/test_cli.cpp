#include "doctest.h"

#include "krt/approx.hpp"
#include "krt/cli.hpp"
#include "krt/config.hpp"
#include "krt/errors.hpp"
#include "krt/studies.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run krt_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = krt::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("krt_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write(const fs::path& path, const json& j) {
    std::ofstream(path) << j.dump(2);
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_rows(const fs::path& path) {
    krt::config::ExperimentConfig c;
    c.points_file = path.string();
    return krt::config::load_points(c);
}

}  // namespace

TEST_CASE("usage and configuration errors") {
    auto r = krt_run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("study") != std::string::npos);

    r = krt_run({});
    CHECK(r.code == 2);

    r = krt_run({"study", "convergence", "--config", "/nonexistent/config.json"});
    CHECK(r.code == 2);
    const auto e = json::parse(r.err);
    CHECK(e["error"]["type"] == "config");
    CHECK(e["exit_code"] == 2);

    const auto dir = scratch("errors");
    const auto bad = write(dir / "bad.json", {{"target", {{"family", "linear"}, {"c", {0.3}}}}, {"epsilonn", 0.1}});
    r = krt_run({"approx", "build", "--config", bad.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("epsilonn") != std::string::npos);

    const auto nested = write(dir / "nested.json", {{"target", {{"family", "linear"}, {"c", {0.3}}}},
                                                    {"quadrature", {{"cdf_orderr", 3}}}});
    CHECK(krt_run({"approx", "build", "--config", nested.string()}).code == 2);

    const auto notjson = dir / "broken.json";
    std::ofstream(notjson) << "{ not json";
    CHECK(krt_run({"sample", "--config", notjson.string()}).code == 2);
}

TEST_CASE("numerical failure exits with 3") {
    const auto dir = scratch("numerical");
    krt::poly::SparsePolynomial p(1);
    p.add(krt::poly::MultiIndex{}, -1.0);
    std::vector<krt::approx::RationalComponent> comps{krt::approx::RationalComponent(1, p)};
    std::vector<krt::approx::ComponentInfo> info(1);
    info[0].lambda = {1, 0.5, {krt::poly::MultiIndex{}}};
    const krt::approx::ApproxTransport degenerate(0.5, krt::index::WeightVector({2.0}), comps, info);
    const auto map = write(dir / "map.json", json(degenerate));
    const auto cfg = write(dir / "cfg.json", {{"map", "approx"}, {"approx_file", map.string()}, {"points", {{0.2}}},
                                              {"out_dir", dir.string()}});
    const auto r = krt_run({"transport", "eval", "--config", cfg.string()});
    CHECK(r.code == 3);
    CHECK(json::parse(r.err)["error"]["type"] == "numerical");
}

TEST_CASE("transport eval with equal densities returns the input") {
    const auto dir = scratch("identity");
    const json points = {{-1.0, -1.0}, {0.25, -0.5}, {0.9, 0.1}, {-0.3, 0.77}, {1.0, 1.0}};
    const auto cfg = write(dir / "cfg.json", {{"reference", {{"family", "linear"}, {"c", {0.3, 0.2}}}},
                                              {"target", {{"family", "linear"}, {"c", {0.3, 0.2}}}},
                                              {"points", points},
                                              {"out_dir", dir.string()}});
    const auto r = krt_run({"transport", "eval", "--config", cfg.string()});
    REQUIRE(r.code == 0);
    const auto rows = read_rows(dir / "transport_eval.csv");
    REQUIRE(rows.size() == points.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(rows[i][j] - points[i][j].get<double>()) < 1e-10);
}

TEST_CASE("serialized approximate transport reproduces in-process evaluation") {
    const auto dir = scratch("approx");
    const json target = {{"family", "gaussian_posterior"}, {"A", {{1.0, -0.6}}}, {"observation", {0.3}}, {"sigma", 0.8}};
    const auto cfg = write(dir / "build.json", {{"target", target}, {"epsilon", 1e-3}, {"out_dir", dir.string()}});
    REQUIRE(krt_run({"approx", "build", "--config", cfg.string()}).code == 0);

    std::ofstream(dir / "points.csv") << "0.1,0.2\n-0.7,0.35\n0.999,-0.999\n";
    const auto eval = write(dir / "eval.json", {{"out_dir", dir.string()}});
    const auto r = krt_run({"transport", "eval", "--config", eval.string(), "--approx", (dir / "approx.json").string(),
                            "--points", (dir / "points.csv").string()});
    REQUIRE(r.code == 0);
    const auto rows = read_rows(dir / "transport_eval.csv");

    const auto pi = krt::density::from_spec(target);
    const krt::transport::ExactTransport exact(krt::density::uniform(2), pi);
    const auto a = krt::approx::build_approx_transport(exact, krt::studies::default_xi(pi.anisotropy()), 1e-3);
    const auto pts = read_rows(dir / "points.csv");
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(a(pts[i]) == rows[i]);
}

TEST_CASE("study reruns are bitwise identical across runs and thread counts") {
    const auto dir = scratch("study");
    const auto cfg = write(dir / "cfg.json", {{"target", {{"family", "linear"}, {"c", {0.3, 0.2}}}},
                                              {"epsilon_list", {1e-1, 1e-2, 1e-3}},
                                              {"sup_points", 256},
                                              {"quadrature", {{"distance_order", 12}}},
                                              {"seed", 5}});
    REQUIRE(krt_run({"study", "convergence", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
    REQUIRE(krt_run({"study", "convergence", "--config", cfg.string(), "--out", (dir / "b").string(), "--threads",
                     "3"})
                .code == 0);
    const auto a = slurp(dir / "a" / "convergence.csv");
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / "convergence.csv"));
    CHECK(slurp(dir / "a" / "convergence.json") == slurp(dir / "b" / "convergence.json"));

    REQUIRE(krt_run({"study", "convergence", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "6"})
                .code == 0);
    CHECK(a != slurp(dir / "c" / "convergence.csv"));
}

TEST_CASE("sample and distance commands") {
    const auto dir = scratch("sample");
    const auto cfg = write(dir / "cfg.json", {{"target", {{"family", "linear"}, {"c", {0.5}}}},
                                              {"samples", 50},
                                              {"seed", 9},
                                              {"out_dir", dir.string()}});
    REQUIRE(krt_run({"sample", "--config", cfg.string()}).code == 0);
    const auto first = slurp(dir / "samples.csv");
    REQUIRE(krt_run({"sample", "--config", cfg.string()}).code == 0);
    CHECK(first == slurp(dir / "samples.csv"));
    CHECK(read_rows(dir / "samples.csv").size() == 50);

    REQUIRE(krt_run({"distance", "--config", cfg.string()}).code == 0);
    const auto d = krt::config::read_json(dir / "distance.json");
    CHECK(std::abs(d["distances"]["w1"].get<double>() - 1.0 / 6.0) < 1e-12);
    CHECK(std::abs(d["distances"]["tv_oversampled"].get<double>() - 0.125) < 1e-14);

    const auto exact = write(dir / "exact.json", {{"target", {{"family", "linear"}, {"c", {0.5}}}},
                                                  {"map", "exact"},
                                                  {"out_dir", dir.string()}});
    REQUIRE(krt_run({"distance", "--config", exact.string()}).code == 0);
    CHECK(krt::config::read_json(dir / "distance.json")["distances"]["hellinger"].get<double>() < 1e-7);
}

TEST_CASE("config validation") {
    using krt::ConfigError;
    CHECK_THROWS_AS((void)krt::config::parse({{"epsilon", 1.5}}), ConfigError);
    CHECK_THROWS_AS((void)krt::config::parse({{"epsilon", 0.1}, {"epsilon_list", {0.1}}}), ConfigError);
    CHECK_THROWS_AS((void)krt::config::parse({{"xi", {0.5}}}), ConfigError);
    CHECK_THROWS_AS((void)krt::config::parse({{"target", {{"family", "linear"}, {"c", {0.9, 0.2}}}}}), ConfigError);
    CHECK_THROWS_AS((void)krt::config::parse({{"map", "other"}}), ConfigError);
    CHECK_THROWS_AS((void)krt::config::parse({{"samples", -3}}), ConfigError);
    const auto c = krt::config::parse({{"xi", {2.0, nullptr}}, {"seed", 4}});
    CHECK(std::isinf(c.xi.explicit_xi[1]));
    CHECK(c.seed == 4);
}
