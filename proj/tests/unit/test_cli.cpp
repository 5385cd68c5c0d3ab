#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "../../tools/commands.hpp"
#include "invdp/io.hpp"
#include "invdp/random.hpp"

using namespace invdp;
namespace fs = std::filesystem;
using io::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("invdp_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

json example(const std::string& name) { return io::read_json(fs::path(INVDP_SOURCE_DIR) / "tools" / "configs" / name); }

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
    const fs::path p = dir / name;
    io::write_json(p, j);
    return p;
}

/// Runs the installed tool; returns the exit status and captures stdout.
int tool(const std::string& arguments, std::string* out = nullptr, const fs::path& dir = fs::temp_directory_path()) {
    const fs::path stdout_file = dir / "stdout.txt";
    const std::string cmd = std::string("\"") + INVDP_TOOL + "\" " + arguments + " > \"" + stdout_file.string() + "\" 2> \"" +
                            (dir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    if (out) *out = slurp(stdout_file);
    return WEXITSTATUS(status);
}

cli::Args args_for(const fs::path& config, const fs::path& out) {
    cli::Args a;
    a.config = config.string();
    a.out = out.string();
    a.threads = 1;
    return a;
}

}  // namespace

TEST_CASE("simulate writes trajectory, diagnostics and run metadata") {
    const fs::path dir = scratch("simulate");
    json pend = example("pendulum_certify.json");
    pend["integrator"]["T"] = 1.0;
    CHECK(cli::cmd_simulate(args_for(write_config(dir, "p.json", pend), dir / "p")) == 0);
    CHECK(first_line(dir / "p" / "trajectory.csv") == "t,theta,v");
    CHECK(first_line(dir / "p" / "diagnostics.csv") == "t");
    const json run = io::read_json(dir / "p" / "run.json");
    CHECK(run.at("config") == pend);
    CHECK(run.at("status") == "ok");
    CHECK(run.at("samples") == 101);
    CHECK(run.contains("version"));
    CHECK(run.contains("eigen"));
    CHECK(run.contains("wall_time_s"));

    json torus = example("torus_ring.json");
    torus["integrator"]["T"] = 1.0;
    CHECK(cli::cmd_simulate(args_for(write_config(dir, "t.json", torus), dir / "t")) == 0);
    CHECK(first_line(dir / "t" / "trajectory.csv") == "t,q_1,q_2,q_3,v_1,v_2,v_3");
    CHECK(first_line(dir / "t" / "diagnostics.csv") == "t,phi,residual");
    torus.erase("tangent");
    CHECK(cli::cmd_simulate(args_for(write_config(dir, "t2.json", torus), dir / "t2")) == 0);
    CHECK(first_line(dir / "t2" / "trajectory.csv") == "t,q_1,q_2,q_3");

    json so3 = example("so3_sync.json");
    so3["integrator"]["T"] = 0.5;
    CHECK(cli::cmd_simulate(args_for(write_config(dir, "s.json", so3), dir / "s")) == 0);
    const std::string header = first_line(dir / "s" / "trajectory.csv");
    CHECK(header.rfind("t,r1_11,r1_12,r1_13,r1_21", 0) == 0);
    CHECK(first_line(dir / "s" / "diagnostics.csv").find("sync_dist") != std::string::npos);
}

TEST_CASE("config errors exit with 2") {
    const fs::path dir = scratch("errors");
    std::ofstream(dir / "bad.json") << "{ \"model\": \"pendulum\", ";
    CHECK(cli::cmd_simulate(args_for(dir / "bad.json", dir / "o")) == 2);
    CHECK(tool("simulate --config \"" + (dir / "bad.json").string() + "\" --out \"" + (dir / "o").string() + "\"", nullptr, dir) == 2);
    CHECK_FALSE(slurp(dir / "stderr.txt").empty());
    CHECK(tool("simulate --config \"" + (dir / "missing.json").string() + "\" --out x", nullptr, dir) == 2);
    CHECK(tool("frobnicate", nullptr, dir) == 2);

    json no_seed = example("pendulum_certify.json");
    no_seed["certification"].erase("seed");
    CHECK(cli::cmd_certify(args_for(write_config(dir, "ns.json", no_seed), dir / "ns")) == 2);
    cli::Args with_seed = args_for(dir / "ns.json", dir / "ns");
    with_seed.seed = 4;
    no_seed["certification"]["n_states"] = 2;
    no_seed["certification"]["n_rays"] = 2;
    no_seed["integrator"]["T"] = 0.5;
    write_config(dir, "ns.json", no_seed);
    CHECK(cli::cmd_certify(with_seed) != 2);

    json unknown = example("pendulum_certify.json");
    unknown["model"] = "double_pendulum";
    CHECK(cli::cmd_certify(args_for(write_config(dir, "u.json", unknown), dir / "u")) == 2);
}

TEST_CASE("blow-up exits with 3 and keeps the partial trajectory") {
    const fs::path dir = scratch("blowup");
    json c = example("torus_ring.json");
    c["N"] = 2;
    c["edges"] = json::array({{0, 1}, {1, 0}});
    c["omega"] = {0.0, 0.0};
    c["initial"] = {0.0, 3.14159265};
    c.erase("tangent");
    CHECK(cli::cmd_simulate(args_for(write_config(dir, "b.json", c), dir / "b")) == 3);
    CHECK(first_line(dir / "b" / "trajectory.csv") == "t,q_1,q_2");
    CHECK(io::read_json(dir / "b" / "run.json").at("status") == "blow-up");
}

TEST_CASE("certify exit codes and byte-identical certificates") {
    const fs::path dir = scratch("certify");
    json good = example("pendulum_certify.json");
    good["certification"]["n_states"] = 8;
    good["certification"]["n_rays"] = 8;
    const fs::path cfg = write_config(dir, "good.json", good);
    CHECK(cli::cmd_certify(args_for(cfg, dir / "a")) == 0);
    CHECK(cli::cmd_certify(args_for(cfg, dir / "b")) == 0);
    CHECK(slurp(dir / "a" / "certificate.json") == slurp(dir / "b" / "certificate.json"));
    CHECK(tool("certify --threads 2 --config \"" + cfg.string() + "\" --out \"" + (dir / "c").string() + "\"", nullptr, dir) == 0);
    CHECK(slurp(dir / "a" / "certificate.json") == slurp(dir / "c" / "certificate.json"));

    json bad = good;
    bad["rho"] = 0.5;
    CHECK(cli::cmd_certify(args_for(write_config(dir, "bad.json", bad), dir / "d")) == 1);
    const json cert = io::read_json(dir / "d" / "certificate.json");
    CHECK(cert.at("pass") == false);
    CHECK(cert.at("worst_case").is_object());
    CHECK(cert.at("worst_case").contains("ray"));
}

TEST_CASE("pf prints the splitting or exits 1") {
    const fs::path dir = scratch("pf");
    std::string out;
    const fs::path diag = fs::path(INVDP_SOURCE_DIR) / "tools" / "configs" / "pf_diag.json";
    REQUIRE(tool("pf --config \"" + diag.string() + "\"", &out, dir) == 0);
    const json split = json::parse(out);
    CHECK(split.at("gap").get<double>() == doctest::Approx(4.0));

    const fs::path m = write_config(dir, "id.json", json{{"matrix", {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}});
    const fs::path k = write_config(dir, "k.json", json{{"variant", "quadratic"}, {"P", {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}}}});
    CHECK(tool("pf --matrix \"" + m.string() + "\" --cone \"" + k.string() + "\"", &out, dir) == 1);
    CHECK(out.empty());

    const fs::path rot = write_config(dir, "rot.json", json{{"matrix", {{0, -1}, {1, 0}}},
                                                             {"cone", {{"variant", "quadratic"}, {"P", {{1, 0}, {0, -1}}}}}});
    CHECK(tool("pf --config \"" + rot.string() + "\"", &out, dir) == 1);
    CHECK(tool("pf --config \"" + k.string() + "\"", &out, dir) == 2);
}

TEST_CASE("sweep writes one directory per point and a summary") {
    const fs::path dir = scratch("sweep");
    json c = example("pendulum_sweep.json");
    c["certification"]["n_states"] = 8;
    c["certification"]["n_rays"] = 8;
    c["sweep"] = {{"param", "rho"}, {"values", {3.0, 0.5}}};
    cli::Args a = args_for(write_config(dir, "s.json", c), dir / "out");
    a.threads = 2;
    REQUIRE(cli::cmd_sweep(a) == 0);
    std::ifstream csv(dir / "out" / "sweep.csv");
    std::string header, row1, row2;
    std::getline(csv, header);
    std::getline(csv, row1);
    std::getline(csv, row2);
    CHECK(header == "rho,pass,min_final_margin,exit_code,dir");
    CHECK(row1.rfind("0.5,0,", 0) == 0);
    CHECK(row2.rfind("3,1,", 0) == 0);
    CHECK(fs::exists(dir / "out" / "point_0_rho=0.5" / "certificate.json"));
    CHECK(io::read_json(dir / "out" / "point_1_rho=3" / "config.json").at("rho") == 3.0);

    c["sweep"] = {{"param", "rho"}, {"values", json::array()}};
    CHECK(cli::cmd_sweep(args_for(write_config(dir, "e.json", c), dir / "e")) == 2);
    c["sweep"] = {{"param", "rho"}, {"start", 1.0}, {"stop", 0.0}, {"step", 0.5}};
    CHECK(cli::cmd_sweep(args_for(write_config(dir, "e2.json", c), dir / "e2")) == 2);
}

TEST_CASE("mu sweep on the torus sync cone gives monotone margins") {
    const fs::path dir = scratch("mu");
    json c = example("torus_ring.json");
    c["cone"] = {{"variant", "sync"}, {"m", 1}, {"agents", 3}, {"mu", 1.0}};
    c["integrator"]["T"] = 3.0;
    c["certification"]["n_states"] = 4;
    c["certification"]["n_rays"] = 4;
    c["sweep"] = {{"param", "cone.mu"}, {"values", {1.5, 1.8, 2.1, 2.4, 2.7}}};
    REQUIRE(cli::cmd_sweep(args_for(write_config(dir, "mu.json", c), dir / "out")) == 0);
    std::ifstream csv(dir / "out" / "sweep.csv");
    std::string line;
    std::getline(csv, line);
    std::vector<double> margins;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        REQUIRE(cells.size() == 5);
        CHECK(cells[3] != "2");
        margins.push_back(std::stod(cells[2]));
    }
    REQUIRE(margins.size() == 5);
    for (std::size_t i = 1; i < margins.size(); ++i) CHECK(margins[i] <= margins[i - 1] + 1e-12);
}

TEST_CASE("sync cone margins are non-increasing in mu for fixed vectors") {
    Rng rng(41);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd v = rng.normal_vector(3);
        double prev = INFINITY;
        for (double mu : {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 2.9}) {
            const double m = cones::margin(cones::sync_cone(1, 3, mu), v);
            CHECK(m <= prev);
            prev = m;
        }
    }
}

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.283185307179586, 1e21}) {
        CHECK(std::stod(io::format_double(x)) == x);
    }
    CHECK(io::format_double(3.0) == "3");
}
