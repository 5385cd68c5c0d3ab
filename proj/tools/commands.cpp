#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "invdp/certify.hpp"
#include "invdp/io.hpp"

namespace invdp::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("INVDP_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid INVDP_THREADS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// The model config is either the object under "system" or the top level
/// itself when "model" holds the model name.
const json& model_section(const json& config) {
    if (config.contains("system")) return config.at("system");
    if (config.contains("model") && config.at("model").is_string()) return config;
    throw Error(ErrorCode::ConfigError, "config needs a model (top-level \"model\" name or a \"system\" object)");
}

struct Integrator {
    double h = dynamics::kDefaultStep;
    double T = 0.0;
    double h_report = 0.0;
};

Integrator integrator_from(const json& config) {
    if (!config.contains("integrator")) throw Error(ErrorCode::ConfigError, "missing field 'integrator'");
    const json& j = config.at("integrator");
    Integrator out;
    try {
        out.h = j.value("h", dynamics::kDefaultStep);
        out.T = j.at("T").get<double>();
        out.h_report = j.value("h_report", 10.0 * out.h);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("integrator: ") + e.what());
    }
    if (!(out.h > 0.0) || !(out.T > 0.0) || !(out.h_report >= out.h)) {
        throw Error(ErrorCode::ConfigError, "integrator needs h > 0, T > 0 and h_report >= h");
    }
    return out;
}

fs::path prepare_out(const Args& args) {
    if (args.out.empty()) throw Error(ErrorCode::ConfigError, "--out is required");
    fs::create_directories(args.out);
    return args.out;
}

/// Dominant frame directions of the consensus models: the diagonal 1 (torus)
/// or the three interleaved 1_j (SO(3)^N).
std::optional<std::vector<Eigen::VectorXd>> dominant_basis(const GroupSpec& group) {
    if (group.kind() == GroupKind::Torus) return std::vector<Eigen::VectorXd>{Eigen::VectorXd::Ones(group.dim())};
    if (group.kind() == GroupKind::SO3Power) {
        const Eigen::MatrixXd gens = cones::sync_generators(3, group.count());
        std::vector<Eigen::VectorXd> out;
        for (Eigen::Index j = 0; j < gens.cols(); ++j) out.emplace_back(gens.col(j));
        return out;
    }
    return std::nullopt;
}

void write_diagnostics(const fs::path& path, const SystemSpec& sys, const Trajectory& traj) {
    const GroupSpec& group = sys.group;
    const bool torus = group.kind() == GroupKind::Torus && sys.field;
    const bool so3 = group.kind() == GroupKind::SO3Power;
    const auto basis = dominant_basis(group);
    std::vector<double> phi;
    if (traj.has_tangents() && basis) phi = certify::alignment_ratio(traj, *basis);

    std::ofstream out(path);
    out << 't';
    if (!phi.empty()) out << ",phi";
    if (torus) out << ",residual";
    if (so3) out << ",sync_dist";
    out << '\n';
    for (std::size_t s = 0; s < traj.size(); ++s) {
        out << io::format_double(traj.times[s]);
        if (!phi.empty()) out << ',' << io::format_double(phi[s]);
        if (torus) {
            // Points of a blown-up run may lie where the field cannot be evaluated.
            try {
                const Eigen::VectorXd w = sys.field(traj.times[s], traj.points[s]);
                out << ',' << io::format_double((w.array() - w.mean()).abs().maxCoeff());
            } catch (const Error&) {
                out << ",nan";
            }
        }
        if (so3) out << ',' << io::format_double(certify::sync_distance(traj.points[s]));
        out << '\n';
    }
}

Trajectory iterate_map(const SystemSpec& sys, const Point& x0, double T) {
    Trajectory traj;
    Point x = x0;
    const int steps = static_cast<int>(std::floor(T + 1e-9));
    traj.times.push_back(0.0);
    traj.points.push_back(x);
    for (int k = 0; k < steps; ++k) {
        x = sys.discrete_map(static_cast<double>(k), x);
        traj.times.push_back(static_cast<double>(k + 1));
        traj.points.push_back(x);
    }
    return traj;
}

template <class F>
int guard_config(F&& body) {
    try {
        return body();
    } catch (const FieldBlowUpError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBlowUp;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

struct CertifyJob {
    SystemSpec sys;
    ConeSpec cone;
    RegionSampler region;
    CertifyOptions options;
};

CertifyJob certify_job(const json& config, std::optional<std::uint64_t> seed, int threads) {
    SystemSpec sys = io::model_from_json(model_section(config));
    if (!config.contains("cone")) throw Error(ErrorCode::ConfigError, "missing field 'cone'");
    if (!config.contains("certification")) throw Error(ErrorCode::ConfigError, "missing field 'certification'");
    ConeSpec cone = io::cone_from_json(config.at("cone"));
    const json& c = config.at("certification");
    const Integrator integ = integrator_from(config);
    CertifyOptions options;
    options.T = integ.T;
    options.h = integ.h;
    options.h_report = integ.h_report;
    try {
        options.eps = c.at("eps").get<double>();
        options.n_states = c.value("n_states", 32);
        options.n_rays = c.value("n_rays", 32);
        if (!seed && !c.contains("seed")) throw Error(ErrorCode::ConfigError, "certification needs a seed");
        options.seed = seed ? *seed : c.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("certification: ") + e.what());
    }
    options.threads = threads;
    if (!c.contains("region")) throw Error(ErrorCode::ConfigError, "certification needs a region");
    RegionSampler region = io::region_from_json(sys.group, c.at("region"));
    return {std::move(sys), std::move(cone), std::move(region), options};
}

/// Sets the value at a dotted path ("rho", "cone.mu", "certification.eps").
void set_path(json& config, const std::string& path, double value) {
    json* node = &config;
    if (path.find('.') == std::string::npos && !config.contains(path) && config.contains("system")) {
        node = &config.at("system");
    }
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key)) throw Error(ErrorCode::ConfigError, "sweep path '" + path + "' not found");
        node = &node->at(key);
        start = dot + 1;
    }
}

std::vector<double> sweep_grid(const json& sweep) {
    std::vector<double> grid;
    if (sweep.contains("values")) {
        grid = sweep.at("values").get<std::vector<double>>();
    } else if (sweep.contains("start")) {
        const double start = sweep.at("start").get<double>();
        const double stop = sweep.at("stop").get<double>();
        const double step = sweep.at("step").get<double>();
        if (!(step > 0.0)) throw Error(ErrorCode::ConfigError, "sweep step must be positive");
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
        for (long i = 0; i <= count; ++i) grid.push_back(start + static_cast<double>(i) * step);
    }
    return grid;
}

}  // namespace

int cmd_simulate(const Args& args) {
    const auto started = std::chrono::steady_clock::now();
    return guard_config([&] {
        const json config = io::read_json(args.config);
        const SystemSpec sys = io::model_from_json(model_section(config));
        const Integrator integ = integrator_from(config);
        if (!config.contains("initial")) throw Error(ErrorCode::ConfigError, "missing field 'initial'");
        const Point g0 = io::point_from_json(sys.group, config.at("initial"));
        std::optional<Eigen::VectorXd> tangent;
        if (config.contains("tangent")) {
            tangent = io::vector_from_json(config.at("tangent"));
            if (tangent->size() != sys.group.dim()) throw Error(ErrorCode::ConfigError, "tangent has the wrong length");
        }
        const fs::path out = prepare_out(args);

        Trajectory traj;
        std::optional<FieldBlowUpError> blow_up;
        try {
            if (sys.discrete_map) {
                traj = iterate_map(sys, g0, integ.T);
            } else {
                dynamics::FlowOptions flow;
                flow.h = integ.h;
                flow.stride = std::max(1, static_cast<int>(std::lround(integ.h_report / integ.h)));
                flow.allow_fd = true;
                traj = tangent ? dynamics::variational_flow(sys, g0, *tangent, integ.T, flow)
                               : dynamics::flow(sys, g0, integ.T, flow);
            }
        } catch (const FieldBlowUpError& e) {
            blow_up = e;
            traj = e.partial();
        }

        {
            std::ofstream csv(out / "trajectory.csv");
            io::write_trajectory_csv(csv, traj, sys.group);
        }
        write_diagnostics(out / "diagnostics.csv", sys, traj);

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json run = {{"config", config},
                    {"version", kVersion},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"samples", traj.size()},
                    {"wall_time_s", wall},
                    {"status", blow_up ? "blow-up" : "ok"}};
        if (blow_up) run["blow_up"] = {{"time", blow_up->time()}, {"message", blow_up->what()}};
        io::write_json(out / "run.json", run);
        if (blow_up) {
            std::cerr << "error: " << blow_up->what() << '\n';
            return kExitBlowUp;
        }
        return kExitOk;
    });
}

int cmd_certify(const Args& args) {
    return guard_config([&] {
        const json config = io::read_json(args.config);
        const CertifyJob job = certify_job(config, args.seed, resolve_threads(args.threads));
        const fs::path out = prepare_out(args);
        const DPCertificate cert = certify::certify_diffpos(job.sys, job.cone, job.region, job.options);
        io::write_json(out / "certificate.json", io::to_json(cert));
        std::cerr << (cert.pass ? "pass" : "fail") << ": min_final_margin = " << cert.min_final_margin << '\n';
        return cert.pass ? kExitOk : kExitNegative;
    });
}

int cmd_pf(const Args& args) {
    return guard_config([&] {
        Eigen::MatrixXd matrix;
        json cone_json;
        std::uint64_t seed = args.seed.value_or(0);
        if (!args.config.empty()) {
            const json config = io::read_json(args.config);
            if (!config.contains("matrix") || !config.contains("cone")) {
                throw Error(ErrorCode::ConfigError, "pf config needs 'matrix' and 'cone'");
            }
            matrix = io::matrix_from_json(config.at("matrix"));
            cone_json = config.at("cone");
            if (!args.seed && config.contains("seed")) seed = config.at("seed").get<std::uint64_t>();
        } else {
            if (args.matrix.empty() || args.cone.empty()) {
                throw Error(ErrorCode::ConfigError, "pf needs --config or both --matrix and --cone");
            }
            const json m = io::read_json(args.matrix);
            matrix = io::matrix_from_json(m.is_object() ? m.at("matrix") : m);
            cone_json = io::read_json(args.cone);
        }
        if (matrix.rows() != matrix.cols()) throw Error(ErrorCode::ConfigError, "matrix must be square");
        const ConeSpec cone = io::cone_from_json(cone_json);
        const LinearMap map(matrix);
        CheckOptions options;
        options.seed = seed;
        Certificate cert;
        try {
            cert = positivity::is_positive_map(map, cone, options);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UnsupportedCombination) throw;
            options.mode = CheckMode::Sampled;
            cert = positivity::is_positive_map(map, cone, options);
        }
        if (!cert.strict) {
            std::cerr << "not strictly positive: " << io::to_json(cert).dump() << '\n';
            return kExitNegative;
        }
        try {
            const PFSplit split = positivity::pf_split(map, cone, seed);
            std::cout << io::to_json(split).dump(2) << '\n';
        } catch (const Error& e) {
            if (e.code() != ErrorCode::GapDegenerate && e.code() != ErrorCode::ConeViolation) throw;
            std::cerr << "error: " << e.what() << '\n';
            return kExitNegative;
        }
        return kExitOk;
    });
}

int cmd_sweep(const Args& args) {
    return guard_config([&] {
        const json config = io::read_json(args.config);
        if (!config.contains("sweep")) throw Error(ErrorCode::ConfigError, "missing field 'sweep'");
        const json& sweep = config.at("sweep");
        if (!sweep.contains("param")) throw Error(ErrorCode::ConfigError, "sweep needs 'param'");
        const std::string param = sweep.at("param").get<std::string>();
        std::vector<double> grid = sweep_grid(sweep);
        if (grid.empty()) throw Error(ErrorCode::ConfigError, "empty sweep grid");
        std::sort(grid.begin(), grid.end());
        const fs::path out = prepare_out(args);

        struct PointResult {
            int code = kExitConfig;
            bool pass = false;
            double margin = 0.0;
            std::string dir;
        };
        std::vector<PointResult> results(grid.size());
        auto run_point = [&](std::size_t i) {
            PointResult& r = results[i];
            r.dir = "point_" + std::to_string(i) + "_" + param + "=" + io::format_double(grid[i]);
            r.code = guard_config([&] {
                json point = config;
                point.erase("sweep");
                set_path(point, param, grid[i]);
                const CertifyJob job = certify_job(point, args.seed, 1);
                const fs::path dir = out / r.dir;
                fs::create_directories(dir);
                io::write_json(dir / "config.json", point);
                const DPCertificate cert = certify::certify_diffpos(job.sys, job.cone, job.region, job.options);
                io::write_json(dir / "certificate.json", io::to_json(cert));
                r.pass = cert.pass;
                r.margin = cert.min_final_margin;
                return cert.pass ? kExitOk : kExitNegative;
            });
        };

        const int threads = std::min<int>(resolve_threads(args.threads), static_cast<int>(grid.size()));
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < grid.size(); i = next++) run_point(i);
            });
        }
        for (auto& t : pool) t.join();

        std::ofstream csv(out / "sweep.csv");
        csv << param << ",pass,min_final_margin,exit_code,dir\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const PointResult& r = results[i];
            csv << io::format_double(grid[i]) << ',' << (r.pass ? 1 : 0) << ',' << io::format_double(r.margin) << ','
                << r.code << ',' << r.dir << '\n';
        }
        return kExitOk;
    });
}

int run(int argc, char** argv) {
    CLI::App app{"Invariant differential positivity toolkit"};
    app.require_subcommand(1);
    Args args;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", args.config, "JSON config file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--threads", args.threads, "worker threads (default: INVDP_THREADS or all cores)");
    };
    auto* simulate = app.add_subcommand("simulate", "integrate a trajectory");
    add_common(simulate, true);
    simulate->add_option("--out", args.out, "output directory")->required();
    auto* certify_cmd = app.add_subcommand("certify", "certify differential positivity");
    add_common(certify_cmd, true);
    certify_cmd->add_option("--out", args.out, "output directory")->required();
    auto* pf = app.add_subcommand("pf", "Perron-Frobenius splitting of a linear map");
    add_common(pf, false);
    pf->add_option("--matrix", args.matrix, "JSON matrix file");
    pf->add_option("--cone", args.cone, "JSON cone file");
    pf->add_option("--out", args.out, "unused; output goes to standard output");
    auto* sweep = app.add_subcommand("sweep", "certify over a parameter grid");
    add_common(sweep, true);
    sweep->add_option("--out", args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    for (auto* sub : {simulate, certify_cmd, pf, sweep}) {
        if (sub->count("--seed") > 0) args.seed = seed;
    }
    if (simulate->parsed()) return cmd_simulate(args);
    if (certify_cmd->parsed()) return cmd_certify(args);
    if (pf->parsed()) return cmd_pf(args);
    return cmd_sweep(args);
}

}  // namespace invdp::cli
