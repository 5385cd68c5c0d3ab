#include "invdp/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "invdp/errors.hpp"

namespace invdp::io {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) config_error(std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) config_error(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? number(j, key) : fallback;
}

int integer(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer()) config_error(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

std::string text(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) config_error(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

/// Runs `body`, turning JSON type errors into ConfigError.
template <class F>
auto guarded(F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const json::exception& e) {
        config_error(e.what());
    }
}

json nullable(double x) { return std::isfinite(x) ? json(x + 0.0) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return {buf, res.ptr};
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        config_error(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(nullable(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(nullable(v(i)));
    return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    return guarded([&] {
        if (!j.is_array() || j.empty() || !j.front().is_array()) config_error("matrix must be a nonempty array of rows");
        const auto rows = static_cast<Eigen::Index>(j.size());
        const auto cols = static_cast<Eigen::Index>(j.front().size());
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const json& row = j.at(static_cast<std::size_t>(r));
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) config_error("ragged matrix rows");
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
        return m;
    });
}

Eigen::VectorXd vector_from_json(const json& j) {
    return guarded([&] {
        if (!j.is_array()) config_error("vector must be an array of numbers");
        Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
        return v;
    });
}

json to_json(const ConeSpec& cone) {
    if (const auto* p = cone.as<PolyhedralCone>()) {
        return {{"variant", "polyhedral"}, {"normals", to_json(p->normals)}, {"two_sided", p->two_sided}};
    }
    if (const auto* q = cone.as<QuadraticCone>()) return {{"variant", "quadratic"}, {"P", to_json(q->P)}, {"k", q->k}};
    if (const auto* o = cone.as<OrthantCone>()) return {{"variant", "orthant"}, {"n", o->n}, {"two_sided", o->two_sided}};
    const auto* s = cone.as<SyncCone>();
    return {{"variant", "sync"}, {"m", s->m}, {"agents", s->agents}, {"mu", s->mu}};
}

ConeSpec cone_from_json(const json& j) {
    return guarded([&]() -> ConeSpec {
        const std::string type = j.contains("variant") ? text(j, "variant") : text(j, "type");
        if (type == "polyhedral") {
            return cones::make_polyhedral(matrix_from_json(require(j, "normals")), j.value("two_sided", true));
        }
        if (type == "quadratic") return cones::make_quadratic(matrix_from_json(require(j, "P")));
        if (type == "orthant") return cones::make_orthant(integer(j, "n"), j.value("two_sided", true));
        if (type == "sync") return cones::sync_cone(j.value("m", 1), integer(j, "agents"), number(j, "mu"));
        config_error("unknown cone variant '" + type + "'");
    });
}

json to_json(const Certificate& cert) {
    json j = {{"positive", cert.positive}, {"strict", cert.strict},   {"margin", nullable(cert.margin)},
              {"mode", to_string(cert.mode)}, {"n_rays", cert.n_rays}, {"seed", cert.seed}};
    j["witness"] = cert.witness ? to_json(*cert.witness) : json(nullptr);
    return j;
}

json to_json(const PFSplit& split) {
    json eig = json::array();
    for (Eigen::Index i = 0; i < split.eigenvalues.size(); ++i) {
        eig.push_back({nullable(split.eigenvalues(i).real()), nullable(split.eigenvalues(i).imag())});
    }
    return {{"W1", to_json(split.W1)}, {"W2", to_json(split.W2)}, {"gap", nullable(split.gap)}, {"eigenvalues", eig}};
}

json to_json(const DPCertificate& cert) {
    json j = {{"pass", cert.pass},
              {"T", cert.T},
              {"eps", cert.eps},
              {"n_states", cert.n_states},
              {"n_rays", cert.n_rays},
              {"seed", cert.seed},
              {"h", cert.h},
              {"h_report", cert.h_report},
              {"min_final_margin", nullable(cert.min_final_margin)}};
    if (cert.worst_case) {
        const WorstCase& w = *cert.worst_case;
        j["worst_case"] = {{"state", w.state}, {"ray", w.ray},         {"time", w.time}, {"margin", nullable(w.margin)},
                           {"point", to_json(w.point)}, {"ray_vector", to_json(w.ray_vector)}};
    } else {
        j["worst_case"] = nullptr;
    }
    json voided = json::array();
    for (const VoidedState& v : cert.voided) voided.push_back({{"state", v.state}, {"time", v.time}, {"reason", v.reason}});
    j["voided"] = voided;
    j["notes"] = cert.notes;
    return j;
}

Digraph graph_from_json(const json& model) {
    return guarded([&] {
        const int n = integer(model, "N");
        if (n < 1) config_error("N must be positive");
        std::vector<Edge> edges;
        if (model.contains("edges")) {
            for (const json& e : model.at("edges")) {
                if (!e.is_array() || e.size() != 2) config_error("edges must be [k, i] pairs");
                edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
            }
        } else {
            const std::string kind = model.value("graph", std::string("complete"));
            if (kind == "complete") {
                edges = Digraph::complete(n).edges();
            } else if (kind == "ring") {
                edges = Digraph::ring(n).edges();
            } else {
                config_error("unknown graph '" + kind + "'");
            }
        }
        Digraph graph(n, std::move(edges));
        if (model.contains("schedule")) {
            const json& s = model.at("schedule");
            std::vector<std::vector<double>> weights;
            for (const json& row : require(s, "weights")) weights.push_back(row.get<std::vector<double>>());
            graph.set_schedule(std::move(weights), number(s, "dwell"));
        }
        if (model.contains("delta")) graph.set_delta(number(model, "delta"));
        return graph;
    });
}

Coupling coupling_from_json(const json& j) {
    return guarded([&] {
        const std::string kind = text(j, "kind");
        CouplingParams params;
        params.gain = number_or(j, "gain", 1.0);
        if (kind == "Sine") return make_coupling(CouplingKind::Sine, params);
        if (kind == "BarrierSync") return make_coupling(CouplingKind::BarrierSync, params);
        if (kind == "RepulsiveBalance") return make_coupling(CouplingKind::RepulsiveBalance, params);
        if (kind == "LinearGain") return make_coupling(CouplingKind::LinearGain, params);
        config_error("unknown coupling kind '" + kind + "'");
    });
}

SO3Reshape reshape_from_json(const json& j) {
    return guarded([&] {
        const std::string kind = text(j, "kind");
        const double gain = number_or(j, "gain", 1.0);
        if (kind == "linear") return make_reshape(ReshapeKind::Linear, gain);
        if (kind == "sin_half") return make_reshape(ReshapeKind::SinHalf, gain);
        if (kind == "tan_half") return make_reshape(ReshapeKind::TanHalf, gain);
        config_error("unknown reshape kind '" + kind + "'");
    });
}

SystemSpec model_from_json(const json& model) {
    return guarded([&]() -> SystemSpec {
        const std::string name = text(model, "model");
        if (name == "pendulum") return models::pendulum(number(model, "rho"), number_or(model, "u", 0.0));
        if (name == "torus_consensus") {
            const Digraph graph = graph_from_json(model);
            std::vector<Coupling> couplings;
            if (model.contains("couplings")) {
                for (const json& c : model.at("couplings")) couplings.push_back(coupling_from_json(c));
            } else {
                couplings.push_back(coupling_from_json(require(model, "coupling")));
            }
            Eigen::VectorXd omega = model.contains("omega") ? vector_from_json(model.at("omega"))
                                                            : Eigen::VectorXd::Zero(graph.size());
            if (omega.size() != graph.size()) config_error("omega must have N entries");
            return models::torus_consensus(graph, std::move(couplings), omega);
        }
        if (name == "so3_consensus") {
            const Digraph graph = graph_from_json(model);
            const SO3Reshape f = model.contains("reshape") ? reshape_from_json(model.at("reshape"))
                                                           : make_reshape(ReshapeKind::Linear);
            std::vector<Eigen::Vector3d> omegas(static_cast<std::size_t>(graph.size()), Eigen::Vector3d::Zero());
            if (model.contains("Omega")) {
                const json& o = model.at("Omega");
                if (!o.empty() && o.front().is_number()) {
                    const Eigen::VectorXd w = vector_from_json(o);
                    if (w.size() != 3) config_error("Omega must be a 3-vector or one per agent");
                    for (auto& x : omegas) x = w;
                } else {
                    if (o.size() != omegas.size()) config_error("Omega needs one 3-vector per agent");
                    for (std::size_t k = 0; k < omegas.size(); ++k) {
                        const Eigen::VectorXd w = vector_from_json(o.at(k));
                        if (w.size() != 3) config_error("Omega entries must be 3-vectors");
                        omegas[k] = w;
                    }
                }
            }
            return models::so3_consensus(graph, f, omegas);
        }
        if (name == "linear_consensus") {
            const std::string time = model.value("time", std::string("continuous"));
            if (time != "continuous" && time != "discrete") config_error("time must be continuous or discrete");
            return models::linear_consensus(graph_from_json(model),
                                            time == "discrete" ? TimeKind::Discrete : TimeKind::Continuous);
        }
        config_error("unknown model '" + name + "'");
    });
}

Point point_from_json(const GroupSpec& group, const json& j) {
    return guarded([&] {
        if (group.has_rotations()) {
            if (!j.is_array() || static_cast<int>(j.size()) != group.count()) {
                config_error("initial state needs one rotation vector per agent");
            }
            std::vector<Eigen::Matrix3d> rs;
            for (const json& w : j) {
                const Eigen::VectorXd v = vector_from_json(w);
                if (v.size() != 3) config_error("rotation vectors must have 3 entries");
                rs.push_back(lie::so3_exp(v));
            }
            return Point::from_rotations(group, std::move(rs));
        }
        const Eigen::VectorXd x = vector_from_json(j);
        if (x.size() != group.dim()) config_error("initial state has the wrong length");
        return Point::from_coords(group, x);
    });
}

RegionSampler region_from_json(const GroupSpec& group, const json& j) {
    return guarded([&] {
        const std::string type = text(j, "type");
        if (type == "box") {
            return RegionSampler::box(group, vector_from_json(require(j, "lo")), vector_from_json(require(j, "hi")));
        }
        if (type == "torus_gap") return RegionSampler::torus_gap(group.count(), number(j, "max_gap"));
        if (type == "torus_separated") return RegionSampler::torus_separated(group.count(), number(j, "min_gap"));
        if (type == "so3_ball") return RegionSampler::so3_ball(group.count(), number(j, "radius"));
        config_error("unknown region type '" + type + "'");
    });
}

std::vector<std::string> state_columns(const GroupSpec& group) {
    std::vector<std::string> cols;
    switch (group.kind()) {
        case GroupKind::CylinderS1R: return {"theta", "v"};
        case GroupKind::SO3:
        case GroupKind::SO3Power:
            for (int k = 1; k <= group.count(); ++k) {
                for (int r = 1; r <= 3; ++r) {
                    for (int c = 1; c <= 3; ++c) {
                        cols.push_back("r" + std::to_string(k) + "_" + std::to_string(r) + std::to_string(c));
                    }
                }
            }
            return cols;
        default:
            for (int i = 1; i <= group.dim(); ++i) cols.push_back("q_" + std::to_string(i));
            return cols;
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const GroupSpec& group) {
    out << 't';
    for (const auto& c : state_columns(group)) out << ',' << c;
    if (traj.has_tangents()) {
        for (int i = 1; i <= group.dim(); ++i) out << ",v_" << i;
    }
    out << '\n';
    for (std::size_t s = 0; s < traj.size(); ++s) {
        out << format_double(traj.times[s]);
        const Eigen::VectorXd x = traj.points[s].flatten();
        for (Eigen::Index i = 0; i < x.size(); ++i) out << ',' << format_double(x(i));
        if (traj.has_tangents()) {
            const Eigen::MatrixXd& v = traj.tangents[s];
            for (Eigen::Index i = 0; i < v.rows(); ++i) out << ',' << format_double(v(i, 0));
        }
        out << '\n';
    }
}

}  // namespace invdp::io
