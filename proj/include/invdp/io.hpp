#pragma once

// JSON (de)serialization of configs and results, and CSV writers.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "invdp/certify.hpp"
#include "invdp/cones.hpp"
#include "invdp/dynamics.hpp"
#include "invdp/models.hpp"
#include "invdp/positivity.hpp"

namespace invdp::io {

using nlohmann::json;

/// Reads and parses a JSON file; throws ConfigError on I/O or syntax errors.
json read_json(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);

json to_json(const ConeSpec& cone);
json to_json(const Certificate& cert);
json to_json(const PFSplit& split);
json to_json(const DPCertificate& cert);

/// {"variant": "polyhedral", "normals": [[...]], "two_sided": true} |
/// {"variant": "quadratic", "P": [[...]]} | {"variant": "orthant", "n": 3, "two_sided": true} |
/// {"variant": "sync", "m": 1, "agents": 3, "mu": 1.5}. "type" is accepted as an alias of "variant".
ConeSpec cone_from_json(const json& j);

Eigen::MatrixXd matrix_from_json(const json& j);
Eigen::VectorXd vector_from_json(const json& j);
json to_json(const Eigen::MatrixXd& m);
json to_json(const Eigen::VectorXd& v);

/// "edges": [[k, i], ...] or "graph": "complete" | "ring"; optional
/// "schedule": {"dwell": d, "weights": [[...], ...]} and "delta".
Digraph graph_from_json(const json& model);

Coupling coupling_from_json(const json& j);
SO3Reshape reshape_from_json(const json& j);

/// Model config with fields at the top level, e.g.
/// {"model": "torus_consensus", "N": 3, "edges": [[0,1],...], "coupling": {"kind": "BarrierSync"}, "omega": [...]}.
SystemSpec model_from_json(const json& model);

/// Initial state: coordinates for coordinate groups, rotation vectors
/// ([[x,y,z], ...], one per agent) for SO(3)^N.
Point point_from_json(const GroupSpec& group, const json& j);

/// {"type": "box", "lo": [...], "hi": [...]} | {"type": "torus_gap", "max_gap": g} |
/// {"type": "torus_separated", "min_gap": g} | {"type": "so3_ball", "radius": r}
RegionSampler region_from_json(const GroupSpec& group, const json& j);

/// Column names for a state of `group`: theta,v for the pendulum cylinder,
/// q_1..q_N otherwise, r<k>_<ij> (row-major) per SO(3) agent.
std::vector<std::string> state_columns(const GroupSpec& group);

/// Header `t,<state columns>[,v_1..v_n]`; tangents written for column 0.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const GroupSpec& group);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace invdp::io
