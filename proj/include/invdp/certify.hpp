#pragma once

// Trajectory-level certification of uniform strict differential positivity
// and attractor diagnostics.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "invdp/cones.hpp"
#include "invdp/dynamics.hpp"

namespace invdp {

enum class RegionKind { Box, TorusGap, TorusSeparated, SO3Ball };

std::string to_string(RegionKind kind);

/// Sampling domain for initial states. Membership is also used to detect
/// trajectories that leave the region.
class RegionSampler {
public:
    /// Box in coordinates (Circle, Torus, CylinderS1R, EuclideanRn). Angle
    /// components spanning 2pi or more impose no constraint.
    static RegionSampler box(const GroupSpec& group, Eigen::VectorXd lo, Eigen::VectorXd hi);
    /// Torus points whose shortest enclosing arc is at most `max_gap`.
    static RegionSampler torus_gap(int n, double max_gap);
    /// Torus points whose consecutive circular gaps are all at least `min_gap`.
    static RegionSampler torus_separated(int n, double min_gap);
    /// SO(3)^N points with every pairwise distance below `radius`.
    static RegionSampler so3_ball(int n, double radius);

    [[nodiscard]] RegionKind kind() const noexcept { return kind_; }
    [[nodiscard]] const GroupSpec& group() const noexcept { return group_; }
    [[nodiscard]] double parameter() const noexcept { return parameter_; }
    [[nodiscard]] const Eigen::VectorXd& lo() const noexcept { return lo_; }
    [[nodiscard]] const Eigen::VectorXd& hi() const noexcept { return hi_; }

    [[nodiscard]] std::vector<Point> sample(std::uint64_t seed, int count) const;
    [[nodiscard]] bool contains(const Point& g) const;

private:
    RegionSampler(RegionKind kind, GroupSpec group) : kind_(kind), group_(group) {}

    RegionKind kind_;
    GroupSpec group_;
    double parameter_ = 0.0;
    Eigen::VectorXd lo_;
    Eigen::VectorXd hi_;
};

struct CertifyOptions {
    double T = 5.0;
    double eps = 0.05;
    int n_states = 32;
    int n_rays = 32;
    std::uint64_t seed = 0;
    double h = dynamics::kDefaultStep;
    /// Grading interval; 0 selects 10 h.
    double h_report = 0.0;
    /// 0 selects std::thread::hardware_concurrency().
    int threads = 1;
};

struct WorstCase {
    int state = 0;
    int ray = 0;
    double time = 0.0;
    double margin = 0.0;
    Eigen::VectorXd point;  // flattened state at t = 0
    Eigen::VectorXd ray_vector;
};

struct VoidedState {
    int state = 0;
    double time = 0.0;
    std::string reason;
};

struct DPCertificate {
    bool pass = false;
    double T = 0.0;
    double eps = 0.0;
    int n_states = 0;
    int n_rays = 0;
    std::uint64_t seed = 0;
    double h = 0.0;
    double h_report = 0.0;
    /// Minimum margin over all propagated rays at the final sample time.
    double min_final_margin = 0.0;
    /// Failing (state, ray, time) when !pass, otherwise the smallest final margin.
    std::optional<WorstCase> worst_case;
    std::vector<VoidedState> voided;
    std::vector<std::string> notes;
};

namespace certify {

DPCertificate certify_diffpos(const SystemSpec& sys, const ConeSpec& cone, const RegionSampler& region,
                              const CertifyOptions& options = {});

struct PhaseLock {
    double residual = 0.0;
    double locked_freq = 0.0;
};

/// Frequencies are body-field values at the recorded samples of the last
/// `window` time units. Throws WindowTooShort when fewer than two samples fall
/// in the window or the trajectory is shorter than the window.
PhaseLock phase_lock_residual(const SystemSpec& sys, const Trajectory& traj, double window);

/// max_k |gap_k - 2pi/N| over the sorted circular gaps.
double splay_check(const Point& theta);

/// Largest pairwise distance between SO(3) agents.
double sync_distance(const Point& g);

/// True when the span of `basis` (frame coordinates) is closed under the bracket.
bool check_invariant_distribution(const GroupSpec& group, const std::vector<Eigen::VectorXd>& basis);

/// Phi per recorded sample for tangent column `column`: |off-span part| / |in-span part|
/// with an orthogonal split; +inf when the in-span part vanishes.
std::vector<double> alignment_ratio(const Trajectory& traj, const std::vector<Eigen::VectorXd>& dominant_basis,
                                    int column = 0);

}  // namespace certify
}  // namespace invdp
