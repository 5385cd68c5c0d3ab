#pragma once

// Concrete systems: the damped pendulum on S^1 x R, consensus protocols on
// the N-torus and on SO(3)^N, and linear consensus on R^N.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "invdp/dynamics.hpp"
#include "invdp/positivity.hpp"

namespace invdp {

struct Edge {
    int from = 0;  // k: the agent that listens
    int to = 0;    // i: the agent being listened to

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed graph with piecewise-constant edge weights over dwell intervals.
class Digraph {
public:
    Digraph(int n, std::vector<Edge> edges);

    static Digraph complete(int n);
    /// Bidirectional ring 0-1-...-(n-1)-0.
    static Digraph ring(int n);
    /// Adds (i,k) for every (k,i).
    static Digraph undirected(int n, const std::vector<std::pair<int, int>>& pairs);

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] bool has_edge(int k, int i) const;
    [[nodiscard]] bool strongly_connected() const;
    [[nodiscard]] bool is_bidirectional() const;

    /// Each schedule entry holds one weight per edge; entry j is active on
    /// [j * dwell, (j + 1) * dwell) and the schedule repeats. Throws
    /// InvalidWeights on negative weights or a violated delta bound.
    void set_schedule(std::vector<std::vector<double>> schedule, double dwell);
    void set_delta(double delta);
    [[nodiscard]] std::optional<double> delta() const noexcept { return delta_; }
    [[nodiscard]] double weight(std::size_t edge, double t) const;

private:
    void validate_schedule() const;

    int n_;
    std::vector<Edge> edges_;
    std::vector<std::vector<double>> schedule_;
    double dwell_ = 1.0;
    std::optional<double> delta_;
};

enum class CouplingKind { Sine, BarrierSync, RepulsiveBalance, LinearGain, Custom };

std::string to_string(CouplingKind kind);

/// Scalar coupling on angle differences.
struct Coupling {
    CouplingKind kind = CouplingKind::Sine;
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    /// Open interval on which f is evaluated; differences are wrapped into
    /// (-pi, pi] or, when `wrap_positive`, into [0, 2pi).
    double lo = -M_PI;
    double hi = M_PI;
    bool wrap_positive = false;
    /// Interval on which f' > 0 is guaranteed.
    double monotone_lo = -M_PI;
    double monotone_hi = M_PI;

    /// Wrapped difference; throws DomainViolation outside (lo, hi).
    [[nodiscard]] double argument(double difference) const;
    [[nodiscard]] double value(double difference) const { return f(argument(difference)); }
    [[nodiscard]] double slope(double difference) const { return fprime(argument(difference)); }
};

struct CouplingParams {
    double gain = 1.0;
};

/// BarrierSync: gain * tan(a/2); RepulsiveBalance: -gain * cot(a/2) on (0, 2pi);
/// Sine: gain * sin(a), monotone on (-pi/2, pi/2); LinearGain: gain * a.
Coupling make_coupling(CouplingKind kind, const CouplingParams& params = {});
Coupling make_custom_coupling(std::function<double(double)> f, std::function<double(double)> fprime, double lo,
                              double hi);

enum class ReshapeKind { Linear, SinHalf, TanHalf };

/// Reshaping function on [0, pi): f(0) = 0, f' > 0.
struct SO3Reshape {
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    bool barrier = false;
};

SO3Reshape make_reshape(ReshapeKind kind, double gain = 1.0);

namespace models {

SystemSpec pendulum(double rho, double u);

/// One coupling per edge (edge order of the graph) or a single shared coupling.
SystemSpec torus_consensus(const Digraph& graph, std::vector<Coupling> couplings, const Eigen::VectorXd& omegas);

/// Pairwise linearization block in the adapted basis {radial, u2, u3 = u2 x radial}.
Eigen::Matrix3d so3_block(const SO3Reshape& f, double r);

/// The same operator for the geodesic with frame-coordinate log vector x (|x| = r),
/// conjugated into frame coordinates through an explicit orthonormal completion.
Eigen::Matrix3d so3_block_frame(const SO3Reshape& f, const Eigen::Vector3d& x);

/// Coupling part of the SO(3)^N linearization: blocks A_ki = A(x_ki) and
/// A_kk = -sum_i A(x_ki), without the intrinsic-velocity bracket terms.
Eigen::MatrixXd so3_coupling_matrix(const Digraph& graph, const SO3Reshape& f, const Point& g, double t = 0.0);

/// Full frame linearization: so3_coupling_matrix plus blockdiag(-hat(Omega_k)).
SystemSpec so3_consensus(const Digraph& graph, const SO3Reshape& f, const std::vector<Eigen::Vector3d>& intrinsic);

/// Consensus matrix at time t: Laplacian form for continuous time, row-stochastic
/// with self-weight 1 - sum for discrete time (weights scaled so rows sum to <= 1).
Eigen::MatrixXd consensus_matrix(const Digraph& graph, TimeKind time, double t);

SystemSpec linear_consensus(const Digraph& graph, TimeKind time);

}  // namespace models
}  // namespace invdp
