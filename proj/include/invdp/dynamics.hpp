#pragma once

// Flows and variational flows on Lie groups in left-invariant frame
// coordinates. Systems are written as g' = g * Omega(t, g) with Omega the
// body velocity; tangents v evolve as v' = A(t, g) v where A is the
// frame-coordinate linearization (the derivative of Omega along the frame
// plus the bracket term -[Omega, v]).

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invdp/errors.hpp"
#include "invdp/lie.hpp"

namespace invdp {

using BodyField = std::function<Eigen::VectorXd(double t, const Point& g)>;
using Linearization = std::function<Eigen::MatrixXd(double t, const Point& g)>;
using GroupMap = std::function<Point(const Point& g)>;

struct ModelMeta {
    std::string model;
    std::map<std::string, double> params;
};

struct SystemSpec {
    GroupSpec group = GroupSpec::circle();
    BodyField field;
    /// Analytic frame linearization; empty when unavailable.
    Linearization linearization;
    /// Discrete-time map x+ = F(t, x) for discrete systems; empty for flows.
    std::function<Point(double t, const Point& g)> discrete_map;
    ModelMeta meta;
};

/// Base points with optional tangent bundles (n x r, one column per tangent).
struct Trajectory {
    std::vector<double> times;
    std::vector<Point> points;
    std::vector<Eigen::MatrixXd> tangents;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool has_tangents() const noexcept { return !tangents.empty(); }
};

/// Raised when |Omega| exceeds the blow-up guard; carries the partial trajectory.
class FieldBlowUpError : public Error {
public:
    FieldBlowUpError(const std::string& what, Trajectory partial, double time)
        : Error(ErrorCode::FieldBlowUp, what), partial_(std::move(partial)), time_(time) {}

    [[nodiscard]] const Trajectory& partial() const noexcept { return partial_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    Trajectory partial_;
    double time_;
};

namespace dynamics {

inline constexpr double kDefaultStep = 1e-3;
inline constexpr double kDefaultFdStep = 1e-5;
inline constexpr double kBlowUpBound = 1e6;

struct FlowOptions {
    double h = kDefaultStep;
    /// Record every `stride`-th step (the final step is always recorded).
    int stride = 1;
    double t0 = 0.0;
    /// Fall back to finite differences when the system has no analytic linearization.
    bool allow_fd = false;
    /// Rescale each tangent column to unit norm at every recorded sample.
    bool renormalize = false;
    /// Called at each recorded sample; returning false stops the integration early.
    std::function<bool(double t, const Point& g, const Eigen::MatrixXd* tangents)> observer;
};

/// Fixed-step 4-stage Runge-Kutta-Munthe-Kaas integration over [t0, t0 + T].
Trajectory flow(const SystemSpec& sys, const Point& g0, double T, const FlowOptions& options = {});

/// Joint integration of the base point and tangents v' = A(t, g) v.
Trajectory variational_flow(const SystemSpec& sys, const Point& g0, const Eigen::MatrixXd& v0, double T,
                            const FlowOptions& options = {});

/// Central differences of Omega along the frame with one Richardson level, plus
/// the bracket correction -[Omega(g), e_j].
Eigen::MatrixXd fd_linearization(const SystemSpec& sys, const Point& g, double h_fd = kDefaultFdStep,
                                 double t = 0.0);

/// Frame-coordinate action of dL_{g F(g)^-1} dF|_g on v by finite differences.
Eigen::VectorXd discrete_pushforward(const GroupMap& F, const Point& g, const Eigen::VectorXd& v,
                                     double h_fd = kDefaultFdStep);

/// Truncated inverse of the left-trivialized differential of exp:
/// w + 1/2 [u, w] + 1/12 [u, [u, w]].
Eigen::VectorXd dexp_inv(const GroupSpec& group, const Eigen::VectorXd& u, const Eigen::VectorXd& w);

}  // namespace dynamics
}  // namespace invdp
