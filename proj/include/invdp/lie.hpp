#pragma once

// Lie-group kernels for the groups used by the toolkit: S^1, T^N, SO(3),
// SO(3)^N, S^1 x R and R^N. Tangent vectors are always carried as
// coordinates in the left-invariant orthonormal frame (body / vee
// coordinates), so left translation never changes them.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace invdp {

enum class GroupKind { Circle, Torus, SO3, SO3Power, CylinderS1R, EuclideanRn };

std::string to_string(GroupKind kind);

class GroupSpec {
public:
    static GroupSpec circle() { return {GroupKind::Circle, 1}; }
    static GroupSpec torus(int n);
    static GroupSpec so3() { return {GroupKind::SO3, 1}; }
    static GroupSpec so3_power(int n);
    static GroupSpec cylinder() { return {GroupKind::CylinderS1R, 1}; }
    static GroupSpec euclidean(int n);

    [[nodiscard]] GroupKind kind() const noexcept { return kind_; }
    /// Number of factors (N for Torus, SO3Power and EuclideanRn; 1 otherwise).
    [[nodiscard]] int count() const noexcept { return count_; }
    [[nodiscard]] int dim() const noexcept;
    /// pi for the compact factors, +inf for R^N.
    [[nodiscard]] double injectivity_radius() const noexcept;
    [[nodiscard]] bool is_abelian() const noexcept;
    [[nodiscard]] bool has_rotations() const noexcept;
    [[nodiscard]] std::string name() const;

    friend bool operator==(const GroupSpec&, const GroupSpec&) = default;

private:
    GroupSpec(GroupKind kind, int count) : kind_(kind), count_(count) {}

    GroupKind kind_;
    int count_;
};

/// A group element. Angles are kept wrapped to [0, 2pi); rotations are
/// projected back onto SO(3) on construction.
class Point {
public:
    static Point identity(const GroupSpec& group);
    /// Circle/Torus: angles; CylinderS1R: (angle, real); EuclideanRn: reals.
    static Point from_coords(const GroupSpec& group, const Eigen::VectorXd& coords);
    static Point from_rotations(const GroupSpec& group, std::vector<Eigen::Matrix3d> rotations);
    /// Inverse of flatten().
    static Point from_flat(const GroupSpec& group, const Eigen::VectorXd& flat);

    [[nodiscard]] const GroupSpec& group() const noexcept { return group_; }
    [[nodiscard]] const Eigen::VectorXd& coords() const noexcept { return coords_; }
    [[nodiscard]] const std::vector<Eigen::Matrix3d>& rotations() const noexcept { return rotations_; }
    [[nodiscard]] const Eigen::Matrix3d& rotation(int k) const { return rotations_.at(static_cast<std::size_t>(k)); }

    /// Angles / reals as stored, or 9 row-major entries per rotation.
    [[nodiscard]] Eigen::VectorXd flatten() const;

private:
    Point(GroupSpec group, Eigen::VectorXd coords, std::vector<Eigen::Matrix3d> rotations)
        : group_(group), coords_(std::move(coords)), rotations_(std::move(rotations)) {}

    GroupSpec group_;
    Eigen::VectorXd coords_;
    std::vector<Eigen::Matrix3d> rotations_;
};

/// Result of distance_and_direction; `u` is meaningless when !direction_defined.
struct Geodesic {
    double theta = 0.0;
    Eigen::VectorXd u;
    bool direction_defined = false;
};

namespace lie {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Wrap to [0, 2pi).
double wrap_angle(double a);
/// Wrap to (-pi, pi].
double wrap_difference(double a);

Eigen::Matrix3d hat(const Eigen::Vector3d& w);
/// Throws NotSkew when the asymmetry of `m` exceeds 1e-9.
Eigen::Vector3d vee(const Eigen::Matrix3d& m);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
/// Principal logarithm; throws CutLocus when the rotation angle is within 1e-9 of pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& r);
/// Rotation angle in [0, pi] (total, no cut-locus error).
double so3_angle(const Eigen::Matrix3d& r);
/// Nearest rotation in the Frobenius sense (symmetric polar factor).
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m);

Point exp(const GroupSpec& group, const Eigen::VectorXd& omega);
Eigen::VectorXd log(const Point& g);
Point compose(const Point& a, const Point& b);
Point inverse(const Point& g);
/// g * exp(omega).
Point retract(const Point& g, const Eigen::VectorXd& omega);
/// Frame coordinates of the geodesic from a to b: log(a^-1 b).
Eigen::VectorXd difference(const Point& a, const Point& b);

Eigen::VectorXd adjoint(const Point& g, const Eigen::VectorXd& omega);
/// Lie bracket in frame coordinates (cross product per SO(3) factor).
Eigen::VectorXd bracket(const GroupSpec& group, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Bi-invariant Riemannian distance (product metric on products).
double distance(const Point& a, const Point& b);
Geodesic distance_and_direction(const Point& from, const Point& to);

}  // namespace lie
}  // namespace invdp
