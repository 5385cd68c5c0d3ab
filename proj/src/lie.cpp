#include "invdp/lie.hpp"

#include <cmath>
#include <limits>

#include "invdp/errors.hpp"

namespace invdp {

namespace {

constexpr double kCutTol = 1e-9;
// Below this angle the skew-part axis extraction is well conditioned.
constexpr double kSkewBranchLimit = M_PI - 1e-4;

void require_same_group(const Point& a, const Point& b) {
    if (!(a.group() == b.group())) {
        throw Error(ErrorCode::GroupMismatch, a.group().name() + " vs " + b.group().name());
    }
}

void require_dim(const GroupSpec& group, const Eigen::VectorXd& v) {
    if (v.size() != group.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(group.dim()) +
                                                      " frame coordinates, got " + std::to_string(v.size()));
    }
}

double checked_angle_difference(double d) {
    const double w = lie::wrap_difference(d);
    if (M_PI - std::abs(w) < kCutTol) {
        throw Error(ErrorCode::CutLocus, "angle difference at pi");
    }
    return w;
}

}  // namespace

std::string to_string(GroupKind kind) {
    switch (kind) {
        case GroupKind::Circle: return "Circle";
        case GroupKind::Torus: return "Torus";
        case GroupKind::SO3: return "SO3";
        case GroupKind::SO3Power: return "SO3Power";
        case GroupKind::CylinderS1R: return "CylinderS1R";
        case GroupKind::EuclideanRn: return "EuclideanRn";
    }
    return "Unknown";
}

GroupSpec GroupSpec::torus(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "Torus needs N >= 1");
    return {GroupKind::Torus, n};
}

GroupSpec GroupSpec::so3_power(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "SO3Power needs N >= 1");
    return {GroupKind::SO3Power, n};
}

GroupSpec GroupSpec::euclidean(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "EuclideanRn needs N >= 1");
    return {GroupKind::EuclideanRn, n};
}

int GroupSpec::dim() const noexcept {
    switch (kind_) {
        case GroupKind::Circle: return 1;
        case GroupKind::Torus: return count_;
        case GroupKind::SO3: return 3;
        case GroupKind::SO3Power: return 3 * count_;
        case GroupKind::CylinderS1R: return 2;
        case GroupKind::EuclideanRn: return count_;
    }
    return 0;
}

double GroupSpec::injectivity_radius() const noexcept {
    return kind_ == GroupKind::EuclideanRn ? std::numeric_limits<double>::infinity() : M_PI;
}

bool GroupSpec::is_abelian() const noexcept { return !has_rotations(); }

bool GroupSpec::has_rotations() const noexcept {
    return kind_ == GroupKind::SO3 || kind_ == GroupKind::SO3Power;
}

std::string GroupSpec::name() const {
    switch (kind_) {
        case GroupKind::Torus:
        case GroupKind::SO3Power:
        case GroupKind::EuclideanRn: return to_string(kind_) + "(" + std::to_string(count_) + ")";
        default: return to_string(kind_);
    }
}

// ---------------------------------------------------------------------------
// Point

Point Point::identity(const GroupSpec& group) {
    if (group.has_rotations()) {
        return {group, Eigen::VectorXd(), std::vector<Eigen::Matrix3d>(group.count(), Eigen::Matrix3d::Identity())};
    }
    return {group, Eigen::VectorXd::Zero(group.dim()), {}};
}

Point Point::from_coords(const GroupSpec& group, const Eigen::VectorXd& coords) {
    if (group.has_rotations()) {
        throw Error(ErrorCode::InvalidArgument, "rotation groups are built from matrices");
    }
    require_dim(group, coords);
    if (!coords.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite coordinates");
    Eigen::VectorXd c = coords;
    switch (group.kind()) {
        case GroupKind::Circle:
        case GroupKind::Torus:
            for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = lie::wrap_angle(c(i));
            break;
        case GroupKind::CylinderS1R: c(0) = lie::wrap_angle(c(0)); break;
        default: break;
    }
    return {group, std::move(c), {}};
}

Point Point::from_rotations(const GroupSpec& group, std::vector<Eigen::Matrix3d> rotations) {
    if (!group.has_rotations() || static_cast<int>(rotations.size()) != group.count()) {
        throw Error(ErrorCode::InvalidArgument, "rotation count does not match " + group.name());
    }
    for (auto& r : rotations) {
        if (!r.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite rotation");
        r = lie::project_to_so3(r);
    }
    return {group, Eigen::VectorXd(), std::move(rotations)};
}

Point Point::from_flat(const GroupSpec& group, const Eigen::VectorXd& flat) {
    if (!group.has_rotations()) return from_coords(group, flat);
    if (flat.size() != 9 * group.count()) {
        throw Error(ErrorCode::DimensionMismatch, "expected 9 entries per rotation");
    }
    std::vector<Eigen::Matrix3d> rs(static_cast<std::size_t>(group.count()));
    for (int k = 0; k < group.count(); ++k) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) rs[static_cast<std::size_t>(k)](r, c) = flat(9 * k + 3 * r + c);
        }
    }
    return from_rotations(group, std::move(rs));
}

Eigen::VectorXd Point::flatten() const {
    if (!group_.has_rotations()) return coords_;
    Eigen::VectorXd out(9 * static_cast<Eigen::Index>(rotations_.size()));
    for (std::size_t k = 0; k < rotations_.size(); ++k) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) out(static_cast<Eigen::Index>(9 * k) + 3 * r + c) = rotations_[k](r, c);
        }
    }
    return out;
}

namespace lie {

double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

double wrap_difference(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w > M_PI) w -= kTwoPi;
    if (w <= -M_PI) w += kTwoPi;
    return w;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
    Eigen::Matrix3d m;
    m << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
         -w.y(), w.x(), 0.0;
    return m;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
    const double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9) throw Error(ErrorCode::NotSkew, "symmetric part has magnitude " + std::to_string(asym));
    return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1))};
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
    const double theta2 = w.squaredNorm();
    const double theta = std::sqrt(theta2);
    const Eigen::Matrix3d k = hat(w);
    double a;
    double b;
    if (theta < 1e-4) {
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

double so3_angle(const Eigen::Matrix3d& r) {
    const Eigen::Vector3d skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return std::atan2(0.5 * skew.norm(), 0.5 * (r.trace() - 1.0));
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
    const double theta = so3_angle(r);
    const Eigen::Vector3d skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    if (theta < 1e-4) {
        // theta / (2 sin theta) ~ 1/2 (1 + theta^2 / 6)
        return 0.5 * (1.0 + theta * theta / 6.0) * skew;
    }
    if (M_PI - theta < kCutTol) {
        throw Error(ErrorCode::CutLocus, "rotation angle at pi; axis ill-defined");
    }
    if (theta < kSkewBranchLimit) {
        // |skew| = 2 sin(theta); normalizing directly avoids amplifying angle error near pi.
        return theta / skew.norm() * skew;
    }
    // Near pi: axis from the symmetric part, a a^T = (sym - cos I) / (1 - cos).
    const double c = std::cos(theta);
    const Eigen::Matrix3d aat = (0.5 * (r + r.transpose()) - c * Eigen::Matrix3d::Identity()) / (1.0 - c);
    Eigen::Index col = 0;
    aat.diagonal().maxCoeff(&col);
    Eigen::Vector3d axis = aat.col(col) / std::sqrt(std::max(aat(col, col), 1e-300));
    axis.normalize();
    if (axis.dot(skew) < 0.0) axis = -axis;
    return theta * axis;
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

Point exp(const GroupSpec& group, const Eigen::VectorXd& omega) {
    require_dim(group, omega);
    if (group.has_rotations()) {
        std::vector<Eigen::Matrix3d> rs(static_cast<std::size_t>(group.count()));
        for (int k = 0; k < group.count(); ++k) rs[static_cast<std::size_t>(k)] = so3_exp(omega.segment<3>(3 * k));
        return Point::from_rotations(group, std::move(rs));
    }
    return Point::from_coords(group, omega);
}

Eigen::VectorXd log(const Point& g) {
    const GroupSpec& group = g.group();
    Eigen::VectorXd out(group.dim());
    switch (group.kind()) {
        case GroupKind::Circle:
        case GroupKind::Torus:
            for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = checked_angle_difference(g.coords()(i));
            break;
        case GroupKind::CylinderS1R:
            out(0) = checked_angle_difference(g.coords()(0));
            out(1) = g.coords()(1);
            break;
        case GroupKind::EuclideanRn: out = g.coords(); break;
        case GroupKind::SO3:
        case GroupKind::SO3Power:
            for (int k = 0; k < group.count(); ++k) out.segment<3>(3 * k) = so3_log(g.rotation(k));
            break;
    }
    return out;
}

Point compose(const Point& a, const Point& b) {
    require_same_group(a, b);
    if (a.group().has_rotations()) {
        std::vector<Eigen::Matrix3d> rs(a.rotations().size());
        for (std::size_t k = 0; k < rs.size(); ++k) rs[k] = a.rotations()[k] * b.rotations()[k];
        return Point::from_rotations(a.group(), std::move(rs));
    }
    return Point::from_coords(a.group(), a.coords() + b.coords());
}

Point inverse(const Point& g) {
    if (g.group().has_rotations()) {
        std::vector<Eigen::Matrix3d> rs(g.rotations().size());
        for (std::size_t k = 0; k < rs.size(); ++k) rs[k] = g.rotations()[k].transpose();
        return Point::from_rotations(g.group(), std::move(rs));
    }
    return Point::from_coords(g.group(), -g.coords());
}

Point retract(const Point& g, const Eigen::VectorXd& omega) { return compose(g, exp(g.group(), omega)); }

Eigen::VectorXd difference(const Point& a, const Point& b) {
    require_same_group(a, b);
    if (a.group().has_rotations()) {
        Eigen::VectorXd out(a.group().dim());
        for (int k = 0; k < a.group().count(); ++k) {
            out.segment<3>(3 * k) = so3_log(a.rotation(k).transpose() * b.rotation(k));
        }
        return out;
    }
    const Eigen::VectorXd d = b.coords() - a.coords();
    Eigen::VectorXd out = d;
    switch (a.group().kind()) {
        case GroupKind::Circle:
        case GroupKind::Torus:
            for (Eigen::Index i = 0; i < d.size(); ++i) out(i) = checked_angle_difference(d(i));
            break;
        case GroupKind::CylinderS1R: out(0) = checked_angle_difference(d(0)); break;
        default: break;
    }
    return out;
}

Eigen::VectorXd adjoint(const Point& g, const Eigen::VectorXd& omega) {
    require_dim(g.group(), omega);
    if (!g.group().has_rotations()) return omega;
    Eigen::VectorXd out(omega.size());
    for (int k = 0; k < g.group().count(); ++k) out.segment<3>(3 * k) = g.rotation(k) * omega.segment<3>(3 * k);
    return out;
}

Eigen::VectorXd bracket(const GroupSpec& group, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require_dim(group, a);
    require_dim(group, b);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(group.dim());
    if (!group.has_rotations()) return out;
    for (int k = 0; k < group.count(); ++k) {
        const Eigen::Vector3d x = a.segment<3>(3 * k);
        const Eigen::Vector3d y = b.segment<3>(3 * k);
        out.segment<3>(3 * k) = x.cross(y);
    }
    return out;
}

double distance(const Point& a, const Point& b) {
    require_same_group(a, b);
    if (a.group().has_rotations()) {
        double s = 0.0;
        for (int k = 0; k < a.group().count(); ++k) {
            const double t = so3_angle(a.rotation(k).transpose() * b.rotation(k));
            s += t * t;
        }
        return std::sqrt(s);
    }
    Eigen::VectorXd d = b.coords() - a.coords();
    switch (a.group().kind()) {
        case GroupKind::Circle:
        case GroupKind::Torus:
            for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = wrap_difference(d(i));
            break;
        case GroupKind::CylinderS1R: d(0) = wrap_difference(d(0)); break;
        default: break;
    }
    return d.norm();
}

Geodesic distance_and_direction(const Point& from, const Point& to) {
    Geodesic out;
    const Eigen::VectorXd w = difference(from, to);
    out.theta = w.norm();
    if (out.theta <= 1e-15) {
        out.theta = 0.0;
        out.u = Eigen::VectorXd::Zero(w.size());
        out.direction_defined = false;
        return out;
    }
    out.u = w / out.theta;
    out.direction_defined = true;
    return out;
}

}  // namespace lie
}  // namespace invdp
