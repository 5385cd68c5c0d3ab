#pragma once

#include <Eigen/Dense>

#include "invdp/dynamics.hpp"
#include "invdp/errors.hpp"
#include "invdp/lie.hpp"
#include "invdp/random.hpp"

namespace invdp::test {

inline Eigen::Vector3d random_rotation_vector(Rng& rng, double max_angle) {
    return rng.unit_vector(3) * rng.uniform(0.0, max_angle);
}

inline Eigen::Matrix3d random_rotation(Rng& rng) { return lie::so3_exp(random_rotation_vector(rng, M_PI - 1e-3)); }

inline Point random_so3_power(Rng& rng, int n, double spread) {
    const Eigen::Matrix3d center = random_rotation(rng);
    std::vector<Eigen::Matrix3d> rs;
    for (int k = 0; k < n; ++k) rs.push_back(center * lie::so3_exp(random_rotation_vector(rng, spread)));
    return Point::from_rotations(GroupSpec::so3_power(n), rs);
}

inline Point random_torus(Rng& rng, int n) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(0.0, lie::kTwoPi);
    return Point::from_coords(GroupSpec::torus(n), x);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace invdp::test

namespace invdp::test {

/// Random symmetric invertible P = B^-T J B^-1 with J = diag(I_k, -I_{n-k}); returns (P, B).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_quadratic_frame(Rng& rng, int n, int k) {
    Eigen::MatrixXd b(n, n);
    do {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) b(i, j) = (i == j ? 2.0 : 0.0) + 0.5 * rng.normal();
        }
    } while (std::abs(b.determinant()) < 0.2);
    Eigen::VectorXd j(n);
    for (int i = 0; i < n; ++i) j(i) = i < k ? 1.0 : -1.0;
    const Eigen::MatrixXd binv = b.inverse();
    Eigen::MatrixXd p = binv.transpose() * j.asDiagonal() * binv;
    p = 0.5 * (p + p.transpose());
    return {p, b};
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    }
    return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

/// T = B blockdiag(alpha U1, beta U2) B^-1 with alpha > beta > 0 is strictly
/// positive for the cone of P = B^-T J B^-1: in y = B^-1 x coordinates
/// Q(T x) = alpha^2 |y1|^2 - beta^2 |y2|^2. Dominant subspace: B's first k columns.
inline Eigen::MatrixXd strictly_positive_map(Rng& rng, const Eigen::MatrixXd& b, int k, double alpha, double beta) {
    const int n = static_cast<int>(b.rows());
    Eigen::MatrixXd core = Eigen::MatrixXd::Zero(n, n);
    core.topLeftCorner(k, k) = alpha * random_orthogonal(rng, k);
    core.bottomRightCorner(n - k, n - k) = beta * random_orthogonal(rng, n - k);
    return b * core * b.inverse();
}

}  // namespace invdp::test

namespace invdp::test {

inline SystemSpec constant_field(const GroupSpec& group, const Eigen::VectorXd& omega) {
    SystemSpec sys;
    sys.group = group;
    sys.field = [omega](double, const Point&) { return omega; };
    return sys;
}

template <class F>
ErrorCode error_code_of(F&& body) {
    try {
        body();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace invdp::test
