#include <doctest.h>

#include "invdp/errors.hpp"
#include "invdp/lie.hpp"
#include "support.hpp"

using namespace invdp;
using test::max_abs;

namespace {

void check_code(ErrorCode code, const auto& body) {
    try {
        body();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == code);
    }
}

}  // namespace

TEST_CASE("group dimensions and injectivity radii") {
    CHECK(GroupSpec::circle().dim() == 1);
    CHECK(GroupSpec::torus(4).dim() == 4);
    CHECK(GroupSpec::so3().dim() == 3);
    CHECK(GroupSpec::so3_power(3).dim() == 9);
    CHECK(GroupSpec::cylinder().dim() == 2);
    CHECK(GroupSpec::euclidean(5).dim() == 5);
    CHECK(GroupSpec::so3().injectivity_radius() == doctest::Approx(M_PI));
    CHECK(GroupSpec::torus(2).injectivity_radius() == doctest::Approx(M_PI));
    CHECK(std::isinf(GroupSpec::euclidean(2).injectivity_radius()));
}

TEST_CASE("exp examples") {
    const Point e = lie::exp(GroupSpec::so3(), Eigen::Vector3d::Zero());
    CHECK(max_abs(e.rotation(0) - Eigen::Matrix3d::Identity()) == 0.0);

    const Point q = lie::exp(GroupSpec::so3(), Eigen::Vector3d(0, 0, M_PI / 2));
    Eigen::Matrix3d expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK(max_abs(q.rotation(0) - expected) < 1e-15);

    const Point t = lie::exp(GroupSpec::torus(2), Eigen::Vector2d(M_PI, M_PI / 2));
    CHECK(t.coords()(0) == doctest::Approx(M_PI));
    CHECK(t.coords()(1) == doctest::Approx(M_PI / 2));
}

TEST_CASE("log examples") {
    CHECK(lie::log(Point::identity(GroupSpec::so3())).norm() == 0.0);
    const Eigen::Vector3d w(0.1, 0.2, 0.3);
    CHECK((lie::log(lie::exp(GroupSpec::so3(), w)) - w).norm() < 1e-10);
    check_code(ErrorCode::CutLocus, [] { lie::log(lie::exp(GroupSpec::so3(), Eigen::Vector3d(0, 0, M_PI))); });
}

TEST_CASE("exp/log roundtrip up to pi - 1e-3, including the near-pi branch") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double angle = i < 200 ? M_PI - 1e-3 - 1e-4 * rng.uniform() : rng.uniform(0.0, M_PI - 1e-3);
        const Eigen::Vector3d w = rng.unit_vector(3) * angle;
        REQUIRE((lie::so3_log(lie::so3_exp(w)) - w).norm() <= 1e-10);
    }
}

TEST_CASE("compose and inverse") {
    Rng rng(3);
    const Point g = Point::from_rotations(GroupSpec::so3(), {test::random_rotation(rng)});
    const Point e = Point::identity(GroupSpec::so3());
    CHECK(max_abs(lie::compose(e, g).rotation(0) - g.rotation(0)) < 1e-15);
    CHECK(max_abs(lie::inverse(g).rotation(0) - g.rotation(0).transpose()) < 1e-15);
    CHECK(max_abs(lie::compose(g, lie::inverse(g)).rotation(0) - Eigen::Matrix3d::Identity()) < 1e-12);

    const Point a = Point::from_coords(GroupSpec::circle(), Eigen::VectorXd::Constant(1, 1.5 * M_PI));
    CHECK(lie::compose(a, a).coords()(0) == doctest::Approx(M_PI));

    check_code(ErrorCode::GroupMismatch, [&] { lie::compose(g, a); });
}

TEST_CASE("distance_and_direction examples") {
    const Point e = Point::identity(GroupSpec::so3());
    const Point gz = lie::exp(GroupSpec::so3(), Eigen::Vector3d(0, 0, 1.0));
    const Geodesic d = lie::distance_and_direction(e, gz);
    CHECK(d.theta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((d.u - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);

    const Point t0 = Point::from_coords(GroupSpec::torus(2), Eigen::Vector2d(0, 0));
    const Point t1 = Point::from_coords(GroupSpec::torus(2), Eigen::Vector2d(M_PI / 2, 0));
    const Geodesic dt = lie::distance_and_direction(t0, t1);
    CHECK(dt.theta == doctest::Approx(M_PI / 2));
    CHECK((dt.u - Eigen::Vector2d(1, 0)).norm() < 1e-12);

    const Geodesic same = lie::distance_and_direction(gz, gz);
    CHECK(same.theta == 0.0);
    CHECK_FALSE(same.direction_defined);

    check_code(ErrorCode::CutLocus,
               [&] { lie::distance_and_direction(e, lie::exp(GroupSpec::so3(), Eigen::Vector3d(M_PI, 0, 0))); });
}

TEST_CASE("adjoint examples") {
    const Eigen::Vector3d w(0.3, -0.1, 0.7);
    CHECK((lie::adjoint(Point::identity(GroupSpec::so3()), w) - w).norm() < 1e-15);
    Rng rng(5);
    const Point t = test::random_torus(rng, 3);
    const Eigen::Vector3d wt(1, 2, 3);
    CHECK((lie::adjoint(t, wt) - wt).norm() == 0.0);
    const Point q = lie::exp(GroupSpec::so3(), Eigen::Vector3d(0, 0, M_PI / 2));
    // Oracle: vee(R hat(w) R^T).
    const Eigen::Vector3d x(1, 0, 0);
    const Eigen::Vector3d oracle = lie::vee(q.rotation(0) * lie::hat(x) * q.rotation(0).transpose());
    CHECK((lie::adjoint(q, x) - oracle).norm() < 1e-15);
    CHECK((lie::adjoint(q, x) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("hat and vee") {
    Eigen::Matrix3d expected;
    expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    CHECK(max_abs(lie::hat(Eigen::Vector3d(1, 0, 0)) - expected) == 0.0);
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d w = rng.normal_vector(3);
        CHECK((lie::vee(lie::hat(w)) - w).norm() == 0.0);
    }
    check_code(ErrorCode::NotSkew, [] { lie::vee(Eigen::Matrix3d::Identity()); });
}

TEST_CASE("bi-invariance of the distance") {
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        const Point h = test::random_so3_power(rng, 2, 3.0);
        const Point a = test::random_so3_power(rng, 2, 1.0);
        const Point b = test::random_so3_power(rng, 2, 1.0);
        const double d = lie::distance(a, b);
        CHECK(std::abs(lie::distance(lie::compose(h, a), lie::compose(h, b)) - d) < 1e-10);
        CHECK(std::abs(lie::distance(lie::compose(a, h), lie::compose(b, h)) - d) < 1e-10);
    }
}

TEST_CASE("direction is a unit frame vector") {
    Rng rng(22);
    for (int i = 0; i < 200; ++i) {
        const Point a = Point::from_rotations(GroupSpec::so3(), {test::random_rotation(rng)});
        const Point b = Point::from_rotations(GroupSpec::so3(), {a.rotation(0) * test::random_rotation(rng)});
        const Geodesic g = lie::distance_and_direction(a, b);
        if (g.direction_defined) CHECK(std::abs(g.u.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("rotations stay orthonormal through operations") {
    Rng rng(23);
    Point g = Point::identity(GroupSpec::so3());
    for (int i = 0; i < 1000; ++i) g = lie::compose(g, lie::exp(GroupSpec::so3(), rng.normal_vector(3)));
    const Eigen::Matrix3d r = g.rotation(0);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-9);
    CHECK(r.determinant() > 0.0);

    Eigen::Matrix3d noisy = r;
    noisy(0, 1) += 1e-3;
    const Eigen::Matrix3d p = Point::from_rotations(GroupSpec::so3(), {noisy}).rotation(0);
    CHECK((p.transpose() * p - Eigen::Matrix3d::Identity()).norm() <= 1e-12);
}

TEST_CASE("angles wrap to [0, 2pi) and differences to (-pi, pi]") {
    CHECK(lie::wrap_angle(-0.5) == doctest::Approx(lie::kTwoPi - 0.5));
    CHECK(lie::wrap_angle(lie::kTwoPi) == doctest::Approx(0.0));
    CHECK(lie::wrap_difference(M_PI) == doctest::Approx(M_PI));
    CHECK(lie::wrap_difference(-M_PI) == doctest::Approx(M_PI));
    CHECK(lie::wrap_difference(1.5 * M_PI) == doctest::Approx(-0.5 * M_PI));
    const Point p = Point::from_coords(GroupSpec::cylinder(), Eigen::Vector2d(-1.0, -1.0));
    CHECK(p.coords()(0) == doctest::Approx(lie::kTwoPi - 1.0));
    CHECK(p.coords()(1) == -1.0);
}

TEST_CASE("bracket is the cross product per SO(3) factor and zero on abelian groups") {
    const Eigen::VectorXd a = (Eigen::VectorXd(6) << 1, 0, 0, 0, 1, 0).finished();
    const Eigen::VectorXd b = (Eigen::VectorXd(6) << 0, 1, 0, 0, 0, 1).finished();
    const Eigen::VectorXd c = lie::bracket(GroupSpec::so3_power(2), a, b);
    CHECK((c - (Eigen::VectorXd(6) << 0, 0, 1, 1, 0, 0).finished()).norm() == 0.0);
    CHECK(lie::bracket(GroupSpec::torus(2), Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)).norm() == 0.0);
}
