#include <doctest.h>

#include "invdp/cones.hpp"
#include "invdp/errors.hpp"
#include "support.hpp"

using namespace invdp;
using Kind = MembershipGrade::Kind;

namespace {

Eigen::MatrixXd diag(std::initializer_list<double> d) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return v.asDiagonal();
}

ErrorCode code_of(const auto& body) {
    try {
        body();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

ConeSpec pendulum_cone() {
    Eigen::MatrixXd n(2, 2);
    n << 1, 0, 1, 1;
    return cones::make_polyhedral(n, true);
}

/// Random symmetric invertible P with k positive eigenvalues.
Eigen::MatrixXd random_signature(Rng& rng, int n, int k) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = (i < k ? 1.0 : -1.0) * rng.uniform(0.5, 2.0);
    return q * d.asDiagonal() * q.transpose();
}

}  // namespace

TEST_CASE("make_quadratic examples") {
    CHECK(cones::rank_of(cones::make_quadratic(diag({1, -1}))) == 1);
    CHECK(cones::rank_of(cones::make_quadratic(diag({1, 1, -1}))) == 2);
    CHECK(code_of([] { cones::make_quadratic(diag({1, 0, -1})); }) == ErrorCode::Singular);
}

TEST_CASE("rank_of examples") {
    CHECK(cones::rank_of(cones::make_orthant(4)) == 1);
    Eigen::MatrixXd dropped = Eigen::MatrixXd::Identity(4, 4).topRows(3);
    CHECK(cones::rank_of(cones::make_polyhedral(dropped)) == 2);
    CHECK(cones::rank_of(cones::sync_cone(3, 4, 2.0)) == 3);
}

TEST_CASE("contains examples") {
    CHECK(cones::contains(cones::make_orthant(2), Eigen::Vector2d(1, 1), 0.1).kind == Kind::EpsInterior);
    CHECK(cones::contains(pendulum_cone(), Eigen::Vector2d(1, -1)).kind == Kind::Boundary);
    CHECK(cones::contains(cones::make_quadratic(diag({1, -1})), Eigen::Vector2d(1, 0.5)).kind == Kind::Interior);
    CHECK(cones::contains(pendulum_cone(), Eigen::Vector2d::Zero()).kind == Kind::Boundary);
    CHECK(code_of([] { cones::contains(cones::make_orthant(2), Eigen::Vector3d(1, 1, 1)); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("boundary_sample examples") {
    const auto orth = cones::boundary_sample(cones::make_orthant(2), 4, 7);
    REQUIRE(orth.size() == 4);
    for (const auto& v : orth) {
        CHECK(std::min(std::abs(v(0)), std::abs(v(1))) < 1e-12);
        CHECK(std::abs(v.norm() - 1.0) < 1e-12);
    }
    const auto light = cones::boundary_sample(cones::make_quadratic(diag({1, -1})), 50, 3);
    for (const auto& v : light) CHECK(std::abs(std::abs(v(0)) - std::abs(v(1))) < 1e-12);
    const auto again = cones::boundary_sample(cones::make_quadratic(diag({1, -1})), 50, 3);
    for (std::size_t i = 0; i < light.size(); ++i) CHECK(light[i] == again[i]);
}

TEST_CASE("boundary samples grade Boundary for every variant") {
    Rng rng(4);
    std::vector<ConeSpec> cs = {cones::make_orthant(3), pendulum_cone(), cones::make_quadratic(random_signature(rng, 5, 2)),
                                cones::sync_cone(1, 4, 2.0), cones::sync_cone(3, 3, 1.5)};
    Eigen::MatrixXd dropped = Eigen::MatrixXd::Identity(4, 4).topRows(3);
    cs.push_back(cones::make_polyhedral(dropped));
    Eigen::MatrixXd redundant(4, 3);
    redundant << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1;
    cs.push_back(cones::make_polyhedral(redundant, false));
    for (const auto& c : cs) {
        for (const auto& v : cones::boundary_sample(c, 200, 17)) {
            REQUIRE(cones::contains(c, v).kind == Kind::Boundary);
        }
    }
}

TEST_CASE("polyhedral faces are all covered by boundary samples") {
    const ConeSpec c = pendulum_cone();
    const Eigen::MatrixXd n = cones::constraint_normals(c);
    std::vector<int> hits(2, 0);
    for (const auto& v : cones::boundary_sample(c, 32, 1)) {
        for (int i = 0; i < 2; ++i) {
            if (std::abs(n.row(i).dot(v)) < 1e-12) ++hits[static_cast<std::size_t>(i)];
        }
    }
    CHECK(hits[0] > 0);
    CHECK(hits[1] > 0);
}

TEST_CASE("complementary examples") {
    const ConeSpec c = cones::make_quadratic(diag({1, 1, -1}));
    const ConeSpec cc = cones::complementary(c);
    CHECK(cones::rank_of(cc) == 1);
    CHECK((cones::form_matrix(cc) + diag({1, 1, -1})).norm() == 0.0);
    CHECK((cones::form_matrix(cones::complementary(cc)) - cones::form_matrix(c)).norm() == 0.0);
    Rng rng(8);
    for (int k = 1; k < 5; ++k) {
        const ConeSpec q = cones::make_quadratic(random_signature(rng, 5, k));
        CHECK(cones::rank_of(q) + cones::rank_of(cones::complementary(q)) == 5);
    }
    CHECK(code_of([] { cones::complementary(cones::make_orthant(2)); }) == ErrorCode::NotQuadratic);
}

TEST_CASE("sync_cone examples") {
    const ConeSpec c = cones::sync_cone(1, 2, 1.0);
    CHECK(cones::contains(c, Eigen::Vector2d(1, 0)).kind == Kind::Boundary);
    CHECK(cones::contains(c, Eigen::Vector2d(1, 1)).kind == Kind::Interior);
    CHECK(cones::contains(c, Eigen::Vector2d(-1, -1)).kind == Kind::Outside);
    // Q(1_1) = N^2 - mu N on SO(3)^N coordinates (N = 2).
    for (double mu : {0.5, 1.0, 1.9}) {
        const ConeSpec s = cones::sync_cone(3, 2, mu);
        const Eigen::VectorXd ones1 = cones::sync_generators(3, 2).col(0);
        const double q = ones1.dot(cones::form_matrix(s) * ones1);
        CHECK(q == doctest::Approx(4.0 - 2.0 * mu));
        CHECK(cones::contains(s, ones1).kind == Kind::Interior);
    }
    CHECK(code_of([] { cones::sync_cone(3, 2, 2.0); }) == ErrorCode::MuOutOfRange);
    CHECK(code_of([] { cones::sync_cone(1, 3, 0.0); }) == ErrorCode::MuOutOfRange);
    const Eigen::MatrixXd g = cones::sync_generators(3, 4);
    CHECK((g.transpose() * g - 4.0 * Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("grading is scale invariant") {
    Rng rng(12);
    std::vector<ConeSpec> cs = {cones::make_orthant(3), cones::make_quadratic(random_signature(rng, 3, 1)),
                                cones::sync_cone(1, 3, 1.5)};
    for (const auto& c : cs) {
        for (int i = 0; i < 300; ++i) {
            const Eigen::VectorXd v = rng.normal_vector(3);
            const double alpha = rng.uniform(0.1, 10.0) * (i % 2 == 0 ? 1.0 : -1.0);
            const auto g = cones::contains(c, v).kind;
            const auto ga = cones::contains(c, alpha * v).kind;
            if (c.variant() == ConeVariant::SyncCone && alpha < 0) continue;  // half-space side is one-sided
            CHECK(g == ga);
        }
    }
}

TEST_CASE("convexity of the K side") {
    Rng rng(13);
    const ConeSpec k1 = cones::make_orthant(3, false);
    const ConeSpec k2 = pendulum_cone();
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd v = rng.normal_vector(3).cwiseAbs();
        const Eigen::VectorXd w = rng.normal_vector(3).cwiseAbs();
        CHECK(cones::contains(k1, v + w).in_cone());
        Eigen::Vector2d a(rng.uniform(0, 1), 0);
        a(1) = rng.uniform(-a(0), 3.0);
        Eigen::Vector2d b(rng.uniform(0, 1), 0);
        b(1) = rng.uniform(-b(0), 3.0);
        CHECK(cones::contains(k2, a + b).in_cone());
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("eps nesting") {
    Rng rng(14);
    const ConeSpec c = cones::make_quadratic(random_signature(rng, 4, 2));
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd v = rng.normal_vector(4);
        const double e1 = rng.uniform(0.01, 0.5);
        const double e2 = e1 + rng.uniform(0.01, 0.5);
        if (cones::contains(c, v, e2).kind == Kind::EpsInterior) {
            CHECK(cones::contains(c, v, e1).kind == Kind::EpsInterior);
        }
    }
}

TEST_CASE("top-k eigenspace of P lies inside the quadratic cone") {
    Rng rng(15);
    for (int k = 1; k <= 3; ++k) {
        const Eigen::MatrixXd p = random_signature(rng, 4, k);
        const ConeSpec c = cones::make_quadratic(p);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
        const Eigen::MatrixXd top = es.eigenvectors().rightCols(k);
        for (int i = 0; i < 1000; ++i) {
            const Eigen::VectorXd v = top * rng.unit_vector(k);
            const auto g = cones::contains(c, v).kind;
            CHECK((g == Kind::Interior || g == Kind::EpsInterior));
        }
    }
}
