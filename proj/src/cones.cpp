#include "invdp/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "invdp/errors.hpp"
#include "invdp/random.hpp"

namespace invdp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dim(const ConeSpec& cone, const Eigen::VectorXd& v) {
    if (v.size() != cone.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cone dimension " + std::to_string(cone.dim()) + ", vector length " + std::to_string(v.size()));
    }
}

double polyhedral_side_margin(const Eigen::MatrixXd& normals, const Eigen::VectorXd& unit) {
    return (normals * unit).minCoeff();
}

int matrix_rank(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
}

}  // namespace

int ConeSpec::dim() const {
    return std::visit(overloaded{
                          [](const PolyhedralCone& c) { return static_cast<int>(c.normals.cols()); },
                          [](const QuadraticCone& c) { return static_cast<int>(c.P.rows()); },
                          [](const OrthantCone& c) { return c.n; },
                          [](const SyncCone& c) { return c.m * c.agents; },
                      },
                      storage_);
}

std::string to_string(ConeVariant variant) {
    switch (variant) {
        case ConeVariant::Polyhedral: return "polyhedral";
        case ConeVariant::QuadraticRankK: return "quadratic";
        case ConeVariant::Orthant: return "orthant";
        case ConeVariant::SyncCone: return "sync";
    }
    return "unknown";
}

std::string to_string(MembershipGrade grade) {
    switch (grade.kind) {
        case MembershipGrade::Kind::Outside: return "Outside";
        case MembershipGrade::Kind::Boundary: return "Boundary";
        case MembershipGrade::Kind::Interior: return "Interior";
        case MembershipGrade::Kind::EpsInterior: return "EpsInterior(" + std::to_string(grade.eps) + ")";
    }
    return "Unknown";
}

namespace cones {

ConeSpec make_polyhedral(const Eigen::MatrixXd& normals, bool two_sided) {
    if (normals.rows() < 1 || normals.cols() < 1) throw Error(ErrorCode::InvalidArgument, "empty normal set");
    Eigen::MatrixXd unit = normals;
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
        const double n = unit.row(i).norm();
        if (!(n > 1e-14) || !std::isfinite(n)) throw Error(ErrorCode::InvalidArgument, "zero or non-finite normal");
        // Rows already unit to rounding are kept so serialized cones rebuild bit-identically.
        if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) unit.row(i) /= n;
    }
    return ConeSpec(PolyhedralCone{unit, two_sided});
}

ConeSpec make_quadratic(const Eigen::MatrixXd& P) {
    if (P.rows() != P.cols() || P.rows() < 1) throw Error(ErrorCode::InvalidArgument, "P must be square");
    if (!P.allFinite()) throw Error(ErrorCode::InvalidArgument, "P has non-finite entries");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
        throw Error(ErrorCode::InvalidArgument, "P must be symmetric");
    }
    const Eigen::MatrixXd sym = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.cwiseAbs().minCoeff() <= 1e-10) throw Error(ErrorCode::Singular, "P has an eigenvalue within 1e-10 of zero");
    const int k = static_cast<int>((ev.array() > 0.0).count());
    return ConeSpec(QuadraticCone{sym, k});
}

ConeSpec make_orthant(int n, bool two_sided) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "orthant needs n >= 1");
    return ConeSpec(OrthantCone{n, two_sided});
}

ConeSpec sync_cone(int m, int agents, double mu) {
    if (m != 1 && m != 3) throw Error(ErrorCode::InvalidArgument, "sync cone supports m = 1 or 3");
    if (agents < 1) throw Error(ErrorCode::InvalidArgument, "sync cone needs N >= 1");
    if (!(mu > 0.0) || !(mu < static_cast<double>(agents))) {
        throw Error(ErrorCode::MuOutOfRange, "mu must lie in (0, N); got " + std::to_string(mu));
    }
    return ConeSpec(SyncCone{m, agents, mu});
}

int rank_of(const ConeSpec& cone) {
    return std::visit(overloaded{
                          [](const PolyhedralCone& c) {
                              const int n = static_cast<int>(c.normals.cols());
                              return n - matrix_rank(c.normals) + 1;
                          },
                          [](const QuadraticCone& c) { return c.k; },
                          [](const OrthantCone&) { return 1; },
                          [](const SyncCone& c) { return c.m; },
                      },
                      cone.storage());
}

Eigen::MatrixXd sync_generators(int m, int agents) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m * agents, m);
    for (int k = 0; k < agents; ++k) {
        for (int j = 0; j < m; ++j) g(m * k + j, j) = 1.0;
    }
    return g;
}

Eigen::MatrixXd form_matrix(const ConeSpec& cone) {
    if (const auto* q = cone.as<QuadraticCone>()) return q->P;
    if (const auto* s = cone.as<SyncCone>()) {
        const Eigen::MatrixXd g = sync_generators(s->m, s->agents);
        return g * g.transpose() - s->mu * Eigen::MatrixXd::Identity(g.rows(), g.rows());
    }
    throw Error(ErrorCode::NotQuadratic, "cone has no quadratic form");
}

Eigen::MatrixXd constraint_normals(const ConeSpec& cone) {
    if (const auto* p = cone.as<PolyhedralCone>()) return p->normals;
    if (const auto* o = cone.as<OrthantCone>()) return Eigen::MatrixXd::Identity(o->n, o->n);
    throw Error(ErrorCode::UnsupportedCombination, "cone has no constraint normals");
}

double margin(const ConeSpec& cone, const Eigen::VectorXd& v) {
    require_dim(cone, v);
    const double norm = v.norm();
    if (norm == 0.0) return 0.0;
    const Eigen::VectorXd unit = v / norm;
    return std::visit(overloaded{
                          [&](const PolyhedralCone& c) {
                              const double plus = polyhedral_side_margin(c.normals, unit);
                              if (!c.two_sided) return plus;
                              return std::max(plus, polyhedral_side_margin(c.normals, -unit));
                          },
                          [&](const QuadraticCone& c) { return unit.dot(c.P * unit); },
                          [&](const OrthantCone& c) {
                              const double plus = unit.minCoeff();
                              return c.two_sided ? std::max(plus, -unit.maxCoeff()) : plus;
                          },
                          [&](const SyncCone& c) {
                              const Eigen::MatrixXd g = sync_generators(c.m, c.agents);
                              const Eigen::VectorXd proj = g.transpose() * unit;
                              const double q = proj.squaredNorm() - c.mu;
                              if (c.m == 1) return std::min(q, proj(0));
                              return q;
                          },
                      },
                      cone.storage());
}

MembershipGrade grade_margin(double m, double eps) {
    using Kind = MembershipGrade::Kind;
    if (m < -kBoundaryTol) return {Kind::Outside, 0.0};
    if (m <= kBoundaryTol) return {Kind::Boundary, 0.0};
    if (eps > 0.0 && m >= eps) return {Kind::EpsInterior, eps};
    return {Kind::Interior, 0.0};
}

MembershipGrade contains(const ConeSpec& cone, const Eigen::VectorXd& v, double eps) {
    require_dim(cone, v);
    if (eps < 0.0) throw Error(ErrorCode::InvalidArgument, "eps must be >= 0");
    if (v.norm() == 0.0) return {MembershipGrade::Kind::Boundary, 0.0};
    return grade_margin(margin(cone, v), eps);
}

namespace {

// Boundary points of {x : N x >= 0}: face i is N_i x = 0 with the other rows
// nonnegative. With independent rows, x = N^+ y + z, y >= 0, y_i = 0, z in ker N.
std::vector<Eigen::VectorXd> polyhedral_boundary(const Eigen::MatrixXd& normals, int count, Rng& rng) {
    const auto m = normals.rows();
    const auto n = normals.cols();
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    const int r = matrix_rank(normals);
    if (r == m) {
        const Eigen::MatrixXd pinv = normals.completeOrthogonalDecomposition().pseudoInverse();
        const Eigen::MatrixXd kernel_proj = Eigen::MatrixXd::Identity(n, n) - pinv * normals;
        for (int s = 0; s < count; ++s) {
            const auto face = static_cast<Eigen::Index>(s % m);
            for (;;) {
                Eigen::VectorXd y(m);
                for (Eigen::Index i = 0; i < m; ++i) y(i) = -std::log(1.0 - rng.uniform());
                y(face) = 0.0;
                Eigen::VectorXd x = pinv * y;
                if (r < n) x += kernel_proj * rng.normal_vector(static_cast<int>(n));
                const double norm = x.norm();
                if (norm > 1e-12) {
                    out.emplace_back(x / norm);
                    break;
                }
            }
        }
        return out;
    }
    // Dependent normals: project Gaussian samples onto a face hyperplane and reject.
    // Faces meeting the cone only at the origin never yield a sample and are skipped.
    auto try_face = [&](Eigen::Index face, int attempts) -> std::optional<Eigen::VectorXd> {
        const Eigen::VectorXd nf = normals.row(face).transpose();
        for (int attempt = 0; attempt < attempts; ++attempt) {
            Eigen::VectorXd x = rng.normal_vector(static_cast<int>(n));
            x -= nf * nf.dot(x);
            const double norm = x.norm();
            if (norm < 1e-12) continue;
            x /= norm;
            const Eigen::VectorXd vals = normals * x;
            bool ok = true;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (i != face && vals(i) < 0.0) ok = false;
            }
            if (ok) return x;
        }
        return std::nullopt;
    };
    std::vector<Eigen::Index> faces;
    for (Eigen::Index face = 0; face < m; ++face) {
        if (try_face(face, 20000)) faces.push_back(face);
    }
    if (faces.empty()) throw Error(ErrorCode::InvalidArgument, "no face of the cone could be sampled");
    for (int s = 0; s < count; ++s) {
        const Eigen::Index face = faces[static_cast<std::size_t>(s) % faces.size()];
        auto x = try_face(face, 1000000);
        if (!x) throw Error(ErrorCode::InvalidArgument, "face " + std::to_string(face) + " could not be sampled");
        out.push_back(*x);
    }
    return out;
}

// Q(v) = 0 exactly: equal quadratic magnitude on the positive and negative eigenspaces.
std::vector<Eigen::VectorXd> quadratic_boundary(const Eigen::MatrixXd& P, int count, Rng& rng,
                                                 const Eigen::VectorXd* halfspace) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& vecs = es.eigenvectors();
    std::vector<Eigen::Index> pos;
    std::vector<Eigen::Index> neg;
    for (Eigen::Index i = 0; i < ev.size(); ++i) (ev(i) > 0.0 ? pos : neg).push_back(i);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        const Eigen::VectorXd a = rng.unit_vector(static_cast<int>(pos.size()));
        const Eigen::VectorXd b = rng.unit_vector(static_cast<int>(neg.size()));
        Eigen::VectorXd x = Eigen::VectorXd::Zero(P.rows());
        for (std::size_t i = 0; i < pos.size(); ++i) {
            x += a(static_cast<Eigen::Index>(i)) / std::sqrt(ev(pos[i])) * vecs.col(pos[i]);
        }
        for (std::size_t j = 0; j < neg.size(); ++j) {
            x += b(static_cast<Eigen::Index>(j)) / std::sqrt(-ev(neg[j])) * vecs.col(neg[j]);
        }
        if (halfspace != nullptr && halfspace->dot(x) < 0.0) x = -x;
        out.emplace_back(x / x.norm());
    }
    return out;
}

}  // namespace

std::vector<Eigen::VectorXd> boundary_sample(const ConeSpec& cone, int count, std::uint64_t seed) {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
    Rng rng(seed);
    return std::visit(overloaded{
                          [&](const PolyhedralCone& c) { return polyhedral_boundary(c.normals, count, rng); },
                          [&](const OrthantCone& c) {
                              return polyhedral_boundary(Eigen::MatrixXd::Identity(c.n, c.n), count, rng);
                          },
                          [&](const QuadraticCone& c) { return quadratic_boundary(c.P, count, rng, nullptr); },
                          [&](const SyncCone& c) {
                              const Eigen::MatrixXd p = form_matrix(cone);
                              if (c.m == 1) {
                                  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(c.agents);
                                  return quadratic_boundary(p, count, rng, &ones);
                              }
                              return quadratic_boundary(p, count, rng, nullptr);
                          },
                      },
                      cone.storage());
}

ConeSpec complementary(const ConeSpec& cone) {
    const auto* q = cone.as<QuadraticCone>();
    if (q == nullptr) throw Error(ErrorCode::NotQuadratic, "complementary cone needs a quadratic cone");
    return ConeSpec(QuadraticCone{-q->P, static_cast<int>(q->P.rows()) - q->k});
}

}  // namespace cones
}  // namespace invdp
