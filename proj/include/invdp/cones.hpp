#pragma once

// Cones in frame coordinates. Every cone is closed and invariant under
// positive scaling; the rank-k notion follows the largest linear subspace
// contained in the (possibly two-sided) cone.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace invdp {

/// {x : <n_i, x> >= 0 for every row n_i}, unioned with its negation when two_sided.
struct PolyhedralCone {
    Eigen::MatrixXd normals;  // m x n, rows stored unit-normalized
    bool two_sided = true;
};

/// {x : x^T P x >= 0}, P symmetric invertible with k positive eigenvalues.
struct QuadraticCone {
    Eigen::MatrixXd P;
    int k = 0;
};

struct OrthantCone {
    int n = 0;
    bool two_sided = true;
};

/// Q(v) = sum_j (1_j^T v)^2 - mu v^T v >= 0 on (R^m)^N, 1_j interleaved per agent.
/// For m = 1 the half-space 1^T v >= 0 is intersected as well.
struct SyncCone {
    int m = 1;
    int agents = 1;
    double mu = 0.5;
};

enum class ConeVariant { Polyhedral, QuadraticRankK, Orthant, SyncCone };

class ConeSpec {
public:
    using Storage = std::variant<PolyhedralCone, QuadraticCone, OrthantCone, SyncCone>;

    explicit ConeSpec(Storage storage) : storage_(std::move(storage)) {}

    [[nodiscard]] ConeVariant variant() const noexcept { return static_cast<ConeVariant>(storage_.index()); }
    [[nodiscard]] const Storage& storage() const noexcept { return storage_; }
    [[nodiscard]] int dim() const;

    template <class T>
    [[nodiscard]] const T* as() const noexcept {
        return std::get_if<T>(&storage_);
    }

private:
    Storage storage_;
};

std::string to_string(ConeVariant variant);

struct MembershipGrade {
    enum class Kind { Outside, Boundary, Interior, EpsInterior };

    Kind kind = Kind::Outside;
    double eps = 0.0;

    [[nodiscard]] bool in_cone() const noexcept { return kind != Kind::Outside; }
    [[nodiscard]] bool interior() const noexcept { return kind == Kind::Interior || kind == Kind::EpsInterior; }

    friend bool operator==(const MembershipGrade&, const MembershipGrade&) = default;
};

std::string to_string(MembershipGrade grade);

namespace cones {

/// Relative width of the boundary band used when grading.
inline constexpr double kBoundaryTol = 1e-9;

ConeSpec make_polyhedral(const Eigen::MatrixXd& normals, bool two_sided = true);
/// Throws Singular when |lambda_min(P)| <= 1e-10, InvalidArgument when P is not symmetric.
ConeSpec make_quadratic(const Eigen::MatrixXd& P);
ConeSpec make_orthant(int n, bool two_sided = true);
/// Throws MuOutOfRange unless 0 < mu < N (the cone is {0} for mu >= N).
ConeSpec sync_cone(int m, int agents, double mu);

int rank_of(const ConeSpec& cone);

/// Scale-free signed margin: >0 strictly inside, 0 on the boundary, <0 outside.
/// Polyhedral: min_i <n_i, v>/|v| (best of v and -v when two-sided);
/// quadratic / sync: Q(v)/|v|^2 (min with 1^T v/|v| for the m = 1 sync cone).
double margin(const ConeSpec& cone, const Eigen::VectorXd& v);

MembershipGrade contains(const ConeSpec& cone, const Eigen::VectorXd& v, double eps = 0.0);
/// Grade a margin value computed by `margin`; zero vectors must be handled by the caller.
MembershipGrade grade_margin(double m, double eps);

/// Quadratic form matrix (QuadraticRankK or SyncCone).
Eigen::MatrixXd form_matrix(const ConeSpec& cone);
/// Constraint normals (Polyhedral or Orthant), unit rows.
Eigen::MatrixXd constraint_normals(const ConeSpec& cone);
/// The m interleaved all-ones generators of a sync cone, as columns.
Eigen::MatrixXd sync_generators(int m, int agents);

/// Deterministic unit vectors on the boundary of the cone (the K side for two-sided cones).
std::vector<Eigen::VectorXd> boundary_sample(const ConeSpec& cone, int count, std::uint64_t seed);

/// Cone of -P; throws NotQuadratic for other variants.
ConeSpec complementary(const ConeSpec& cone);

}  // namespace cones
}  // namespace invdp
