#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "invdp/cones.hpp"

namespace invdp {

/// Dense real n x n operator on frame coordinates.
class LinearMap {
public:
    explicit LinearMap(Eigen::MatrixXd entries);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(entries_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return entries_; }

private:
    Eigen::MatrixXd entries_;
};

enum class CheckMode { ExactSProcedure, SignPattern, Sampled };

std::string to_string(CheckMode mode);

struct CheckOptions {
    CheckMode mode = CheckMode::ExactSProcedure;
    int n_rays = 1000;
    std::uint64_t seed = 0;
};

struct Certificate {
    bool positive = false;
    bool strict = false;
    double margin = 0.0;
    CheckMode mode = CheckMode::ExactSProcedure;
    int n_rays = 0;
    std::uint64_t seed = 0;
    std::optional<Eigen::VectorXd> witness;
};

/// Oblique direct-sum splitting from the rank-k Perron-Frobenius theorem.
struct PFSplit {
    Eigen::MatrixXd W1;  // n x k, orthonormal columns
    Eigen::MatrixXd W2;  // n x (n-k), orthonormal columns
    double gap = 0.0;    // min |sigma_1| / max |sigma_2|
    Eigen::VectorXcd eigenvalues;  // sorted by decreasing modulus
};

enum class LyapunovKind { Tsitsiklis, Birkhoff };
enum class TimeKind { Discrete, Continuous };

namespace positivity {

/// Tolerance on normalized margins below which positivity is reported as non-strict.
inline constexpr double kStrictTol = 1e-9;

/// Largest value of lambda_min(M - lambda P) over lambda in [lo, hi], found
/// by golden-section search (the function is concave in lambda).
struct SProcedureResult {
    double lambda = 0.0;
    double value = 0.0;
};
SProcedureResult s_procedure(const Eigen::MatrixXd& M, const Eigen::MatrixXd& P, double lo, double hi,
                             int iterations = 200);

Certificate is_positive_map(const LinearMap& T, const ConeSpec& cone, const CheckOptions& options = {});
Certificate is_positive_generator(const LinearMap& A, const ConeSpec& cone, const CheckOptions& options = {});

/// Throws GapDegenerate when the k-th and (k+1)-th eigenvalue moduli coincide,
/// ConeViolation when the subspaces fail the cone checks.
PFSplit pf_split(const LinearMap& T, const ConeSpec& cone, std::uint64_t seed = 0);

double consensus_lyapunov(const Eigen::VectorXd& x, LyapunovKind kind);
bool check_consensus_matrix(const LinearMap& A, TimeKind time);

/// |v2| / |v1| for the direct-sum decomposition v = v1 + v2, v_i in W_i.
double contraction_ratio(const Eigen::VectorXd& v, const PFSplit& split);

/// Sine of the largest principal angle between the column spans of a and b.
double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace positivity
}  // namespace invdp
