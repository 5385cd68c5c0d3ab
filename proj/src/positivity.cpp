#include "invdp/positivity.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "invdp/errors.hpp"
#include "invdp/random.hpp"

namespace invdp {

LinearMap::LinearMap(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
        throw Error(ErrorCode::DimensionMismatch, "linear map must be square and non-empty");
    }
    if (!entries_.allFinite()) throw Error(ErrorCode::InvalidArgument, "linear map has non-finite entries");
}

std::string to_string(CheckMode mode) {
    switch (mode) {
        case CheckMode::ExactSProcedure: return "ExactSProcedure";
        case CheckMode::SignPattern: return "SignPattern";
        case CheckMode::Sampled: return "Sampled";
    }
    return "Unknown";
}

namespace positivity {

namespace {

using cd = std::complex<double>;

void require_dims(const LinearMap& T, const ConeSpec& cone) {
    if (T.dim() != cone.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "map dimension " + std::to_string(T.dim()) + " vs cone dimension " + std::to_string(cone.dim()));
    }
}

bool is_quadratic(const ConeSpec& cone) {
    return cone.variant() == ConeVariant::QuadraticRankK || cone.variant() == ConeVariant::SyncCone;
}

double min_abs_eigenvalue(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().minCoeff();
}

double lambda_min(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double spectral_norm(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

bool two_sided(const ConeSpec& cone) {
    if (const auto* p = cone.as<PolyhedralCone>()) return p->two_sided;
    if (const auto* o = cone.as<OrthantCone>()) return o->two_sided;
    return false;
}

/// Unit normals N of a simplicial polyhedral cone (square, invertible), or nullopt.
std::optional<Eigen::MatrixXd> simplicial_normals(const ConeSpec& cone) {
    if (cone.variant() != ConeVariant::Polyhedral && cone.variant() != ConeVariant::Orthant) return std::nullopt;
    Eigen::MatrixXd n = cones::constraint_normals(cone);
    if (n.rows() != n.cols()) return std::nullopt;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(n);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return std::nullopt;
    return n;
}

Certificate base_certificate(CheckMode mode, const CheckOptions& options) {
    Certificate c;
    c.mode = mode;
    if (mode == CheckMode::Sampled) {
        c.n_rays = options.n_rays;
        c.seed = options.seed;
    }
    return c;
}

void finish(Certificate& c, double margin, double tol) {
    c.margin = margin;
    c.positive = margin >= -tol;
    c.strict = margin > tol;
}

// ---------------------------------------------------------------------------
// Maps

Certificate map_sampled(const LinearMap& T, const ConeSpec& cone, const CheckOptions& options) {
    Certificate cert = base_certificate(CheckMode::Sampled, options);
    const auto rays = cones::boundary_sample(cone, options.n_rays, options.seed);
    double worst = std::numeric_limits<double>::infinity();
    Eigen::VectorXd worst_ray;
    for (const auto& v : rays) {
        const Eigen::VectorXd image = T.matrix() * v;
        const double m = image.norm() <= 1e-14 ? 0.0 : cones::margin(cone, image);
        if (m < worst) {
            worst = m;
            worst_ray = v;
        }
    }
    finish(cert, worst, kStrictTol);
    if (!cert.positive) cert.witness = worst_ray;
    return cert;
}

// In coordinates y = N x the simplicial cone is the orthant and T becomes N T N^-1.
Certificate map_sign_pattern(const LinearMap& T, const ConeSpec& cone, CheckMode mode, const CheckOptions& options) {
    const auto normals = simplicial_normals(cone);
    if (!normals) {
        throw Error(ErrorCode::UnsupportedCombination, "sign-pattern test needs an orthant or simplicial cone");
    }
    Certificate cert = base_certificate(mode, options);
    const Eigen::MatrixXd inv = normals->inverse();
    const Eigen::MatrixXd b = *normals * T.matrix() * inv;
    const double scale = std::max(b.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    double m = b.minCoeff() / scale;
    bool flipped = false;
    if (two_sided(cone)) {
        const double neg = -b.maxCoeff() / scale;
        if (neg > m) {
            m = neg;
            flipped = true;
        }
    }
    finish(cert, m, kStrictTol);
    if (!cert.positive) {
        // Column j of N^-1 is the extreme ray whose image has the offending entry.
        Eigen::Index row = 0;
        Eigen::Index col = 0;
        if (flipped) {
            b.maxCoeff(&row, &col);
        } else {
            b.minCoeff(&row, &col);
        }
        cert.witness = inv.col(col).normalized();
    }
    return cert;
}

Certificate map_exact_quadratic(const LinearMap& T, const ConeSpec& cone, const CheckOptions& options) {
    Certificate cert = base_certificate(CheckMode::ExactSProcedure, options);
    const Eigen::MatrixXd p = cones::form_matrix(cone);
    const Eigen::MatrixXd& t = T.matrix();
    const Eigen::MatrixXd m = t.transpose() * p * t;
    const double sigma = spectral_norm(t);
    const double hi = 10.0 * sigma * sigma / min_abs_eigenvalue(p);
    const SProcedureResult s = s_procedure(m, p, 0.0, std::max(hi, 1e-12));
    double margin = s.value / std::max(sigma * sigma, std::numeric_limits<double>::min());
    if (const auto* sync = cone.as<SyncCone>(); sync != nullptr && sync->m == 1) {
        // Half-space side: the interior direction 1 must not be sent to -K.
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(cone.dim());
        const double side = ones.dot(t * ones) / (ones.squaredNorm() * std::max(sigma, 1e-300));
        margin = std::min(margin, side);
    }
    finish(cert, margin, kStrictTol);
    if (!cert.positive) {
        CheckOptions sampled = options;
        sampled.mode = CheckMode::Sampled;
        const Certificate probe = map_sampled(T, cone, sampled);
        if (probe.witness) {
            cert.witness = probe.witness;
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m - s.lambda * p);
            cert.witness = es.eigenvectors().col(0);
        }
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Generators

Certificate generator_sampled(const LinearMap& A, const ConeSpec& cone, const CheckOptions& options) {
    Certificate cert = base_certificate(CheckMode::Sampled, options);
    const auto rays = cones::boundary_sample(cone, options.n_rays, options.seed);
    double worst = std::numeric_limits<double>::infinity();
    Eigen::VectorXd worst_ray;
    const Eigen::MatrixXd& a = A.matrix();
    const bool quadratic = is_quadratic(cone);
    const Eigen::MatrixXd p = quadratic ? cones::form_matrix(cone) : Eigen::MatrixXd();
    const Eigen::MatrixXd n = quadratic ? Eigen::MatrixXd() : cones::constraint_normals(cone);
    for (const auto& v : rays) {
        const Eigen::VectorXd av = a * v;
        double flux = std::numeric_limits<double>::infinity();
        if (quadratic) {
            flux = 2.0 * (p * v).dot(av);
        } else {
            const Eigen::VectorXd active = n * v;
            for (Eigen::Index i = 0; i < n.rows(); ++i) {
                if (std::abs(active(i)) <= cones::kBoundaryTol) flux = std::min(flux, n.row(i).dot(av));
            }
            if (!std::isfinite(flux)) flux = 0.0;
        }
        if (flux < worst) {
            worst = flux;
            worst_ray = v;
        }
    }
    finish(cert, worst, kStrictTol);
    if (!cert.positive) cert.witness = worst_ray;
    return cert;
}

Certificate generator_polyhedral_exact(const LinearMap& A, const ConeSpec& cone, CheckMode mode,
                                       const CheckOptions& options) {
    const auto normals = simplicial_normals(cone);
    if (!normals) {
        throw Error(ErrorCode::UnsupportedCombination, "exact generator test needs an orthant or simplicial cone");
    }
    Certificate cert = base_certificate(mode, options);
    const Eigen::MatrixXd rays = normals->inverse();
    const Eigen::Index n = rays.cols();
    double worst = std::numeric_limits<double>::infinity();
    Eigen::Index worst_col = 0;
    // Face i is generated by the extreme rays r_j, j != i; the flux <n_i, A x> is
    // linear on the face, so its sign is decided at the generators.
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd r = rays.col(j).normalized();
        const Eigen::VectorXd ar = A.matrix() * r;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == j) continue;
            const double flux = normals->row(i).dot(ar);
            if (flux < worst) {
                worst = flux;
                worst_col = j;
            }
        }
    }
    if (n == 1) worst = 0.0;
    finish(cert, worst, kStrictTol);
    if (!cert.positive) cert.witness = rays.col(worst_col).normalized();
    return cert;
}

Certificate generator_quadratic_exact(const LinearMap& A, const ConeSpec& cone, const CheckOptions& options) {
    Certificate cert = base_certificate(CheckMode::ExactSProcedure, options);
    const Eigen::MatrixXd p = cones::form_matrix(cone);
    const Eigen::MatrixXd m = p * A.matrix() + A.matrix().transpose() * p;
    // Lossless S-lemma on the boundary Q = 0: multiplier of either sign.
    const double bound = 10.0 * std::max(spectral_norm(m), 1.0) / min_abs_eigenvalue(p);
    const SProcedureResult s = s_procedure(m, p, -bound, bound);
    finish(cert, s.value, kStrictTol);
    if (!cert.positive) {
        CheckOptions sampled = options;
        const Certificate probe = generator_sampled(A, cone, sampled);
        if (probe.witness) {
            cert.witness = probe.witness;
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m - s.lambda * p);
            cert.witness = es.eigenvectors().col(0);
        }
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Complex Schur reordering (swap of adjacent 1x1 blocks of an upper-triangular
// factor), used to isolate invariant subspaces by eigenvalue modulus.

void givens(cd f, cd g, double& c, cd& s) {
    const double af = std::abs(f);
    const double ag = std::abs(g);
    if (ag == 0.0) {
        c = 1.0;
        s = 0.0;
        return;
    }
    if (af == 0.0) {
        c = 0.0;
        s = std::conj(g) / ag;
        return;
    }
    const double nrm = std::hypot(af, ag);
    c = af / nrm;
    s = (f / af) * std::conj(g) / nrm;
}

void rot(cd& x, cd& y, double c, cd s) {
    const cd nx = c * x + s * y;
    const cd ny = c * y - std::conj(s) * x;
    x = nx;
    y = ny;
}

void swap_adjacent(Eigen::MatrixXcd& t, Eigen::MatrixXcd& q, Eigen::Index p) {
    const Eigen::Index n = t.rows();
    const cd a = t(p, p);
    const cd b = t(p + 1, p + 1);
    double c = 1.0;
    cd s = 0.0;
    givens(t(p, p + 1), b - a, c, s);
    for (Eigen::Index j = p + 2; j < n; ++j) rot(t(p, j), t(p + 1, j), c, s);
    for (Eigen::Index i = 0; i < p; ++i) rot(t(i, p), t(i, p + 1), c, std::conj(s));
    t(p, p) = b;
    t(p + 1, p + 1) = a;
    for (Eigen::Index i = 0; i < n; ++i) rot(q(i, p), q(i, p + 1), c, std::conj(s));
}

/// Leading `count` Schur vectors after ordering eigenvalues by modulus.
Eigen::MatrixXcd ordered_schur_vectors(const Eigen::MatrixXd& a, bool descending, Eigen::Index count,
                                       Eigen::VectorXcd* sorted_eigenvalues) {
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<cd>());
    Eigen::MatrixXcd t = schur.matrixT();
    Eigen::MatrixXcd q = schur.matrixU();
    const Eigen::Index n = t.rows();
    auto before = [descending](cd x, cd y) {
        // Strict comparison with a relative tolerance keeps conjugate pairs in place.
        const double ax = std::abs(x);
        const double ay = std::abs(y);
        const double tol = 1e-12 * std::max(ax, ay);
        return descending ? ax > ay + tol : ax + tol < ay;
    };
    for (Eigen::Index pass = 0; pass < n; ++pass) {
        bool swapped = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            if (before(t(p + 1, p + 1), t(p, p))) {
                swap_adjacent(t, q, p);
                swapped = true;
            }
        }
        if (!swapped) break;
    }
    if (sorted_eigenvalues != nullptr) *sorted_eigenvalues = t.diagonal();
    return q.leftCols(count);
}

/// Real orthonormal basis of a conjugation-closed complex subspace.
Eigen::MatrixXd real_basis(const Eigen::MatrixXcd& z) {
    const Eigen::Index k = z.cols();
    Eigen::MatrixXd stacked(z.rows(), 2 * k);
    stacked << z.real(), z.imag();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (2 * k > k && sv.size() > k && sv(k) > 1e-6 * sv(0)) {
        throw Error(ErrorCode::GapDegenerate, "invariant subspace is not closed under conjugation");
    }
    return svd.matrixU().leftCols(k);
}

}  // namespace

SProcedureResult s_procedure(const Eigen::MatrixXd& M, const Eigen::MatrixXd& P, double lo, double hi,
                             int iterations) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double lambda) { return lambda_min(M - lambda * P); };
    double a = lo;
    double b = hi;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < iterations && b - a > 0.0; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    SProcedureResult best{0.5 * (a + b), f(0.5 * (a + b))};
    // The maximizer may sit at an end of the bracket.
    for (double end : {lo, hi}) {
        const double v = f(end);
        if (v > best.value) best = {end, v};
    }
    return best;
}

Certificate is_positive_map(const LinearMap& T, const ConeSpec& cone, const CheckOptions& options) {
    require_dims(T, cone);
    switch (options.mode) {
        case CheckMode::Sampled: return map_sampled(T, cone, options);
        case CheckMode::SignPattern:
            if (is_quadratic(cone)) {
                throw Error(ErrorCode::UnsupportedCombination, "sign-pattern test needs a polyhedral cone");
            }
            return map_sign_pattern(T, cone, CheckMode::SignPattern, options);
        case CheckMode::ExactSProcedure:
            if (is_quadratic(cone)) return map_exact_quadratic(T, cone, options);
            return map_sign_pattern(T, cone, CheckMode::ExactSProcedure, options);
    }
    throw Error(ErrorCode::UnsupportedCombination, "unknown mode");
}

Certificate is_positive_generator(const LinearMap& A, const ConeSpec& cone, const CheckOptions& options) {
    require_dims(A, cone);
    switch (options.mode) {
        case CheckMode::Sampled: return generator_sampled(A, cone, options);
        case CheckMode::SignPattern:
            if (is_quadratic(cone)) {
                throw Error(ErrorCode::UnsupportedCombination, "sign-pattern test needs a polyhedral cone");
            }
            return generator_polyhedral_exact(A, cone, CheckMode::SignPattern, options);
        case CheckMode::ExactSProcedure:
            if (is_quadratic(cone)) return generator_quadratic_exact(A, cone, options);
            return generator_polyhedral_exact(A, cone, CheckMode::ExactSProcedure, options);
    }
    throw Error(ErrorCode::UnsupportedCombination, "unknown mode");
}

PFSplit pf_split(const LinearMap& T, const ConeSpec& cone, std::uint64_t seed) {
    require_dims(T, cone);
    const Eigen::Index n = T.dim();
    const Eigen::Index k = cones::rank_of(cone);
    if (k < 1 || k >= n) throw Error(ErrorCode::InvalidArgument, "cone rank must lie in [1, n-1]");

    PFSplit split;
    const Eigen::MatrixXcd top = ordered_schur_vectors(T.matrix(), true, k, &split.eigenvalues);
    const double lead = std::abs(split.eigenvalues(k - 1));
    const double next = std::abs(split.eigenvalues(k));
    if (lead - next <= 1e-9 * lead) {
        throw Error(ErrorCode::GapDegenerate, "|lambda_k| = " + std::to_string(lead) +
                                                  ", |lambda_k+1| = " + std::to_string(next));
    }
    const Eigen::MatrixXcd bottom = ordered_schur_vectors(T.matrix(), false, n - k, nullptr);
    split.W1 = real_basis(top);
    split.W2 = real_basis(bottom);
    split.gap = next > 0.0 ? lead / next : std::numeric_limits<double>::infinity();

    // Cone checks: W1 \ {0} inside int C, W2 meets C only at 0.
    if (is_quadratic(cone)) {
        const Eigen::MatrixXd p = cones::form_matrix(cone);
        const double in = lambda_min(split.W1.transpose() * p * split.W1);
        const double out = -lambda_min(-(split.W2.transpose() * p * split.W2));
        if (!(in > kStrictTol) || !(out < -kStrictTol)) {
            throw Error(ErrorCode::ConeViolation, "dominant subspace not inside the cone or complement meets it");
        }
        if (const auto* sync = cone.as<SyncCone>(); sync != nullptr && sync->m == 1) {
            // Orient the dominant direction into the half-space.
            if (Eigen::VectorXd::Ones(n).dot(split.W1.col(0)) < 0.0) split.W1 = -split.W1;
        }
    } else {
        Rng rng(seed);
        for (int s = 0; s < 256; ++s) {
            const Eigen::VectorXd w1 = split.W1 * rng.unit_vector(static_cast<int>(k));
            const double m1 = std::max(cones::margin(cone, w1), cones::margin(cone, -w1));
            const Eigen::VectorXd w2 = split.W2 * rng.unit_vector(static_cast<int>(n - k));
            const double m2 = std::max(cones::margin(cone, w2), cones::margin(cone, -w2));
            if (!(m1 > kStrictTol) || !(m2 < -kStrictTol)) {
                throw Error(ErrorCode::ConeViolation, "sampled subspace check failed");
            }
        }
        if (k == 1 && cones::margin(cone, split.W1.col(0)) < 0.0) split.W1 = -split.W1;
    }
    return split;
}

double consensus_lyapunov(const Eigen::VectorXd& x, LyapunovKind kind) {
    if (x.size() < 1) throw Error(ErrorCode::InvalidArgument, "empty state");
    const double hi = x.maxCoeff();
    const double lo = x.minCoeff();
    if (kind == LyapunovKind::Tsitsiklis) return hi - lo;
    if (!(lo > 0.0)) throw Error(ErrorCode::NonPositive, "Birkhoff function needs a strictly positive state");
    return std::log(hi / lo);
}

bool check_consensus_matrix(const LinearMap& A, TimeKind time) {
    const Eigen::MatrixXd& a = A.matrix();
    const Eigen::VectorXd rows = a.rowwise().sum();
    const double target = time == TimeKind::Discrete ? 1.0 : 0.0;
    if ((rows.array() - target).abs().maxCoeff() > 1e-12) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (time == TimeKind::Continuous && i == j) continue;
            if (a(i, j) < -1e-12) return false;
        }
    }
    return true;
}

double contraction_ratio(const Eigen::VectorXd& v, const PFSplit& split) {
    const Eigen::Index n = split.W1.rows();
    if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "vector length does not match split");
    Eigen::MatrixXd basis(n, split.W1.cols() + split.W2.cols());
    basis << split.W1, split.W2;
    const Eigen::VectorXd c = basis.fullPivLu().solve(v);
    const double n1 = c.head(split.W1.cols()).norm();
    const double n2 = c.tail(split.W2.cols()).norm();
    if (n1 <= 1e-12 * v.norm() || v.norm() == 0.0) {
        throw Error(ErrorCode::DegenerateDirection, "no component along the dominant subspace");
    }
    return n2 / n1;
}

double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                               Eigen::MatrixXd::Identity(a.rows(), a.cols());
    const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                               Eigen::MatrixXd::Identity(b.rows(), b.cols());
    const Eigen::MatrixXd residual = qb - qa * (qa.transpose() * qb);
    return spectral_norm(residual);
}

}  // namespace positivity
}  // namespace invdp
