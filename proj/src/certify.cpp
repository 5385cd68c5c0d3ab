#include "invdp/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "invdp/errors.hpp"
#include "invdp/random.hpp"

namespace invdp {

namespace {

bool is_angle_component(const GroupSpec& group, Eigen::Index i) {
    switch (group.kind()) {
        case GroupKind::Circle:
        case GroupKind::Torus: return true;
        case GroupKind::CylinderS1R: return i == 0;
        default: return false;
    }
}

/// Sorted angles and the circular gaps between consecutive ones (the last gap wraps).
std::vector<double> circular_gaps(const Eigen::VectorXd& angles) {
    std::vector<double> a(angles.data(), angles.data() + angles.size());
    for (double& x : a) x = lie::wrap_angle(x);
    std::sort(a.begin(), a.end());
    std::vector<double> gaps(a.size());
    for (std::size_t k = 0; k + 1 < a.size(); ++k) gaps[k] = a[k + 1] - a[k];
    gaps.back() = a.front() + lie::kTwoPi - a.back();
    return gaps;
}

Eigen::MatrixXd orthonormal_span(const std::vector<Eigen::VectorXd>& basis, int n) {
    if (basis.empty()) throw Error(ErrorCode::DependentBasis, "empty basis");
    Eigen::MatrixXd b(n, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (basis[j].size() != n) throw Error(ErrorCode::DimensionMismatch, "basis vector length mismatch");
        b.col(static_cast<Eigen::Index>(j)) = basis[j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
    qr.setThreshold(1e-10);
    if (qr.rank() < b.cols()) throw Error(ErrorCode::DependentBasis, "basis vectors are linearly dependent");
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, b.cols());
    return q;
}

struct StateOutcome {
    bool completed = false;
    bool failed = false;
    int fail_ray = 0;
    double fail_time = 0.0;
    double fail_margin = 0.0;
    double final_margin = std::numeric_limits<double>::infinity();
    int final_ray = 0;
    bool voided = false;
    double void_time = 0.0;
    std::string void_reason;
};

}  // namespace

std::string to_string(RegionKind kind) {
    switch (kind) {
        case RegionKind::Box: return "box";
        case RegionKind::TorusGap: return "torus_gap";
        case RegionKind::TorusSeparated: return "torus_separated";
        case RegionKind::SO3Ball: return "so3_ball";
    }
    return "?";
}

RegionSampler RegionSampler::box(const GroupSpec& group, Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (group.has_rotations()) throw Error(ErrorCode::UnsupportedCombination, "box regions need coordinate groups");
    if (lo.size() != group.dim() || hi.size() != group.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "box bounds must match the group dimension");
    }
    if (!((hi - lo).array() >= 0.0).all()) throw Error(ErrorCode::InvalidArgument, "box bounds inverted");
    RegionSampler r(RegionKind::Box, group);
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    return r;
}

RegionSampler RegionSampler::torus_gap(int n, double max_gap) {
    if (!(max_gap > 0.0 && max_gap < lie::kTwoPi)) throw Error(ErrorCode::InvalidArgument, "max_gap must lie in (0, 2pi)");
    RegionSampler r(RegionKind::TorusGap, GroupSpec::torus(n));
    r.parameter_ = max_gap;
    return r;
}

RegionSampler RegionSampler::torus_separated(int n, double min_gap) {
    if (!(min_gap >= 0.0 && n * min_gap < lie::kTwoPi)) {
        throw Error(ErrorCode::InvalidArgument, "min_gap must satisfy 0 <= N min_gap < 2pi");
    }
    RegionSampler r(RegionKind::TorusSeparated, GroupSpec::torus(n));
    r.parameter_ = min_gap;
    return r;
}

RegionSampler RegionSampler::so3_ball(int n, double radius) {
    if (!(radius > 0.0 && radius <= M_PI)) throw Error(ErrorCode::InvalidArgument, "radius must lie in (0, pi]");
    RegionSampler r(RegionKind::SO3Ball, GroupSpec::so3_power(n));
    r.parameter_ = radius;
    return r;
}

std::vector<Point> RegionSampler::sample(std::uint64_t seed, int count) const {
    if (count < 0) throw Error(ErrorCode::InvalidArgument, "negative sample count");
    Rng rng(seed);
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(count));
    const int n = group_.count();
    for (int s = 0; s < count; ++s) {
        switch (kind_) {
            case RegionKind::Box: {
                Eigen::VectorXd x(lo_.size());
                for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(lo_(i), hi_(i));
                out.push_back(Point::from_coords(group_, x));
                break;
            }
            case RegionKind::TorusGap: {
                const double center = rng.uniform(0.0, lie::kTwoPi);
                Eigen::VectorXd x(n);
                for (int k = 0; k < n; ++k) x(k) = center + rng.uniform(-0.5, 0.5) * parameter_;
                out.push_back(Point::from_coords(group_, x));
                break;
            }
            case RegionKind::TorusSeparated: {
                // Gaps: min_gap plus a uniform split (sorted uniforms) of the slack.
                const double slack = lie::kTwoPi - n * parameter_;
                std::vector<double> cuts(static_cast<std::size_t>(n - 1));
                for (double& c : cuts) c = rng.uniform();
                std::sort(cuts.begin(), cuts.end());
                std::vector<int> order(static_cast<std::size_t>(n));
                for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
                for (int k = n - 1; k > 0; --k) {
                    const int j = static_cast<int>(rng.uniform() * (k + 1));
                    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(std::min(j, k))]);
                }
                Eigen::VectorXd x(n);
                double angle = rng.uniform(0.0, lie::kTwoPi);
                double prev = 0.0;
                for (int k = 0; k < n; ++k) {
                    x(order[static_cast<std::size_t>(k)]) = angle;
                    const double next = k + 1 < n ? cuts[static_cast<std::size_t>(k)] : 1.0;
                    angle += parameter_ + slack * (next - prev);
                    prev = next;
                }
                out.push_back(Point::from_coords(group_, x));
                break;
            }
            case RegionKind::SO3Ball: {
                const Eigen::Matrix3d center = lie::so3_exp(rng.unit_vector(3) * rng.uniform(0.0, M_PI));
                // Each agent within radius/2 of the center keeps pairwise distances below radius.
                const double reach = 0.5 * parameter_ * (1.0 - 1e-9);
                std::vector<Eigen::Matrix3d> rs;
                for (int k = 0; k < n; ++k) {
                    const double rad = reach * std::cbrt(rng.uniform());
                    rs.push_back(center * lie::so3_exp(rng.unit_vector(3) * rad));
                }
                out.push_back(Point::from_rotations(group_, std::move(rs)));
                break;
            }
        }
    }
    return out;
}

bool RegionSampler::contains(const Point& g) const {
    if (!(g.group() == group_)) return false;
    switch (kind_) {
        case RegionKind::Box: {
            const Eigen::VectorXd& x = g.coords();
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (is_angle_component(group_, i)) {
                    if (hi_(i) - lo_(i) >= lie::kTwoPi) continue;
                    const double shifted = lo_(i) + lie::wrap_angle(x(i) - lo_(i));
                    if (shifted > hi_(i)) return false;
                } else if (x(i) < lo_(i) || x(i) > hi_(i)) {
                    return false;
                }
            }
            return true;
        }
        case RegionKind::TorusGap: {
            if (group_.count() < 2) return true;
            const auto gaps = circular_gaps(g.coords());
            return lie::kTwoPi - *std::max_element(gaps.begin(), gaps.end()) <= parameter_ + 1e-12;
        }
        case RegionKind::TorusSeparated: {
            if (group_.count() < 2) return true;
            const auto gaps = circular_gaps(g.coords());
            return *std::min_element(gaps.begin(), gaps.end()) >= parameter_ - 1e-12;
        }
        case RegionKind::SO3Ball: return certify::sync_distance(g) < parameter_;
    }
    return false;
}

namespace certify {

DPCertificate certify_diffpos(const SystemSpec& sys, const ConeSpec& cone, const RegionSampler& region,
                              const CertifyOptions& options) {
    if (cone.dim() != sys.group.dim()) throw Error(ErrorCode::DimensionMismatch, "cone and system dimensions differ");
    if (!(region.group() == sys.group)) throw Error(ErrorCode::GroupMismatch, "region and system groups differ");
    if (!(options.T > 0.0) || !(options.h > 0.0) || !(options.eps >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "T and h must be positive, eps nonnegative");
    }
    if (options.n_states < 1 || options.n_rays < 1) throw Error(ErrorCode::InvalidArgument, "need states and rays");
    const double h_report = options.h_report > 0.0 ? options.h_report : 10.0 * options.h;
    const int stride = std::max(1, static_cast<int>(std::lround(h_report / options.h)));

    const std::vector<Point> states = region.sample(derive_seed(options.seed, 0), options.n_states);
    const std::vector<Eigen::VectorXd> rays = cones::boundary_sample(cone, options.n_rays, derive_seed(options.seed, 1));
    Eigen::MatrixXd v0(cone.dim(), static_cast<Eigen::Index>(rays.size()));
    for (std::size_t j = 0; j < rays.size(); ++j) v0.col(static_cast<Eigen::Index>(j)) = rays[j];

    const double t_final_tol = 1e-9 * std::max(1.0, options.T);
    std::vector<StateOutcome> outcomes(states.size());

    auto run_state = [&](std::size_t s) {
        StateOutcome& out = outcomes[s];
        dynamics::FlowOptions flow;
        flow.h = options.h;
        flow.stride = stride;
        flow.renormalize = true;
        flow.observer = [&](double t, const Point& g, const Eigen::MatrixXd* v) {
            const bool final_sample = t >= options.T - t_final_tol;
            for (Eigen::Index c = 0; c < v->cols(); ++c) {
                const double m = cones::margin(cone, v->col(c));
                const auto grade = cones::grade_margin(m, options.eps);
                if (final_sample) {
                    if (m < out.final_margin) {
                        out.final_margin = m;
                        out.final_ray = static_cast<int>(c);
                    }
                    if (!out.failed && m < options.eps) {
                        out.failed = true;
                        out.fail_ray = static_cast<int>(c);
                        out.fail_time = t;
                        out.fail_margin = m;
                    }
                } else if (grade.kind == MembershipGrade::Kind::Outside) {
                    out.failed = true;
                    out.fail_ray = static_cast<int>(c);
                    out.fail_time = t;
                    out.fail_margin = m;
                    return false;
                }
            }
            if (final_sample) {
                out.completed = true;
                return true;
            }
            if (!region.contains(g)) {
                out.voided = true;
                out.void_time = t;
                out.void_reason = "left region";
                return false;
            }
            return true;
        };
        try {
            dynamics::variational_flow(sys, states[s], v0, options.T, flow);
        } catch (const FieldBlowUpError& e) {
            out.voided = true;
            out.void_time = e.time();
            out.void_reason = e.what();
        }
    };

    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, static_cast<int>(states.size()));
    if (threads == 1) {
        for (std::size_t s = 0; s < states.size(); ++s) run_state(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::atomic<bool> errored{false};
        std::mutex error_mutex;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t s = next++; s < states.size(); s = next++) {
                    try {
                        run_state(s);
                    } catch (...) {
                        const std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        errored = true;
                    }
                    if (errored) return;
                }
            });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    DPCertificate cert;
    cert.T = options.T;
    cert.eps = options.eps;
    cert.n_states = options.n_states;
    cert.n_rays = static_cast<int>(rays.size());
    cert.seed = options.seed;
    cert.h = options.h;
    cert.h_report = stride * options.h;

    bool any_failed = false;
    int completed = 0;
    double min_final = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        const StateOutcome& o = outcomes[s];
        const auto make_worst = [&](int ray, double time, double margin) {
            WorstCase w;
            w.state = static_cast<int>(s);
            w.ray = ray;
            w.time = time;
            w.margin = margin;
            w.point = states[s].flatten();
            w.ray_vector = rays[static_cast<std::size_t>(ray)];
            return w;
        };
        if (o.failed) {
            if (!any_failed) cert.worst_case = make_worst(o.fail_ray, o.fail_time, o.fail_margin);
            any_failed = true;
        }
        if (o.voided) cert.voided.push_back({static_cast<int>(s), o.void_time, o.void_reason});
        if (o.completed) {
            ++completed;
            if (o.final_margin < min_final) {
                min_final = o.final_margin;
                if (!any_failed) cert.worst_case = make_worst(o.final_ray, options.T, o.final_margin);
            }
        }
    }
    cert.pass = !any_failed && completed > 0;
    if (completed > 0) {
        cert.min_final_margin = min_final;
    } else {
        cert.min_final_margin = cert.worst_case ? cert.worst_case->margin : 0.0;
    }
    cert.notes.push_back("numerical evidence over finitely many sampled states and boundary rays, not a proof");
    cert.notes.push_back("growth of the linearization checked over the finite horizon only");
    if (completed == 0) cert.notes.push_back("no sampled state completed the horizon inside the region");
    return cert;
}

PhaseLock phase_lock_residual(const SystemSpec& sys, const Trajectory& traj, double window) {
    if (sys.group.kind() != GroupKind::Torus && sys.group.kind() != GroupKind::Circle) {
        throw Error(ErrorCode::GroupMismatch, "phase locking needs a torus system");
    }
    if (traj.size() < 2 || !(window > 0.0)) throw Error(ErrorCode::WindowTooShort, "need a positive window");
    const double t_end = traj.times.back();
    if (t_end - traj.times.front() < window - 1e-12) {
        throw Error(ErrorCode::WindowTooShort, "trajectory shorter than the window");
    }
    PhaseLock out;
    double freq_sum = 0.0;
    int samples = 0;
    for (std::size_t s = 0; s < traj.size(); ++s) {
        if (traj.times[s] < t_end - window - 1e-12) continue;
        const Eigen::VectorXd w = sys.field(traj.times[s], traj.points[s]);
        const double mean = w.mean();
        out.residual = std::max(out.residual, (w.array() - mean).abs().maxCoeff());
        freq_sum += mean;
        ++samples;
    }
    if (samples < 2) throw Error(ErrorCode::WindowTooShort, "fewer than two samples in the window");
    out.locked_freq = freq_sum / samples;
    return out;
}

double splay_check(const Point& theta) {
    const auto kind = theta.group().kind();
    if (kind != GroupKind::Torus || theta.group().count() < 2) {
        throw Error(ErrorCode::InvalidArgument, "splay check needs a torus point with N >= 2");
    }
    const auto gaps = circular_gaps(theta.coords());
    const double ideal = lie::kTwoPi / static_cast<double>(gaps.size());
    double worst = 0.0;
    for (double g : gaps) worst = std::max(worst, std::abs(g - ideal));
    return worst;
}

double sync_distance(const Point& g) {
    if (!g.group().has_rotations()) throw Error(ErrorCode::GroupMismatch, "sync distance needs SO(3) agents");
    const auto& rs = g.rotations();
    double worst = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t k = i + 1; k < rs.size(); ++k) {
            worst = std::max(worst, lie::so3_angle(rs[i].transpose() * rs[k]));
        }
    }
    return worst;
}

bool check_invariant_distribution(const GroupSpec& group, const std::vector<Eigen::VectorXd>& basis) {
    const int n = group.dim();
    const Eigen::MatrixXd q = orthonormal_span(basis, n);
    if (group.is_abelian()) return true;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = i + 1; j < basis.size(); ++j) {
            const Eigen::VectorXd b = lie::bracket(group, basis[i], basis[j]);
            const Eigen::VectorXd off = b - q * (q.transpose() * b);
            if (off.norm() > 1e-10 * std::max(1.0, basis[i].norm() * basis[j].norm())) return false;
        }
    }
    return true;
}

std::vector<double> alignment_ratio(const Trajectory& traj, const std::vector<Eigen::VectorXd>& dominant_basis,
                                    int column) {
    if (!traj.has_tangents()) throw Error(ErrorCode::InvalidArgument, "trajectory carries no tangents");
    const auto n = static_cast<int>(traj.tangents.front().rows());
    const Eigen::MatrixXd q = orthonormal_span(dominant_basis, n);
    std::vector<double> phi;
    phi.reserve(traj.tangents.size());
    for (const Eigen::MatrixXd& v : traj.tangents) {
        if (column < 0 || column >= v.cols()) throw Error(ErrorCode::InvalidArgument, "tangent column out of range");
        const Eigen::VectorXd x = v.col(column);
        const double norm = x.norm();
        if (!(norm > 0.0)) throw Error(ErrorCode::DegenerateDirection, "zero tangent");
        const Eigen::VectorXd in = q * (q.transpose() * x);
        const double in_norm = in.norm();
        const double off_norm = (x - in).norm();
        phi.push_back(in_norm > 1e-15 * norm ? off_norm / in_norm : std::numeric_limits<double>::infinity());
    }
    return phi;
}

}  // namespace certify
}  // namespace invdp
