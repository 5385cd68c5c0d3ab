#include "invdp/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace invdp::dynamics {

namespace {

struct Evaluator {
    const SystemSpec& sys;
    const Trajectory& partial;

    Eigen::VectorXd field(double t, const Point& g) const {
        Eigen::VectorXd w;
        try {
            w = sys.field(t, g);
        } catch (const FieldBlowUpError&) {
            throw;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DomainViolation || e.code() == ErrorCode::CutLocus ||
                e.code() == ErrorCode::FieldBlowUp) {
                throw FieldBlowUpError(e.what(), partial, t);
            }
            throw;
        }
        const double norm = w.norm();
        if (!std::isfinite(norm) || norm > kBlowUpBound) {
            std::ostringstream os;
            os << "|Omega| = " << norm << " at t = " << t;
            throw FieldBlowUpError(os.str(), partial, t);
        }
        return w;
    }

    Eigen::MatrixXd linearization(double t, const Point& g, bool allow_fd) const {
        if (sys.linearization) {
            try {
                return sys.linearization(t, g);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DomainViolation || e.code() == ErrorCode::CutLocus) {
                    throw FieldBlowUpError(e.what(), partial, t);
                }
                throw;
            }
        }
        if (!allow_fd) throw Error(ErrorCode::MissingLinearization, "system has no analytic linearization");
        return fd_linearization(sys, g, kDefaultFdStep, t);
    }
};

int step_count(double T, double h) {
    if (!(T > 0.0) || !(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "T and h must be positive");
    if (h > T) throw Error(ErrorCode::InvalidArgument, "step larger than horizon");
    return static_cast<int>(std::ceil(T / h - 1e-9));
}

void check_field_dims(const SystemSpec& sys, const Point& g0) {
    if (!sys.field) throw Error(ErrorCode::InvalidArgument, "system has no vector field");
    if (!(g0.group() == sys.group)) {
        throw Error(ErrorCode::GroupMismatch, g0.group().name() + " vs " + sys.group.name());
    }
}

Trajectory integrate(const SystemSpec& sys, const Point& g0, const Eigen::MatrixXd* v0, double T,
                     const FlowOptions& options) {
    check_field_dims(sys, g0);
    const int n = step_count(T, options.h);
    const double h = T / n;
    const int stride = std::max(1, options.stride);
    const GroupSpec& group = sys.group;
    const bool with_tangents = v0 != nullptr;
    if (with_tangents && v0->rows() != group.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "tangent rows must equal the group dimension");
    }

    Trajectory traj;
    const Evaluator eval{sys, traj};
    Point g = g0;
    Eigen::MatrixXd v = with_tangents ? *v0 : Eigen::MatrixXd();

    auto record = [&](double t) {
        if (with_tangents && options.renormalize) {
            for (Eigen::Index c = 0; c < v.cols(); ++c) {
                const double norm = v.col(c).norm();
                if (norm > 0.0) v.col(c) /= norm;
            }
        }
        traj.times.push_back(t);
        traj.points.push_back(g);
        if (with_tangents) traj.tangents.push_back(v);
        if (options.observer) return options.observer(t, g, with_tangents ? &v : nullptr);
        return true;
    };

    if (!record(options.t0)) return traj;
    for (int step = 1; step <= n; ++step) {
        const double t = options.t0 + (step - 1) * h;
        const Eigen::VectorXd k1 = eval.field(t, g);
        const Eigen::VectorXd u2 = 0.5 * h * k1;
        const Point g2 = lie::retract(g, u2);
        const Eigen::VectorXd k2 = dexp_inv(group, u2, eval.field(t + 0.5 * h, g2));
        const Eigen::VectorXd u3 = 0.5 * h * k2;
        const Point g3 = lie::retract(g, u3);
        const Eigen::VectorXd k3 = dexp_inv(group, u3, eval.field(t + 0.5 * h, g3));
        const Eigen::VectorXd u4 = h * k3;
        const Point g4 = lie::retract(g, u4);
        const Eigen::VectorXd k4 = dexp_inv(group, u4, eval.field(t + h, g4));

        if (with_tangents) {
            const Eigen::MatrixXd l1 = eval.linearization(t, g, options.allow_fd) * v;
            const Eigen::MatrixXd l2 = eval.linearization(t + 0.5 * h, g2, options.allow_fd) * (v + 0.5 * h * l1);
            const Eigen::MatrixXd l3 = eval.linearization(t + 0.5 * h, g3, options.allow_fd) * (v + 0.5 * h * l2);
            const Eigen::MatrixXd l4 = eval.linearization(t + h, g4, options.allow_fd) * (v + h * l3);
            v += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        g = lie::retract(g, (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));

        if (step % stride == 0 || step == n) {
            const double tr = step == n ? options.t0 + T : options.t0 + step * h;
            if (!record(tr)) break;
        }
    }
    return traj;
}

}  // namespace

Eigen::VectorXd dexp_inv(const GroupSpec& group, const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    if (group.is_abelian()) return w;
    const Eigen::VectorXd uw = lie::bracket(group, u, w);
    return w + 0.5 * uw + (1.0 / 12.0) * lie::bracket(group, u, uw);
}

Trajectory flow(const SystemSpec& sys, const Point& g0, double T, const FlowOptions& options) {
    return integrate(sys, g0, nullptr, T, options);
}

Trajectory variational_flow(const SystemSpec& sys, const Point& g0, const Eigen::MatrixXd& v0, double T,
                            const FlowOptions& options) {
    if (!sys.linearization && !options.allow_fd) {
        throw Error(ErrorCode::MissingLinearization, "system has no analytic linearization and FD is disabled");
    }
    return integrate(sys, g0, &v0, T, options);
}

Eigen::MatrixXd fd_linearization(const SystemSpec& sys, const Point& g, double h_fd, double t) {
    if (!(h_fd >= 1e-7 && h_fd <= 1e-3)) throw Error(ErrorCode::InvalidArgument, "h_fd must lie in [1e-7, 1e-3]");
    check_field_dims(sys, g);
    const GroupSpec& group = sys.group;
    const int n = group.dim();
    const Eigen::VectorXd omega = sys.field(t, g);
    Eigen::MatrixXd a(n, n);
    auto central = [&](const Eigen::VectorXd& e, double step) -> Eigen::VectorXd {
        return (sys.field(t, lie::retract(g, step * e)) - sys.field(t, lie::retract(g, -step * e))) / (2.0 * step);
    };
    for (int j = 0; j < n; ++j) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, j);
        const Eigen::VectorXd coarse = central(e, h_fd);
        const Eigen::VectorXd fine = central(e, 0.5 * h_fd);
        a.col(j) = (4.0 * fine - coarse) / 3.0 - lie::bracket(group, omega, e);
    }
    return a;
}

Eigen::VectorXd discrete_pushforward(const GroupMap& F, const Point& g, const Eigen::VectorXd& v, double h_fd) {
    if (v.size() != g.group().dim()) throw Error(ErrorCode::DimensionMismatch, "tangent length mismatch");
    const Point base_inv = lie::inverse(F(g));
    auto central = [&](double step) -> Eigen::VectorXd {
        const Eigen::VectorXd plus = lie::log(lie::compose(base_inv, F(lie::retract(g, step * v))));
        const Eigen::VectorXd minus = lie::log(lie::compose(base_inv, F(lie::retract(g, -step * v))));
        return (plus - minus) / (2.0 * step);
    };
    return (4.0 * central(0.5 * h_fd) - central(h_fd)) / 3.0;
}

}  // namespace invdp::dynamics
