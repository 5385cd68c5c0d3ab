#include "invdp/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "invdp/errors.hpp"

namespace invdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_vertex(int n, int v) {
    if (v < 0 || v >= n) throw Error(ErrorCode::InvalidArgument, "vertex " + std::to_string(v) + " out of range");
}

std::vector<std::vector<int>> adjacency(int n, const std::vector<Edge>& edges, bool reverse) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const Edge& e : edges) {
        if (reverse) {
            adj[static_cast<std::size_t>(e.to)].push_back(e.from);
        } else {
            adj[static_cast<std::size_t>(e.from)].push_back(e.to);
        }
    }
    return adj;
}

bool reaches_all(const std::vector<std::vector<int>>& adj) {
    std::vector<bool> seen(adj.size(), false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = true;
                stack.push_back(w);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::string edge_label(const Edge& e) {
    return "(" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
}

}  // namespace

Digraph::Digraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "graph needs at least one vertex");
    for (std::size_t a = 0; a < edges_.size(); ++a) {
        check_vertex(n, edges_[a].from);
        check_vertex(n, edges_[a].to);
        if (edges_[a].from == edges_[a].to) throw Error(ErrorCode::InvalidArgument, "self-loop " + edge_label(edges_[a]));
        for (std::size_t b = 0; b < a; ++b) {
            if (edges_[a] == edges_[b]) throw Error(ErrorCode::InvalidArgument, "duplicate edge " + edge_label(edges_[a]));
        }
    }
}

Digraph Digraph::complete(int n) {
    std::vector<Edge> edges;
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            if (i != k) edges.push_back({k, i});
        }
    }
    return {n, std::move(edges)};
}

Digraph Digraph::ring(int n) {
    if (n < 2) return {n, {}};
    std::vector<std::pair<int, int>> pairs;
    for (int k = 0; k < n; ++k) {
        const int next = (k + 1) % n;
        if (n == 2 && k == 1) break;
        pairs.emplace_back(k, next);
    }
    return undirected(n, pairs);
}

Digraph Digraph::undirected(int n, const std::vector<std::pair<int, int>>& pairs) {
    std::vector<Edge> edges;
    for (const auto& [k, i] : pairs) {
        edges.push_back({k, i});
        edges.push_back({i, k});
    }
    return {n, std::move(edges)};
}

bool Digraph::has_edge(int k, int i) const {
    return std::find(edges_.begin(), edges_.end(), Edge{k, i}) != edges_.end();
}

bool Digraph::strongly_connected() const {
    if (n_ == 1) return true;
    return reaches_all(adjacency(n_, edges_, false)) && reaches_all(adjacency(n_, edges_, true));
}

bool Digraph::is_bidirectional() const {
    return std::all_of(edges_.begin(), edges_.end(), [&](const Edge& e) { return has_edge(e.to, e.from); });
}

void Digraph::set_schedule(std::vector<std::vector<double>> schedule, double dwell) {
    if (!(dwell > 0.0)) throw Error(ErrorCode::InvalidWeights, "dwell time must be positive");
    for (const auto& row : schedule) {
        if (row.size() != edges_.size()) throw Error(ErrorCode::InvalidWeights, "one weight per edge required");
    }
    auto old = std::move(schedule_);
    schedule_ = std::move(schedule);
    try {
        validate_schedule();
    } catch (...) {
        schedule_ = std::move(old);
        throw;
    }
    dwell_ = dwell;
}

void Digraph::set_delta(double delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidWeights, "delta must be positive");
    const auto old = delta_;
    delta_ = delta;
    try {
        validate_schedule();
    } catch (...) {
        delta_ = old;
        throw;
    }
}

void Digraph::validate_schedule() const {
    for (const auto& row : schedule_) {
        for (std::size_t e = 0; e < row.size(); ++e) {
            const double w = row[e];
            if (!std::isfinite(w) || w < 0.0) {
                throw Error(ErrorCode::InvalidWeights, "negative weight on edge " + edge_label(edges_[e]));
            }
            // A zero weight means the edge is absent during that interval.
            if (delta_ && w > 0.0 && w < *delta_) {
                std::ostringstream os;
                os << "weight " << w << " on edge " << edge_label(edges_[e]) << " below delta " << *delta_;
                throw Error(ErrorCode::InvalidWeights, os.str());
            }
        }
    }
    if (delta_ && schedule_.empty() && *delta_ > 1.0) {
        throw Error(ErrorCode::InvalidWeights, "unit default weights fall below delta");
    }
}

double Digraph::weight(std::size_t edge, double t) const {
    if (edge >= edges_.size()) throw Error(ErrorCode::InvalidArgument, "edge index out of range");
    if (schedule_.empty()) return 1.0;
    const double slots = std::floor(t / dwell_);
    const auto count = static_cast<long long>(schedule_.size());
    long long j = static_cast<long long>(slots) % count;
    if (j < 0) j += count;
    return schedule_[static_cast<std::size_t>(j)][edge];
}

std::string to_string(CouplingKind kind) {
    switch (kind) {
        case CouplingKind::Sine: return "Sine";
        case CouplingKind::BarrierSync: return "BarrierSync";
        case CouplingKind::RepulsiveBalance: return "RepulsiveBalance";
        case CouplingKind::LinearGain: return "LinearGain";
        case CouplingKind::Custom: return "Custom";
    }
    return "?";
}

double Coupling::argument(double difference) const {
    const double a = wrap_positive ? lie::wrap_angle(difference) : lie::wrap_difference(difference);
    if (!(a > lo && a < hi)) {
        std::ostringstream os;
        os << "difference " << a << " outside (" << lo << ", " << hi << ")";
        throw Error(ErrorCode::DomainViolation, os.str());
    }
    return a;
}

Coupling make_coupling(CouplingKind kind, const CouplingParams& params) {
    const double gain = params.gain;
    if (!std::isfinite(gain) || !(gain > 0.0)) throw Error(ErrorCode::BadParams, "coupling gain must be positive");
    Coupling c;
    c.kind = kind;
    switch (kind) {
        case CouplingKind::Sine:
            c.f = [gain](double a) { return gain * std::sin(a); };
            c.fprime = [gain](double a) { return gain * std::cos(a); };
            c.lo = -kInf;
            c.hi = kInf;
            c.monotone_lo = -M_PI / 2.0;
            c.monotone_hi = M_PI / 2.0;
            break;
        case CouplingKind::BarrierSync:
            c.f = [gain](double a) { return gain * std::tan(0.5 * a); };
            c.fprime = [gain](double a) {
                const double s = 1.0 / std::cos(0.5 * a);
                return 0.5 * gain * s * s;
            };
            c.lo = -M_PI;
            c.hi = M_PI;
            break;
        case CouplingKind::RepulsiveBalance:
            c.f = [gain](double a) { return -gain / std::tan(0.5 * a); };
            c.fprime = [gain](double a) {
                const double s = 1.0 / std::sin(0.5 * a);
                return 0.5 * gain * s * s;
            };
            c.wrap_positive = true;
            c.lo = 0.0;
            c.hi = lie::kTwoPi;
            c.monotone_lo = 0.0;
            c.monotone_hi = lie::kTwoPi;
            break;
        case CouplingKind::LinearGain:
            c.f = [gain](double a) { return gain * a; };
            c.fprime = [gain](double) { return gain; };
            c.lo = -kInf;
            c.hi = kInf;
            break;
        case CouplingKind::Custom:
            throw Error(ErrorCode::BadParams, "custom couplings need explicit f and f'");
    }
    return c;
}

Coupling make_custom_coupling(std::function<double(double)> f, std::function<double(double)> fprime, double lo,
                              double hi) {
    if (!f || !fprime) throw Error(ErrorCode::BadParams, "custom coupling needs f and f'");
    if (!(lo < hi)) throw Error(ErrorCode::BadParams, "empty coupling domain");
    Coupling c;
    c.kind = CouplingKind::Custom;
    c.f = std::move(f);
    c.fprime = std::move(fprime);
    c.wrap_positive = lo >= 0.0;
    c.lo = lo;
    c.hi = hi;
    c.monotone_lo = lo;
    c.monotone_hi = hi;
    return c;
}

SO3Reshape make_reshape(ReshapeKind kind, double gain) {
    if (!std::isfinite(gain) || !(gain > 0.0)) throw Error(ErrorCode::BadParams, "reshape gain must be positive");
    SO3Reshape r;
    switch (kind) {
        case ReshapeKind::Linear:
            r.f = [gain](double th) { return gain * th; };
            r.fprime = [gain](double) { return gain; };
            break;
        case ReshapeKind::SinHalf:
            r.f = [gain](double th) { return gain * std::sin(0.5 * th); };
            r.fprime = [gain](double th) { return 0.5 * gain * std::cos(0.5 * th); };
            break;
        case ReshapeKind::TanHalf:
            r.f = [gain](double th) { return gain * std::tan(0.5 * th); };
            r.fprime = [gain](double th) {
                const double s = 1.0 / std::cos(0.5 * th);
                return 0.5 * gain * s * s;
            };
            r.barrier = true;
            break;
    }
    return r;
}

namespace models {

namespace {

/// u1 = x / |x|, u2 = Gram-Schmidt of the canonical axis least aligned with u1,
/// u3 = u2 x u1. Columns of the returned matrix.
Eigen::Matrix3d adapted_basis(const Eigen::Vector3d& u1) {
    Eigen::Index axis = 0;
    u1.cwiseAbs().minCoeff(&axis);
    Eigen::Vector3d u2 = Eigen::Vector3d::Unit(axis);
    u2 -= u2.dot(u1) * u1;
    u2.normalize();
    Eigen::Matrix3d basis;
    basis.col(0) = u1;
    basis.col(1) = u2;
    basis.col(2) = u2.cross(u1);
    return basis;
}

std::vector<Coupling> expand_couplings(const Digraph& graph, std::vector<Coupling> couplings) {
    const std::size_t m = graph.edges().size();
    if (couplings.size() == 1 && m != 1) couplings.assign(m, couplings.front());
    if (couplings.size() != m) {
        throw Error(ErrorCode::DimensionMismatch, "expected one coupling per edge or a single shared coupling");
    }
    for (const Coupling& c : couplings) {
        if (!c.f || !c.fprime) throw Error(ErrorCode::BadParams, "coupling without f or f'");
    }
    return couplings;
}

void check_so3_pair(double theta, const Edge& e, const SO3Reshape& f) {
    if (theta >= M_PI - 1e-9) throw Error(ErrorCode::CutLocus, "agents on edge " + edge_label(e) + " are antipodal");
    if (f.barrier && !std::isfinite(f.f(theta))) {
        throw Error(ErrorCode::DomainViolation, "barrier reshape diverges on edge " + edge_label(e));
    }
}

}  // namespace

SystemSpec pendulum(double rho, double u) {
    if (!(rho >= 0.0)) throw Error(ErrorCode::BadParams, "rho must be nonnegative");
    SystemSpec sys;
    sys.group = GroupSpec::cylinder();
    sys.field = [rho, u](double, const Point& g) {
        const double theta = g.coords()(0);
        const double v = g.coords()(1);
        Eigen::VectorXd w(2);
        w << v, -std::sin(theta) - rho * v + u;
        return w;
    };
    sys.linearization = [rho](double, const Point& g) {
        Eigen::MatrixXd a(2, 2);
        a << 0.0, 1.0, -std::cos(g.coords()(0)), -rho;
        return a;
    };
    sys.meta.model = "pendulum";
    sys.meta.params = {{"rho", rho}, {"u", u}};
    return sys;
}

SystemSpec torus_consensus(const Digraph& graph, std::vector<Coupling> couplings, const Eigen::VectorXd& omegas) {
    const int n = graph.size();
    if (omegas.size() != n) throw Error(ErrorCode::DimensionMismatch, "one intrinsic frequency per agent required");
    auto shared = std::make_shared<const std::vector<Coupling>>(expand_couplings(graph, std::move(couplings)));
    SystemSpec sys;
    sys.group = GroupSpec::torus(n);
    sys.field = [graph, shared, omegas](double t, const Point& g) {
        const Eigen::VectorXd& th = g.coords();
        Eigen::VectorXd w = omegas;
        const auto& edges = graph.edges();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const double a = graph.weight(e, t);
            if (a == 0.0) continue;
            const Edge& ed = edges[e];
            const double value = (*shared)[e].value(th(ed.to) - th(ed.from));
            if (!std::isfinite(value) || std::abs(value) > dynamics::kBlowUpBound) {
                std::ostringstream os;
                os << "coupling on edge " << edge_label(ed) << " reached " << value;
                throw Error(ErrorCode::FieldBlowUp, os.str());
            }
            w(ed.from) += a * value;
        }
        return w;
    };
    sys.linearization = [graph, shared](double t, const Point& g) {
        const Eigen::VectorXd& th = g.coords();
        const Eigen::Index n = th.size();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        const auto& edges = graph.edges();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const double weight = graph.weight(e, t);
            if (weight == 0.0) continue;
            const Edge& ed = edges[e];
            const double slope = weight * (*shared)[e].slope(th(ed.to) - th(ed.from));
            a(ed.from, ed.to) += slope;
            a(ed.from, ed.from) -= slope;
        }
        return a;
    };
    sys.meta.model = "torus_consensus";
    sys.meta.params = {{"N", static_cast<double>(n)}};
    return sys;
}

Eigen::Matrix3d so3_block(const SO3Reshape& f, double r) {
    if (!(r > 0.0 && r < M_PI)) throw Error(ErrorCode::OutOfDomain, "r must lie in (0, pi)");
    const double fr = f.f(r);
    const double c = 0.5 * fr / std::tan(0.5 * r);
    Eigen::Matrix3d b;
    b << f.fprime(r), 0.0, 0.0, 0.0, c, 0.5 * fr, 0.0, -0.5 * fr, c;
    return b;
}

Eigen::Matrix3d so3_block_frame(const SO3Reshape& f, const Eigen::Vector3d& x) {
    const double r = x.norm();
    const Eigen::Matrix3d block = so3_block(f, r);
    const Eigen::Matrix3d basis = adapted_basis(x / r);
    return basis * block * basis.transpose();
}

Eigen::MatrixXd so3_coupling_matrix(const Digraph& graph, const SO3Reshape& f, const Point& g, double t) {
    if (g.group().kind() != GroupKind::SO3Power || g.group().count() != graph.size()) {
        throw Error(ErrorCode::GroupMismatch, "state must lie on SO(3)^N with N = graph size");
    }
    const int n = graph.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    const auto& edges = graph.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const double weight = graph.weight(e, t);
        if (weight == 0.0) continue;
        const Edge& ed = edges[e];
        const Eigen::Matrix3d rel = g.rotation(ed.from).transpose() * g.rotation(ed.to);
        const double theta = lie::so3_angle(rel);
        check_so3_pair(theta, ed, f);
        Eigen::Matrix3d block;
        if (theta < 1e-8) {
            // Limit of the block at r -> 0: f'(0) I.
            block = f.fprime(0.0) * Eigen::Matrix3d::Identity();
        } else {
            block = so3_block_frame(f, lie::so3_log(rel));
        }
        block *= weight;
        a.block<3, 3>(3 * ed.from, 3 * ed.to) += block;
        a.block<3, 3>(3 * ed.from, 3 * ed.from) -= block;
    }
    return a;
}

SystemSpec so3_consensus(const Digraph& graph, const SO3Reshape& f, const std::vector<Eigen::Vector3d>& intrinsic) {
    const int n = graph.size();
    if (static_cast<int>(intrinsic.size()) != n) {
        throw Error(ErrorCode::DimensionMismatch, "one intrinsic velocity per agent required");
    }
    if (!f.f || !f.fprime) throw Error(ErrorCode::BadParams, "reshape without f or f'");
    SystemSpec sys;
    sys.group = GroupSpec::so3_power(n);
    sys.field = [graph, f, intrinsic](double t, const Point& g) {
        const int n = graph.size();
        Eigen::VectorXd w(3 * n);
        for (int k = 0; k < n; ++k) w.segment<3>(3 * k) = intrinsic[static_cast<std::size_t>(k)];
        const auto& edges = graph.edges();
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const double weight = graph.weight(e, t);
            if (weight == 0.0) continue;
            const Edge& ed = edges[e];
            const Eigen::Matrix3d rel = g.rotation(ed.from).transpose() * g.rotation(ed.to);
            const double theta = lie::so3_angle(rel);
            check_so3_pair(theta, ed, f);
            if (theta < 1e-12) continue;
            const Eigen::Vector3d x = lie::so3_log(rel);
            const double value = f.f(theta);
            if (std::abs(value) > dynamics::kBlowUpBound) {
                throw Error(ErrorCode::FieldBlowUp, "reshape on edge " + edge_label(ed) + " diverged");
            }
            w.segment<3>(3 * ed.from) += weight * value * x / theta;
        }
        return w;
    };
    sys.linearization = [graph, f, intrinsic](double t, const Point& g) {
        Eigen::MatrixXd a = so3_coupling_matrix(graph, f, g, t);
        for (int k = 0; k < graph.size(); ++k) {
            a.block<3, 3>(3 * k, 3 * k) -= lie::hat(intrinsic[static_cast<std::size_t>(k)]);
        }
        return a;
    };
    sys.meta.model = "so3_consensus";
    sys.meta.params = {{"N", static_cast<double>(n)}};
    return sys;
}

Eigen::MatrixXd consensus_matrix(const Digraph& graph, TimeKind time, double t) {
    const int n = graph.size();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    const auto& edges = graph.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const double a = graph.weight(e, t);
        if (a < 0.0 || !std::isfinite(a)) throw Error(ErrorCode::InvalidWeights, "negative edge weight");
        w(edges[e].from, edges[e].to) += a;
    }
    if (time == TimeKind::Continuous) {
        Eigen::MatrixXd a = w;
        for (int k = 0; k < n; ++k) a(k, k) = -w.row(k).sum();
        return a;
    }
    // Unit self-weight, then renormalize each row to sum to one.
    Eigen::MatrixXd a = w + Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = a.row(k).sum();
        a.row(k) /= s;
        a(k, k) = 1.0 - (a.row(k).sum() - a(k, k));
    }
    return a;
}

SystemSpec linear_consensus(const Digraph& graph, TimeKind time) {
    const int n = graph.size();
    SystemSpec sys;
    sys.group = GroupSpec::euclidean(n);
    sys.linearization = [graph, time](double t, const Point&) { return consensus_matrix(graph, time, t); };
    if (time == TimeKind::Continuous) {
        sys.field = [graph](double t, const Point& x) -> Eigen::VectorXd {
            return consensus_matrix(graph, TimeKind::Continuous, t) * x.coords();
        };
    } else {
        sys.discrete_map = [graph](double t, const Point& x) {
            return Point::from_coords(x.group(), consensus_matrix(graph, TimeKind::Discrete, t) * x.coords());
        };
    }
    sys.meta.model = "linear_consensus";
    sys.meta.params = {{"N", static_cast<double>(n)}, {"discrete", time == TimeKind::Discrete ? 1.0 : 0.0}};
    return sys;
}

}  // namespace models
}  // namespace invdp
