#include "mlms/systems.hpp"

#include "mlms/csv.hpp"
#include "mlms/error.hpp"

#include <bit>
#include <cmath>
#include <ostream>

namespace mlms::systems {

std::string_view to_string(RegressorKind k) noexcept
{
    switch (k) {
    case RegressorKind::iid_gaussian: return "iid_gaussian";
    case RegressorKind::cycling_basis: return "cycling_basis";
    case RegressorKind::ar_diag: return "ar_diag";
    }
    return "?";
}

std::optional<RegressorKind> parse_regressor_kind(std::string_view name) noexcept
{
    if (name == "iid_gaussian") return RegressorKind::iid_gaussian;
    if (name == "cycling_basis") return RegressorKind::cycling_basis;
    if (name == "ar_diag") return RegressorKind::ar_diag;
    return std::nullopt;
}

RegressorStream::RegressorStream(RegressorSpec spec, Rng rng) : spec_(std::move(spec)), rng_(rng)
{
    if (spec_.dim == 0) throw InvalidArgument("regressor dim must be >= 1");
    if (spec_.scale < 0.0) throw InvalidArgument("regressor scale must be >= 0");
    const auto m = static_cast<Eigen::Index>(spec_.dim);
    if (spec_.kind == RegressorKind::ar_diag) {
        if (spec_.ar_diag.size() != m) throw InvalidArgument("ar_diag length must equal dim");
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!(std::abs(spec_.ar_diag[i]) < 1.0)) throw InvalidArgument("ar_diag entries must satisfy |a_i| < 1");
        }
    }
    state_ = Vector::Zero(m);
    if (spec_.kind == RegressorKind::cycling_basis && spec_.random_phase) index_ = rng_.below(spec_.dim);
}

Vector RegressorStream::next()
{
    const auto m = static_cast<Eigen::Index>(spec_.dim);
    switch (spec_.kind) {
    case RegressorKind::iid_gaussian: {
        const double sd = std::sqrt(spec_.scale);
        Vector v(m);
        for (Eigen::Index i = 0; i < m; ++i) v[i] = sd * rng_.normal();
        return v;
    }
    case RegressorKind::cycling_basis: {
        Vector v = Vector::Zero(m);
        const double sign = spec_.random_phase && (rng_.next_u64() & 1U) ? -1.0 : 1.0;
        v[static_cast<Eigen::Index>(index_ % spec_.dim)] = sign;
        ++index_;
        return v;
    }
    case RegressorKind::ar_diag: {
        Vector out = state_;
        const double sd = std::sqrt(spec_.scale);
        for (Eigen::Index i = 0; i < m; ++i) state_[i] = spec_.ar_diag[i] * state_[i] + sd * rng_.normal();
        return out;
    }
    }
    throw InvalidArgument("unknown regressor kind");
}

JumpSystemSpec JumpSystemSpec::reference()
{
    JumpSystemSpec s;
    s.dim = 6;
    s.a_diag = Vector(6);
    s.a_diag << 0.6, 0.7, 0.9, 0.2, 0.5, 0.3;
    return s;
}

void JumpSystemSpec::validate() const
{
    if (dim == 0) throw InvalidArgument("jump system: dim must be >= 1");
    if (static_cast<std::size_t>(a_diag.size()) != dim) throw InvalidArgument("jump system: a_diag length must equal dim");
    for (Eigen::Index i = 0; i < a_diag.size(); ++i) {
        if (!(std::abs(a_diag[i]) < 1.0)) throw InvalidArgument("jump system: |a_diag_i| must be < 1");
    }
    if (jump_period == 0) throw InvalidArgument("jump system: jump_period must be >= 1");
    if (!(state_noise_cov_scale >= 0.0) || !(jump_scale >= 0.0) || !(obs_noise_std >= 0.0) || !(theta0_std >= 0.0))
        throw InvalidArgument("jump system: scales and standard deviations must be >= 0");
}

Trajectory gen_jump_system(const JumpSystemSpec& spec, std::uint64_t seed)
{
    spec.validate();
    const auto m = static_cast<Eigen::Index>(spec.dim);
    // Independent substreams per noise source, so e.g. changing the jump scale
    // leaves the regressor path untouched.
    Rng root(seed);
    Rng theta_rng = root.split(0);
    Rng jump_rng = root.split(1);
    Rng obs_rng = root.split(2);

    RegressorSpec rs;
    rs.kind = RegressorKind::ar_diag;
    rs.dim = spec.dim;
    rs.scale = spec.state_noise_cov_scale;
    rs.ar_diag = spec.a_diag;
    RegressorStream phis(rs, root.split(3));

    Trajectory t;
    t.seed = seed;
    t.meta = "jump_system dim=" + std::to_string(spec.dim) + " period=" + std::to_string(spec.jump_period) +
             " horizon=" + std::to_string(spec.horizon) +
             "; theta_0 ~ N(0, theta0_std^2 I) stands in for the k=0 jump, first Delta at k=period";
    t.phi.reserve(spec.horizon);
    t.theta.reserve(spec.horizon);
    t.y.reserve(spec.horizon);
    t.noise.reserve(spec.horizon);

    Vector theta(m);
    for (Eigen::Index i = 0; i < m; ++i) theta[i] = spec.theta0_std * theta_rng.normal();

    for (std::size_t k = 0; k < spec.horizon; ++k) {
        if (k > 0 && k % spec.jump_period == 0) {
            for (Eigen::Index i = 0; i < m; ++i) theta[i] += spec.jump_scale * jump_rng.uniform(-1.0, 1.0);
        }
        Vector phi = phis.next();
        const double v = spec.obs_noise_std * obs_rng.normal();
        t.y.push_back(phi.dot(theta) + v);
        t.noise.push_back(v);
        t.phi.push_back(std::move(phi));
        t.theta.push_back(theta);
    }
    return t;
}

std::vector<Vector> gen_random_walk_params(std::size_t dim, double increment_std, std::size_t horizon,
                                           std::uint64_t seed)
{
    if (dim == 0) throw InvalidArgument("random walk: dim must be >= 1");
    if (horizon == 0) throw InvalidArgument("random walk: horizon must be >= 1");
    if (!(increment_std >= 0.0)) throw InvalidArgument("random walk: increment_std must be >= 0");
    const auto m = static_cast<Eigen::Index>(dim);
    Rng rng(seed);
    std::vector<Vector> path;
    path.reserve(horizon + 1);
    path.push_back(Vector::Zero(m));
    for (std::size_t k = 1; k <= horizon; ++k) {
        Vector next = path.back();
        for (Eigen::Index i = 0; i < m; ++i) next[i] += increment_std * rng.normal();
        path.push_back(std::move(next));
    }
    return path;
}

Trajectory gen_constant_param_stream(const Vector& theta, RegressorSpec regressors, double noise_std,
                                     std::size_t horizon, std::uint64_t seed)
{
    if (theta.size() == 0) throw InvalidArgument("constant stream: theta must be non-empty");
    if (horizon == 0) throw InvalidArgument("constant stream: horizon must be >= 1");
    if (!(noise_std >= 0.0)) throw InvalidArgument("constant stream: noise_std must be >= 0");
    regressors.dim = static_cast<std::size_t>(theta.size());
    if (regressors.kind == RegressorKind::ar_diag && regressors.ar_diag.size() == 0) {
        regressors.ar_diag = Vector::Constant(theta.size(), 0.5);
    }

    Rng root(seed);
    RegressorStream phis(regressors, root.split(0));
    Rng obs_rng = root.split(1);

    Trajectory t;
    t.seed = seed;
    t.meta = "constant_params regressors=" + std::string(to_string(regressors.kind)) +
             " horizon=" + std::to_string(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        Vector phi = phis.next();
        const double v = noise_std * obs_rng.normal();
        t.y.push_back(phi.dot(theta) + v);
        t.noise.push_back(v);
        t.phi.push_back(std::move(phi));
        t.theta.push_back(theta);
    }
    return t;
}

Trajectory gen_constant_param_stream(const Vector& theta, RegressorKind kind, double noise_std, std::size_t horizon,
                                     std::uint64_t seed)
{
    RegressorSpec rs;
    rs.kind = kind;
    return gen_constant_param_stream(theta, rs, noise_std, horizon, seed);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    const std::size_t m = traj.dim();
    os << "k";
    for (std::size_t i = 0; i < m; ++i) os << ",phi_" << i;
    for (std::size_t i = 0; i < m; ++i) os << ",theta_" << i;
    os << ",y\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << k;
        for (std::size_t i = 0; i < m; ++i) os << ',' << csv::num(traj.phi[k][static_cast<Eigen::Index>(i)]);
        for (std::size_t i = 0; i < m; ++i) os << ',' << csv::num(traj.theta[k][static_cast<Eigen::Index>(i)]);
        os << ',' << csv::num(traj.y[k]) << '\n';
    }
}

std::uint64_t trajectory_hash(const Trajectory& traj) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](double x) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFFU;
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t k = 0; k < traj.size(); ++k) {
        for (Eigen::Index i = 0; i < traj.phi[k].size(); ++i) feed(traj.phi[k][i]);
        for (Eigen::Index i = 0; i < traj.theta[k].size(); ++i) feed(traj.theta[k][i]);
        feed(traj.y[k]);
        feed(traj.noise[k]);
    }
    return h;
}

} // namespace mlms::systems
