#pragma once

#include "mlms/filters.hpp"
#include "mlms/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlms::systems {

using filters::Matrix;
using filters::Vector;

enum class RegressorKind { iid_gaussian, cycling_basis, ar_diag };

std::string_view to_string(RegressorKind k) noexcept;
std::optional<RegressorKind> parse_regressor_kind(std::string_view name) noexcept;

struct RegressorSpec {
    RegressorKind kind = RegressorKind::iid_gaussian;
    std::size_t dim = 1;
    /// iid_gaussian: covariance scale * I. ar_diag: driving-noise covariance scale * I.
    double scale = 1.0;
    /// ar_diag only: diagonal of the AR matrix, |a_i| < 1.
    Vector ar_diag;
    /// cycling_basis only: start at a random basis vector and flip signs at
    /// random. phi phi^T is unchanged, so the excitation constant is too.
    bool random_phase = false;
};

/// Sequential regressor generator. cycling_basis visits e_1, e_2, ..., e_m, e_1, ...
/// ar_diag follows phi_{k+1} = diag(a) phi_k + w_k with phi_0 = 0.
class RegressorStream {
public:
    RegressorStream(RegressorSpec spec, Rng rng);
    Vector next();

private:
    RegressorSpec spec_;
    Rng rng_;
    Vector state_;
    std::size_t index_ = 0;
};

/// Stream of (phi_k, theta_k, y_{k+1}, v_{k+1}), k = 0..T-1. y[k] holds y_{k+1}.
struct Trajectory {
    std::vector<Vector> phi;
    std::vector<Vector> theta;
    std::vector<double> y;
    std::vector<double> noise;
    std::uint64_t seed = 0;
    std::string meta;

    std::size_t size() const noexcept { return y.size(); }
    std::size_t dim() const noexcept { return phi.empty() ? 0 : static_cast<std::size_t>(phi.front().size()); }
};

/// Linear stochastic system with abrupt parameter jumps:
///   phi_{k+1} = A phi_k + v_k,   v_k ~ N(0, scale I),   phi_0 = 0
///   theta_k   = theta_{k-1} + Delta_k
///   Delta_k   = jump_scale * U([-1,1]^m) when k > 0 and k % jump_period == 0, else 0
///   y_{k+1}   = phi_k' theta_k + eps_k,  eps_k ~ N(0, obs_noise_std^2)
/// theta_0 ~ N(0, theta0_std^2 I) plays the role of the k = 0 jump.
struct JumpSystemSpec {
    std::size_t dim = 6;
    Vector a_diag;
    double state_noise_cov_scale = 4.0;
    std::size_t jump_period = 100;
    double jump_scale = 0.5;
    double obs_noise_std = 0.1;
    std::size_t horizon = 500;
    double theta0_std = 1.0;

    /// m = 6, A = diag(0.6, 0.7, 0.9, 0.2, 0.5, 0.3), scale 4, jumps of 0.5 every 100 steps,
    /// noise 0.1, T = 500, theta_0 ~ N(0, I).
    static JumpSystemSpec reference();
    void validate() const;
};

Trajectory gen_jump_system(const JumpSystemSpec& spec, std::uint64_t seed);

/// theta_0 = 0, theta_k = theta_{k-1} + Delta_k with Delta_k iid N(0, increment_std^2 I).
/// Returns horizon + 1 vectors theta_0..theta_horizon.
std::vector<Vector> gen_random_walk_params(std::size_t dim, double increment_std, std::size_t horizon,
                                           std::uint64_t seed);

/// theta_k = theta for all k; regressors from `regressors` (its dim is forced to theta's).
Trajectory gen_constant_param_stream(const Vector& theta, RegressorSpec regressors, double noise_std,
                                     std::size_t horizon, std::uint64_t seed);

/// Convenience overload with default regressor settings for the given kind.
Trajectory gen_constant_param_stream(const Vector& theta, RegressorKind kind, double noise_std,
                                     std::size_t horizon, std::uint64_t seed);

/// Columns: k, phi_0..phi_{m-1}, theta_0..theta_{m-1}, y.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// FNV-1a over the raw bytes of every stored value; equal trajectories hash equal.
std::uint64_t trajectory_hash(const Trajectory& traj) noexcept;

} // namespace mlms::systems
