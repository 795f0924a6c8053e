#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlms::filters {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorCRef = Eigen::Ref<const Vector>;

enum class Algorithm { mlms, projected_mlms, sgd, sgd_momentum, nlms, rls, gngd };

std::string_view to_string(Algorithm a) noexcept;
/// Accepts the canonical names ("mlms", "sgd_momentum", ...) plus a few
/// aliases ("sgd-m", "lms" for nlms, "pmlms").
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;

/// Algorithm selector plus every hyperparameter any of the rules uses.
/// Fields irrelevant to the selected algorithm are ignored.
struct FilterConfig {
    Algorithm algorithm = Algorithm::mlms;
    double mu = 0.1;             ///< step-size
    double delta = 0.1;          ///< normalization regularizer; RLS: P0 = I/delta; GNGD: eps0
    double beta = 0.0;           ///< heavy-ball momentum, in [0, 1)
    double lambda_forget = 1.0;  ///< RLS forgetting factor, in (0, 1]
    double rho = 0.01;           ///< GNGD regularization adaptation rate
    double box_half_width = 1.0; ///< projection box [-L, L]^m
    std::size_t dim = 1;

    static FilterConfig mlms(std::size_t dim, double mu, double delta, double beta);
    static FilterConfig projected_mlms(std::size_t dim, double mu, double delta, double beta, double box_half_width);
    static FilterConfig nlms(std::size_t dim, double mu, double delta);
    static FilterConfig sgd(std::size_t dim, double mu);
    static FilterConfig sgd_momentum(std::size_t dim, double mu, double beta);
    static FilterConfig rls(std::size_t dim, double lambda_forget, double delta = 1e-2);
    static FilterConfig gngd(std::size_t dim, double mu, double rho, double eps0 = 1.0);

    /// kappa such that beta = mu^kappa (C_beta = 1). Empty when mu is not in
    /// (0, 1) or beta is not in (0, 1); +inf when beta == 0.
    std::optional<double> implied_kappa() const noexcept;
};

/// Live state of one filter. theta_hat is the current estimate, theta_hat_prev
/// the one before it (the momentum buffer).
struct FilterState {
    Vector theta_hat;
    Vector theta_hat_prev;
    std::optional<Matrix> rls_cov;
    std::optional<double> gngd_eps;

    // GNGD needs one step of history for its regularizer gradient.
    double gngd_eps_prev = 0.0;
    double gngd_prev_error = 0.0;
    Vector gngd_prev_phi;
    bool gngd_has_history = false;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(theta_hat.size()); }
};

/// Zero estimates (theta_{-1} = theta_0 = 0) plus the algorithm's auxiliaries.
FilterState initial_state(const FilterConfig& cfg);

struct StepOutput {
    double prediction = 0.0;
    double error = 0.0;
    double effective_step = 0.0;
};

struct StepResult {
    FilterState state;
    StepOutput output;
};

double predict(const FilterState& state, VectorCRef phi);

StepResult step_mlms(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y);
StepResult step_projected_mlms(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y);
StepResult step_baseline(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y);

/// Dispatches on cfg.algorithm.
StepResult step(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y);

/// In-place variant of `step`. Validates before touching `state`; on any
/// exception the state is unchanged.
StepOutput advance(FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y);

/// Euclidean projection onto the box [-L, L]^m, i.e. componentwise clamping.
Vector project_box(VectorCRef x, double L);

/// Throws NumericalDegeneracy if the state violates its invariants (RLS
/// covariance asymmetric beyond 1e-9 or not positive definite; wrong lengths).
/// O(m^3); meant for tests and periodic checks, not per-step use.
void check_state_invariants(const FilterState& state, const FilterConfig& cfg);

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity;
    std::string code;
    std::string message;
};

/// Excitation constants used to check mu against the step-size bound.
struct BoundParams {
    double alpha;
    int h;
    int p;
};

/// Errors for violated hard invariants, warnings for implied kappa <= 1 and
/// for mu above mu_max(alpha, h, p, kappa) when `bound` is given.
std::vector<Diagnostic> validate_config(const FilterConfig& cfg, std::optional<BoundParams> bound = std::nullopt);

bool has_errors(const std::vector<Diagnostic>& diags) noexcept;

/// Single-owner filter: config plus state, stepped in place.
class AdaptiveFilter {
public:
    explicit AdaptiveFilter(FilterConfig cfg);

    StepOutput step(VectorCRef phi, double y) { return advance(state_, cfg_, phi, y); }
    double predict(VectorCRef phi) const { return filters::predict(state_, phi); }
    /// Restores theta_{-1} = theta_0 = 0 and fresh auxiliaries.
    void reset() { state_ = initial_state(cfg_); }

    const FilterState& state() const noexcept { return state_; }
    const FilterConfig& config() const noexcept { return cfg_; }

private:
    FilterConfig cfg_;
    FilterState state_;
};

} // namespace mlms::filters
