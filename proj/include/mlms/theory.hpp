#pragma once

#include "mlms/filters.hpp"
#include "mlms/parallel.hpp"
#include "mlms/systems.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mlms::theory {

using filters::Matrix;
using filters::Vector;
using filters::VectorCRef;

/// A_k = mu phi phi' / (delta + |phi|^2) - beta I.
Matrix gain_matrix(VectorCRef phi, double mu, double delta, double beta);

/// The 2m x 2m matrix I0 - Abar_k = [[I - A_k, -mu I], [mu I, 0]] together with
/// the inputs that generated it.
struct AugmentedTransition {
    Matrix matrix;
    double mu = 0.0;
    double delta = 0.0;
    double beta = 0.0;
    Vector phi;
};

AugmentedTransition augmented_transition(VectorCRef phi, double mu, double delta, double beta);

/// Error recursion in the original coordinates:
///   (e_{k+1}; e_k) = T_k (e_k; e_{k-1}),  T_k = [[I - A_k, -beta I], [I, 0]],
/// with e_k = theta_k - theta_hat_k, for a constant parameter.
Matrix error_transition(VectorCRef phi, double mu, double delta, double beta);

/// P T_k P^{-1} with P = diag(I, mu I): [[I - A_k, -(beta/mu) I], [mu I, 0]].
/// Coincides with augmented_transition exactly when beta = mu^2.
Matrix similarity_transition(VectorCRef phi, double mu, double delta, double beta);

enum class QMode { theorem1, theorem23 };

struct MuMaxTerms {
    std::array<double, 4> terms{};
    double value = 0.0; ///< min of terms
};

/// s = min(kappa, 2); q = p - 1/2 (theorem1) or 2p - 1/2 (theorem23);
/// terms = (9h^2)^(-1/(4-s)), (3q)^(-1/s), alpha/(2(alpha^2+9)), (alpha/(24q(1+3q)))^(1/(s-1)).
MuMaxTerms mu_max_terms(double alpha, int h, int p, double kappa, QMode mode = QMode::theorem1);
double mu_max(double alpha, int h, int p, double kappa, QMode mode = QMode::theorem1);

/// (1 - alpha mu / 8)^(1/p); requires 0 < alpha mu / 8 < 1.
double lambda_p(double alpha, double mu, int p);

/// min over complete blocks of lambda_min(sum_{block} phi phi' / (1 + |phi|^2)).
/// Trailing incomplete block is ignored.
double estimate_alpha(const std::vector<Vector>& phis, std::size_t h);

/// estimate_alpha over a 50-block pilot stream drawn from Rng(seed, 0xA1FA).
double pilot_alpha(const systems::RegressorSpec& regressors, std::size_t h, std::uint64_t seed);

/// Largest singular value.
double operator_norm(const Matrix& m);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y ~ intercept + slope x. Needs >= 2 distinct x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct ProbeSpec {
    systems::RegressorSpec regressors;
    double mu = 0.0;
    double delta = 1.0;
    double beta = 0.0;
    int h = 1;
    int p = 1;
    int max_blocks = 30;
    int trials = 100;
    std::uint64_t seed = 0;
    /// When empty, estimated from a pilot stream of 50 blocks.
    std::optional<double> alpha_hat;
    /// Skip the mu <= mu_max admissibility check.
    bool allow_inadmissible = false;
};

struct StabilityProbeReport {
    int p = 1;
    int h = 1;
    double alpha_hat = 0.0;
    double mu = 0.0;
    int trials = 0;
    std::vector<int> block_counts;
    std::vector<double> empirical_pnorm;
    std::vector<double> theoretical_bound;
    std::vector<std::string> diagnostics;

    std::vector<double> ratio() const;
    /// Slope of log(empirical_pnorm) against block count.
    double log_slope() const;
};

/// For n = 1..max_blocks the product of the n h + 1 factors (I0 - Abar_k),
/// newest on the left, is formed per trial; its operator norm is averaged
/// in L_p over trials and set against lambda_p^n. Trials whose norm exceeds
/// 1e12 are stopped and count as +inf from that block on.
StabilityProbeReport product_norm_probe(const ProbeSpec& spec, Execution exec = Execution::parallel);

/// Columns: n_blocks, empirical_pnorm, theoretical_bound, ratio.
void write_probe_csv(std::ostream& os, const StabilityProbeReport& report);

enum class Regime { bounded, zero_mean };

/// Unit-constant order-level shapes. bounded: nu/mu + sigma.
/// zero_mean: c_delta / sqrt(mu) + c_v sqrt(mu). Diagnostic only.
double tracking_bound_shape(double nu, double sigma, double mu, Regime regime,
                            std::optional<double> c_delta = std::nullopt, std::optional<double> c_v = std::nullopt);

/// (1 + mu) sigma_v^2 + mu^(kappa-1) + mu^kappa sigma_v + xi / mu. Diagnostic only.
double prediction_bound_shape(double mu, double kappa, double sigma_v, double xi);

} // namespace mlms::theory
