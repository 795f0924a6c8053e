#include "mlms/filters.hpp"

#include "mlms/error.hpp"
#include "mlms/theory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mlms::filters {

namespace {

constexpr double kGngdFloor = 1e-12;

void require_matching(const FilterState& state, const FilterConfig& cfg, VectorCRef phi)
{
    if (state.theta_hat.size() != static_cast<Eigen::Index>(cfg.dim) ||
        state.theta_hat_prev.size() != state.theta_hat.size())
        throw InvalidArgument("filter state length does not match config dim");
    if (phi.size() != state.theta_hat.size()) {
        std::ostringstream msg;
        msg << "regressor length " << phi.size() << " does not match filter dim " << state.theta_hat.size();
        throw InvalidArgument(msg.str());
    }
}

void require_finite(VectorCRef phi, double y)
{
    if (!std::isfinite(y)) throw NonFiniteInput("observed output is not finite");
    if (!phi.allFinite()) throw NonFiniteInput("regressor has a non-finite component");
}

void require_valid(const FilterConfig& cfg)
{
    for (const auto& d : validate_config(cfg)) {
        if (d.severity == Severity::error) throw InvalidArgument(d.message);
    }
}

void require_finite_estimate(const Vector& theta)
{
    if (!theta.allFinite()) throw NumericalDegeneracy("parameter estimate became non-finite (filter diverged)");
}

void prepare(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    require_valid(cfg);
    require_matching(state, cfg, phi);
    require_finite(phi, y);
}

StepResult mlms_update(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    const double alpha = cfg.mu / (cfg.delta + phi.squaredNorm());
    const double pred = phi.dot(state.theta_hat);
    const double e = y - pred;

    Vector next = state.theta_hat + (alpha * e) * phi;
    if (cfg.beta != 0.0) next += cfg.beta * (state.theta_hat - state.theta_hat_prev);
    require_finite_estimate(next);

    StepResult r{state, {pred, e, alpha}};
    r.state.theta_hat_prev = state.theta_hat;
    r.state.theta_hat = std::move(next);
    return r;
}

StepResult nlms_update(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    const double alpha = cfg.mu / (cfg.delta + phi.squaredNorm());
    const double pred = phi.dot(state.theta_hat);
    const double e = y - pred;
    Vector next = state.theta_hat + (alpha * e) * phi;
    require_finite_estimate(next);

    StepResult r{state, {pred, e, alpha}};
    r.state.theta_hat_prev = state.theta_hat;
    r.state.theta_hat = std::move(next);
    return r;
}

StepResult sgd_update(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y, bool momentum)
{
    const double pred = phi.dot(state.theta_hat);
    const double e = y - pred;
    Vector next = state.theta_hat + (cfg.mu * e) * phi;
    if (momentum && cfg.beta != 0.0) next += cfg.beta * (state.theta_hat - state.theta_hat_prev);
    require_finite_estimate(next);

    StepResult r{state, {pred, e, cfg.mu}};
    r.state.theta_hat_prev = state.theta_hat;
    r.state.theta_hat = std::move(next);
    return r;
}

StepResult rls_update(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    if (!state.rls_cov) throw InvalidArgument("RLS state has no covariance");
    const Matrix& P = *state.rls_cov;
    const Vector Pphi = P * phi;
    const double denom = cfg.lambda_forget + phi.dot(Pphi);
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw NumericalDegeneracy("RLS denominator lambda + phi'P phi is not positive");
    const Vector gain = Pphi / denom;
    const double pred = phi.dot(state.theta_hat);
    const double e = y - pred;

    Matrix next_p = (P - gain * Pphi.transpose()) / cfg.lambda_forget;
    next_p = 0.5 * (next_p + next_p.transpose()).eval();
    if (!next_p.allFinite() || (next_p.diagonal().array() <= 0.0).any())
        throw NumericalDegeneracy("RLS covariance lost positive definiteness");

    Vector next = state.theta_hat + e * gain;
    require_finite_estimate(next);

    StepResult r{state, {pred, e, phi.dot(gain)}};
    r.state.theta_hat_prev = state.theta_hat;
    r.state.theta_hat = std::move(next);
    r.state.rls_cov = std::move(next_p);
    return r;
}

StepResult gngd_update(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    if (!state.gngd_eps) throw InvalidArgument("GNGD state has no regularizer");
    const double eps = *state.gngd_eps;
    const double nrm = phi.squaredNorm();
    const double step = cfg.mu / (eps + nrm);
    const double pred = phi.dot(state.theta_hat);
    const double e = y - pred;
    Vector next = state.theta_hat + (step * e) * phi;
    require_finite_estimate(next);

    double next_eps = eps;
    if (state.gngd_has_history) {
        const double d = state.gngd_prev_phi.squaredNorm() + state.gngd_eps_prev;
        const double grad = e * state.gngd_prev_error * phi.dot(state.gngd_prev_phi) / (d * d);
        next_eps = std::max(eps - cfg.rho * cfg.mu * grad, kGngdFloor);
        if (!std::isfinite(next_eps)) throw NumericalDegeneracy("GNGD regularizer became non-finite");
    }

    StepResult r{state, {pred, e, step}};
    r.state.theta_hat_prev = state.theta_hat;
    r.state.theta_hat = std::move(next);
    r.state.gngd_eps = next_eps;
    r.state.gngd_eps_prev = eps;
    r.state.gngd_prev_error = e;
    r.state.gngd_prev_phi = phi;
    r.state.gngd_has_history = true;
    return r;
}

} // namespace

std::string_view to_string(Algorithm a) noexcept
{
    switch (a) {
    case Algorithm::mlms: return "mlms";
    case Algorithm::projected_mlms: return "projected_mlms";
    case Algorithm::sgd: return "sgd";
    case Algorithm::sgd_momentum: return "sgd_momentum";
    case Algorithm::nlms: return "nlms";
    case Algorithm::rls: return "rls";
    case Algorithm::gngd: return "gngd";
    }
    return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept
{
    if (name == "mlms") return Algorithm::mlms;
    if (name == "projected_mlms" || name == "pmlms") return Algorithm::projected_mlms;
    if (name == "sgd") return Algorithm::sgd;
    if (name == "sgd_momentum" || name == "sgd-m" || name == "sgdm") return Algorithm::sgd_momentum;
    if (name == "nlms" || name == "lms") return Algorithm::nlms;
    if (name == "rls") return Algorithm::rls;
    if (name == "gngd") return Algorithm::gngd;
    return std::nullopt;
}

FilterConfig FilterConfig::mlms(std::size_t dim, double mu, double delta, double beta)
{
    FilterConfig c;
    c.algorithm = Algorithm::mlms;
    c.dim = dim;
    c.mu = mu;
    c.delta = delta;
    c.beta = beta;
    return c;
}

FilterConfig FilterConfig::projected_mlms(std::size_t dim, double mu, double delta, double beta, double box_half_width)
{
    FilterConfig c = mlms(dim, mu, delta, beta);
    c.algorithm = Algorithm::projected_mlms;
    c.box_half_width = box_half_width;
    return c;
}

FilterConfig FilterConfig::nlms(std::size_t dim, double mu, double delta)
{
    FilterConfig c = mlms(dim, mu, delta, 0.0);
    c.algorithm = Algorithm::nlms;
    return c;
}

FilterConfig FilterConfig::sgd(std::size_t dim, double mu)
{
    FilterConfig c;
    c.algorithm = Algorithm::sgd;
    c.dim = dim;
    c.mu = mu;
    return c;
}

FilterConfig FilterConfig::sgd_momentum(std::size_t dim, double mu, double beta)
{
    FilterConfig c = sgd(dim, mu);
    c.algorithm = Algorithm::sgd_momentum;
    c.beta = beta;
    return c;
}

FilterConfig FilterConfig::rls(std::size_t dim, double lambda_forget, double delta)
{
    FilterConfig c;
    c.algorithm = Algorithm::rls;
    c.dim = dim;
    c.lambda_forget = lambda_forget;
    c.delta = delta;
    return c;
}

FilterConfig FilterConfig::gngd(std::size_t dim, double mu, double rho, double eps0)
{
    FilterConfig c;
    c.algorithm = Algorithm::gngd;
    c.dim = dim;
    c.mu = mu;
    c.rho = rho;
    c.delta = eps0;
    return c;
}

std::optional<double> FilterConfig::implied_kappa() const noexcept
{
    if (beta == 0.0) return std::numeric_limits<double>::infinity();
    if (!(mu > 0.0 && mu < 1.0) || !(beta > 0.0 && beta < 1.0)) return std::nullopt;
    return std::log(beta) / std::log(mu);
}

FilterState initial_state(const FilterConfig& cfg)
{
    if (cfg.dim == 0) throw InvalidArgument("dim must be >= 1");
    const auto m = static_cast<Eigen::Index>(cfg.dim);
    FilterState s;
    s.theta_hat = Vector::Zero(m);
    s.theta_hat_prev = Vector::Zero(m);
    if (cfg.algorithm == Algorithm::rls) {
        if (!(cfg.delta > 0.0)) throw InvalidArgument("RLS needs delta > 0");
        s.rls_cov = Matrix::Identity(m, m) / cfg.delta;
    }
    if (cfg.algorithm == Algorithm::gngd) {
        s.gngd_eps = cfg.delta;
        s.gngd_prev_phi = Vector::Zero(m);
    }
    return s;
}

double predict(const FilterState& state, VectorCRef phi)
{
    if (phi.size() != state.theta_hat.size()) throw InvalidArgument("regressor length does not match filter dim");
    return phi.dot(state.theta_hat);
}

StepResult step_mlms(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    if (cfg.algorithm != Algorithm::mlms) throw InvalidArgument("step_mlms needs algorithm mlms");
    prepare(state, cfg, phi, y);
    return mlms_update(state, cfg, phi, y);
}

StepResult step_projected_mlms(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    if (cfg.algorithm != Algorithm::projected_mlms)
        throw InvalidArgument("step_projected_mlms needs algorithm projected_mlms");
    prepare(state, cfg, phi, y);
    StepResult r = mlms_update(state, cfg, phi, y);
    r.state.theta_hat = project_box(r.state.theta_hat, cfg.box_half_width);
    return r;
}

StepResult step_baseline(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    prepare(state, cfg, phi, y);
    switch (cfg.algorithm) {
    case Algorithm::sgd: return sgd_update(state, cfg, phi, y, false);
    case Algorithm::sgd_momentum: return sgd_update(state, cfg, phi, y, true);
    case Algorithm::nlms: return nlms_update(state, cfg, phi, y);
    case Algorithm::rls: return rls_update(state, cfg, phi, y);
    case Algorithm::gngd: return gngd_update(state, cfg, phi, y);
    default: throw InvalidArgument("step_baseline does not handle " + std::string(to_string(cfg.algorithm)));
    }
}

StepResult step(const FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    switch (cfg.algorithm) {
    case Algorithm::mlms: return step_mlms(state, cfg, phi, y);
    case Algorithm::projected_mlms: return step_projected_mlms(state, cfg, phi, y);
    default: return step_baseline(state, cfg, phi, y);
    }
}

StepOutput advance(FilterState& state, const FilterConfig& cfg, VectorCRef phi, double y)
{
    StepResult r = step(state, cfg, phi, y);
    state = std::move(r.state);
    return r.output;
}

Vector project_box(VectorCRef x, double L)
{
    if (!(L > 0.0)) throw InvalidArgument("box half-width must be > 0");
    return x.cwiseMax(-L).cwiseMin(L);
}

void check_state_invariants(const FilterState& state, const FilterConfig& cfg)
{
    const auto m = static_cast<Eigen::Index>(cfg.dim);
    if (state.theta_hat.size() != m || state.theta_hat_prev.size() != m)
        throw NumericalDegeneracy("estimate length differs from dim");
    if (cfg.algorithm == Algorithm::projected_mlms &&
        (state.theta_hat.array().abs() > cfg.box_half_width).any())
        throw NumericalDegeneracy("projected estimate left the box");
    if (state.rls_cov) {
        const Matrix& P = *state.rls_cov;
        if (P.rows() != m || P.cols() != m) throw NumericalDegeneracy("RLS covariance has wrong shape");
        const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw NumericalDegeneracy("RLS covariance is not symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> es(P, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues().minCoeff() > 0.0)) throw NumericalDegeneracy("RLS covariance is not positive definite");
    }
}

std::vector<Diagnostic> validate_config(const FilterConfig& cfg, std::optional<BoundParams> bound)
{
    std::vector<Diagnostic> out;
    auto err = [&](std::string code, std::string msg) {
        out.push_back({Severity::error, std::move(code), std::move(msg)});
    };
    auto warn = [&](std::string code, std::string msg) {
        out.push_back({Severity::warning, std::move(code), std::move(msg)});
    };

    if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) err("mu", "mu must be a finite value > 0");
    if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta)) err("delta", "delta must be a finite value > 0");
    if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) err("beta", "beta must lie in [0, 1)");
    if (!(cfg.lambda_forget > 0.0 && cfg.lambda_forget <= 1.0)) err("lambda_forget", "lambda_forget must lie in (0, 1]");
    if (!(cfg.rho > 0.0) || !std::isfinite(cfg.rho)) err("rho", "rho must be a finite value > 0");
    if (!(cfg.box_half_width > 0.0)) err("box_half_width", "box_half_width must be > 0");
    if (cfg.dim < 1) err("dim", "dim must be >= 1");

    const bool momentum_family = cfg.algorithm == Algorithm::mlms || cfg.algorithm == Algorithm::projected_mlms;
    if (!momentum_family) return out;

    const auto kappa = cfg.implied_kappa();
    if (kappa && *kappa <= 1.0) {
        std::ostringstream msg;
        msg << "implied kappa = ln(beta)/ln(mu) = " << *kappa << " <= 1; convergence guarantees need kappa > 1";
        warn("kappa", msg.str());
    }

    if (bound) {
        if (!(bound->alpha > 0.0 && bound->alpha <= 1.0) || bound->h < 1 || bound->p < 1) {
            err("bound_params", "bound parameters need alpha in (0, 1], h >= 1, p >= 1");
        } else if (!kappa || *kappa <= 1.0) {
            warn("mu_bound", "step-size bound not evaluated: implied kappa is undefined or <= 1");
        } else {
            const double limit = theory::mu_max(bound->alpha, bound->h, bound->p, *kappa);
            if (cfg.mu > limit) {
                std::ostringstream msg;
                msg << std::setprecision(17) << "mu = " << cfg.mu << " exceeds mu_max = " << limit
                    << " for alpha = " << bound->alpha
                    << ", h = " << bound->h << ", p = " << bound->p;
                warn("mu_bound", msg.str());
            }
        }
    }
    return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) noexcept
{
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::error; });
}

AdaptiveFilter::AdaptiveFilter(FilterConfig cfg) : cfg_(std::move(cfg))
{
    require_valid(cfg_);
    state_ = initial_state(cfg_);
}

} // namespace mlms::filters
