#include "mlms/theory.hpp"

#include "mlms/csv.hpp"
#include "mlms/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mlms::theory {

namespace {

void require_transition_inputs(VectorCRef phi, double mu, double delta, double beta)
{
    if (phi.size() == 0) throw InvalidArgument("regressor must be non-empty");
    if (!phi.allFinite() || !std::isfinite(mu) || !std::isfinite(delta) || !std::isfinite(beta))
        throw InvalidArgument("transition inputs must be finite");
    if (!(delta > 0.0)) throw InvalidArgument("delta must be > 0");
}

Matrix block2(const Matrix& tl, double tr, double bl, Eigen::Index m)
{
    Matrix out = Matrix::Zero(2 * m, 2 * m);
    out.topLeftCorner(m, m) = tl;
    out.topRightCorner(m, m).diagonal().setConstant(tr);
    out.bottomLeftCorner(m, m).diagonal().setConstant(bl);
    return out;
}

constexpr double kOverflowGuard = 1e12;

} // namespace

Matrix gain_matrix(VectorCRef phi, double mu, double delta, double beta)
{
    require_transition_inputs(phi, mu, delta, beta);
    Matrix a = (mu / (delta + phi.squaredNorm())) * (phi * phi.transpose());
    a.diagonal().array() -= beta;
    return a;
}

AugmentedTransition augmented_transition(VectorCRef phi, double mu, double delta, double beta)
{
    const auto m = phi.size();
    const Matrix a = gain_matrix(phi, mu, delta, beta);
    AugmentedTransition t;
    t.matrix = block2(Matrix::Identity(m, m) - a, -mu, mu, m);
    t.mu = mu;
    t.delta = delta;
    t.beta = beta;
    t.phi = phi;
    return t;
}

Matrix error_transition(VectorCRef phi, double mu, double delta, double beta)
{
    const auto m = phi.size();
    return block2(Matrix::Identity(m, m) - gain_matrix(phi, mu, delta, beta), -beta, 1.0, m);
}

Matrix similarity_transition(VectorCRef phi, double mu, double delta, double beta)
{
    if (!(mu > 0.0)) throw InvalidArgument("similarity transform needs mu > 0");
    const auto m = phi.size();
    return block2(Matrix::Identity(m, m) - gain_matrix(phi, mu, delta, beta), -beta / mu, mu, m);
}

MuMaxTerms mu_max_terms(double alpha, int h, int p, double kappa, QMode mode)
{
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
    if (h < 1) throw InvalidArgument("h must be >= 1");
    if (p < 1) throw InvalidArgument("p must be >= 1");
    if (!(kappa > 1.0)) throw InvalidArgument("kappa must be > 1");

    const double s = std::min(kappa, 2.0);
    const double q = mode == QMode::theorem1 ? p - 0.5 : 2.0 * p - 0.5;
    const double hh = static_cast<double>(h);

    MuMaxTerms t;
    t.terms[0] = std::pow(9.0 * hh * hh, -1.0 / (4.0 - s));
    t.terms[1] = std::pow(3.0 * q, -1.0 / s);
    t.terms[2] = alpha / (2.0 * (alpha * alpha + 9.0));
    t.terms[3] = std::pow(alpha / (24.0 * q * (1.0 + 3.0 * q)), 1.0 / (s - 1.0));
    t.value = *std::min_element(t.terms.begin(), t.terms.end());
    return t;
}

double mu_max(double alpha, int h, int p, double kappa, QMode mode)
{
    return mu_max_terms(alpha, h, p, kappa, mode).value;
}

double lambda_p(double alpha, double mu, int p)
{
    if (p < 1) throw InvalidArgument("p must be >= 1");
    const double r = alpha * mu / 8.0;
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("lambda_p needs 0 < alpha*mu/8 < 1");
    return std::pow(1.0 - r, 1.0 / p);
}

double estimate_alpha(const std::vector<Vector>& phis, std::size_t h)
{
    if (h == 0) throw InvalidArgument("block length h must be >= 1");
    if (phis.size() < h) throw InvalidArgument("estimate_alpha needs at least one complete block");
    const auto m = phis.front().size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start + h <= phis.size(); start += h) {
        Matrix sum = Matrix::Zero(m, m);
        for (std::size_t i = start; i < start + h; ++i) {
            const Vector& phi = phis[i];
            if (phi.size() != m) throw InvalidArgument("regressors must share one length");
            sum.noalias() += (phi * phi.transpose()) / (1.0 + phi.squaredNorm());
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(sum, Eigen::EigenvaluesOnly);
        best = std::min(best, es.eigenvalues().minCoeff());
    }
    return std::max(best, 0.0);
}

double pilot_alpha(const systems::RegressorSpec& regressors, std::size_t h, std::uint64_t seed)
{
    systems::RegressorStream pilot(regressors, Rng(seed, 0xA1FAULL));
    std::vector<Vector> phis;
    for (std::size_t i = 0; i < 50 * h; ++i) phis.push_back(pilot.next());
    return estimate_alpha(phis, h);
}

double operator_norm(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear_fit needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("linear_fit needs distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

std::vector<double> StabilityProbeReport::ratio() const
{
    std::vector<double> r(empirical_pnorm.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = empirical_pnorm[i] / theoretical_bound[i];
    return r;
}

double StabilityProbeReport::log_slope() const
{
    std::vector<double> x, y;
    for (std::size_t i = 0; i < block_counts.size(); ++i) {
        x.push_back(block_counts[i]);
        y.push_back(std::log(empirical_pnorm[i]));
    }
    return linear_fit(x, y).slope;
}

StabilityProbeReport product_norm_probe(const ProbeSpec& spec, Execution exec)
{
    if (spec.trials < 1) throw InvalidArgument("probe needs trials >= 1");
    if (spec.h < 1 || spec.p < 1) throw InvalidArgument("probe needs h >= 1 and p >= 1");
    if (spec.max_blocks < 1) throw InvalidArgument("probe needs max_blocks >= 1");
    if (!(spec.delta > 0.0)) throw InvalidArgument("probe needs delta > 0");

    const auto h = static_cast<std::size_t>(spec.h);
    StabilityProbeReport report;
    report.p = spec.p;
    report.h = spec.h;
    report.mu = spec.mu;
    report.trials = spec.trials;

    if (spec.alpha_hat) {
        report.alpha_hat = *spec.alpha_hat;
    } else {
        report.alpha_hat = pilot_alpha(spec.regressors, h, spec.seed);
        report.diagnostics.push_back("alpha_hat estimated from a 50-block pilot stream");
    }

    if (!spec.allow_inadmissible) {
        filters::FilterConfig probe_cfg = filters::FilterConfig::mlms(spec.regressors.dim, spec.mu, spec.delta, spec.beta);
        const auto kappa = probe_cfg.implied_kappa();
        if (!(spec.mu > 0.0) || !kappa || *kappa <= 1.0)
            throw InvalidArgument("probe mu/beta are not admissible (need mu > 0 and implied kappa > 1)");
        if (!(report.alpha_hat > 0.0)) throw InvalidArgument("probe regressors are not excited (alpha_hat = 0)");
        const double limit = mu_max(std::min(report.alpha_hat, 1.0), spec.h, spec.p, *kappa);
        if (spec.mu > limit * (1.0 + 1e-12))
            throw InvalidArgument("probe mu exceeds mu_max = " + csv::num(limit));
    }

    const auto blocks = static_cast<std::size_t>(spec.max_blocks);
    const Rng root(spec.seed);
    auto trial = [&](std::size_t t) {
        systems::RegressorStream stream(spec.regressors, root.split(t));
        const auto m = static_cast<Eigen::Index>(spec.regressors.dim);
        Matrix prod = Matrix::Identity(2 * m, 2 * m);
        std::vector<double> norms(blocks, std::numeric_limits<double>::infinity());
        std::size_t factors = 0;
        for (std::size_t n = 1; n <= blocks; ++n) {
            const std::size_t target = n * h + 1;
            for (; factors < target; ++factors) {
                prod = augmented_transition(stream.next(), spec.mu, spec.delta, spec.beta).matrix * prod;
            }
            const double nrm = operator_norm(prod);
            if (!(nrm <= kOverflowGuard)) break;
            norms[n - 1] = nrm;
        }
        return norms;
    };
    const auto per_trial = map_indexed(static_cast<std::size_t>(spec.trials), trial, exec);

    std::size_t aborted = 0;
    for (const auto& norms : per_trial) {
        if (std::isinf(norms.back())) ++aborted;
    }
    if (aborted > 0)
        report.diagnostics.push_back(std::to_string(aborted) + " trial(s) stopped by the 1e12 overflow guard");

    const bool lambda_ok = report.alpha_hat * spec.mu > 0.0 && report.alpha_hat * spec.mu < 8.0;
    const double lam = lambda_ok ? lambda_p(report.alpha_hat, spec.mu, spec.p) : 1.0;
    if (!lambda_ok) report.diagnostics.push_back("lambda_p undefined for alpha_hat*mu; bound column set to 1");

    for (std::size_t n = 1; n <= blocks; ++n) {
        double acc = 0.0;
        for (const auto& norms : per_trial) acc += std::pow(norms[n - 1], spec.p);
        report.block_counts.push_back(static_cast<int>(n));
        report.empirical_pnorm.push_back(std::pow(acc / spec.trials, 1.0 / spec.p));
        report.theoretical_bound.push_back(std::pow(lam, static_cast<double>(n)));
    }
    return report;
}

void write_probe_csv(std::ostream& os, const StabilityProbeReport& report)
{
    os << "n_blocks,empirical_pnorm,theoretical_bound,ratio\n";
    const auto r = report.ratio();
    for (std::size_t i = 0; i < report.block_counts.size(); ++i) {
        os << report.block_counts[i] << ',' << csv::num(report.empirical_pnorm[i]) << ','
           << csv::num(report.theoretical_bound[i]) << ',' << csv::num(r[i]) << '\n';
    }
}

double tracking_bound_shape(double nu, double sigma, double mu, Regime regime, std::optional<double> c_delta,
                            std::optional<double> c_v)
{
    if (!(mu > 0.0)) throw InvalidArgument("mu must be > 0");
    if (regime == Regime::bounded) return nu / mu + sigma;
    if (!c_delta || !c_v) throw InvalidArgument("zero_mean regime needs c_delta and c_v");
    return *c_delta / std::sqrt(mu) + *c_v * std::sqrt(mu);
}

double prediction_bound_shape(double mu, double kappa, double sigma_v, double xi)
{
    if (!(mu > 0.0)) throw InvalidArgument("mu must be > 0");
    if (!(kappa > 1.0)) throw InvalidArgument("kappa must be > 1");
    if (!(xi >= 0.0)) throw InvalidArgument("xi must be >= 0");
    return (1.0 + mu) * sigma_v * sigma_v + std::pow(mu, kappa - 1.0) + std::pow(mu, kappa) * sigma_v + xi / mu;
}

} // namespace mlms::theory
