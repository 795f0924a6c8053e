#include "mlms/metrics.hpp"

#include "mlms/csv.hpp"
#include "mlms/error.hpp"

#include <cmath>
#include <ostream>

namespace mlms::metrics {

namespace {

constexpr double kMseFloor = 1e-12;
constexpr double kEnergyFloor = 1e-20;

double sum_sq_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

double mse_db(VectorCRef theta_hat, VectorCRef theta)
{
    if (theta_hat.size() != theta.size()) throw InvalidArgument("mse_db: length mismatch");
    return 10.0 * std::log10((theta_hat - theta).squaredNorm() + kMseFloor);
}

SnrMetrics snr_metrics(const std::vector<double>& noisy, const std::vector<double>& clean,
                       const std::vector<double>& output)
{
    if (clean.empty()) throw InvalidArgument("snr_metrics: empty signals");
    if (noisy.size() != clean.size() || output.size() != clean.size())
        throw InvalidArgument("snr_metrics: length mismatch");
    double signal = 0.0;
    for (double c : clean) signal += c * c;
    if (!(signal > 0.0)) throw InvalidArgument("snr_metrics: clean signal has zero energy");

    SnrMetrics m;
    double noise_in = sum_sq_diff(noisy, clean);
    double noise_out = sum_sq_diff(output, clean);
    if (noise_in < kEnergyFloor) {
        noise_in = kEnergyFloor;
        m.in_saturated = true;
    }
    if (noise_out < kEnergyFloor) {
        noise_out = kEnergyFloor;
        m.out_saturated = true;
    }
    m.snr_in = 10.0 * std::log10(signal / noise_in);
    m.snr_out = 10.0 * std::log10(signal / noise_out);
    m.delta = m.snr_out - m.snr_in;
    return m;
}

double cesaro_avg(const std::vector<double>& seq, std::size_t n1, std::size_t n2)
{
    if (!(n1 < n2) || n2 > seq.size()) throw InvalidArgument("cesaro_avg: need 0 <= n1 < n2 <= length");
    double s = 0.0;
    for (std::size_t k = n1; k < n2; ++k) s += seq[k];
    return s / static_cast<double>(n2 - n1);
}

Stat mean_std(const std::vector<double>& values)
{
    if (values.empty()) throw InvalidArgument("mean_std: empty input");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    Stat s{mean, 0.0};
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

Summary aggregate(const std::vector<TrialReport>& reports, CurveMode mode)
{
    if (reports.empty()) throw InvalidArgument("aggregate: no reports");
    Summary out;
    out.count = reports.size();
    out.degenerate = reports.size() == 1;

    std::vector<double> in, outs, delta;
    for (const auto& r : reports) {
        if (r.snr_in_db) in.push_back(*r.snr_in_db);
        if (r.snr_out_db) outs.push_back(*r.snr_out_db);
        if (r.delta_snr_db) delta.push_back(*r.delta_snr_db);
    }
    if (!in.empty()) out.snr_in = mean_std(in);
    if (!outs.empty()) out.snr_out = mean_std(outs);
    if (!delta.empty()) out.delta_snr = mean_std(delta);

    const std::size_t T = reports.front().per_step_mse_db.size();
    const std::size_t Tp = reports.front().per_step_sq_pred_err.size();
    for (const auto& r : reports) {
        if (r.per_step_mse_db.size() != T || r.per_step_sq_pred_err.size() != Tp)
            throw InvalidArgument("aggregate: reports have different horizons");
    }
    const double n = static_cast<double>(reports.size());
    out.mean_mse_db.assign(T, 0.0);
    for (std::size_t k = 0; k < T; ++k) {
        double acc = 0.0;
        for (const auto& r : reports) {
            const double v = r.per_step_mse_db[k];
            acc += mode == CurveMode::mean_of_db ? v : std::pow(10.0, v / 10.0);
        }
        out.mean_mse_db[k] = mode == CurveMode::mean_of_db ? acc / n : 10.0 * std::log10(acc / n);
    }
    out.mean_sq_pred_err.assign(Tp, 0.0);
    for (std::size_t k = 0; k < Tp; ++k) {
        double acc = 0.0;
        for (const auto& r : reports) acc += r.per_step_sq_pred_err[k];
        out.mean_sq_pred_err[k] = acc / n;
    }
    return out;
}

void write_per_step_csv(std::ostream& os, const std::vector<double>& mse_db, const std::vector<double>& sq_pred_err)
{
    if (mse_db.size() != sq_pred_err.size()) throw InvalidArgument("per-step columns differ in length");
    os << "k,mse_db,sq_pred_err\n";
    for (std::size_t k = 0; k < mse_db.size(); ++k)
        os << k << ',' << csv::num(mse_db[k]) << ',' << csv::num(sq_pred_err[k]) << '\n';
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << "algorithm,snr_in,snr_out,delta_snr_mean,delta_snr_std\n";
    auto cell = [](const std::optional<Stat>& s, bool want_std) {
        if (!s) return std::string("nan");
        return csv::num(want_std ? s->std : s->mean);
    };
    for (const auto& r : rows) {
        os << r.algorithm << ',' << cell(r.summary.snr_in, false) << ',' << cell(r.summary.snr_out, false) << ','
           << cell(r.summary.delta_snr, false) << ',' << cell(r.summary.delta_snr, true) << '\n';
    }
}

} // namespace mlms::metrics
