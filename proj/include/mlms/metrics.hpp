#pragma once

#include "mlms/filters.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mlms::metrics {

using filters::VectorCRef;

/// 10 log10(|theta_hat - theta|^2 + 1e-12).
double mse_db(VectorCRef theta_hat, VectorCRef theta);

struct SnrMetrics {
    double snr_in = 0.0;
    double snr_out = 0.0;
    double delta = 0.0;
    bool in_saturated = false;  ///< sum (noisy - clean)^2 was floored at 1e-20
    bool out_saturated = false; ///< sum (output - clean)^2 was floored at 1e-20
};

/// snr_in = 10 log10(sum c^2 / sum (noisy - c)^2), snr_out likewise for output.
SnrMetrics snr_metrics(const std::vector<double>& noisy, const std::vector<double>& clean,
                       const std::vector<double>& output);

/// Mean of seq[n1..n2-1] (0-based), i.e. the 1-based window n1+1..n2.
double cesaro_avg(const std::vector<double>& seq, std::size_t n1, std::size_t n2);

struct TrialReport {
    std::vector<double> per_step_mse_db;
    std::vector<double> per_step_sq_pred_err;
    std::optional<double> snr_in_db;
    std::optional<double> snr_out_db;
    std::optional<double> delta_snr_db;
    std::string config_digest;
    std::uint64_t seed = 0;
};

enum class CurveMode {
    mean_of_db, ///< average the per-trial dB values
    db_of_mean  ///< convert to linear, average, convert back
};

struct Stat {
    double mean = 0.0;
    double std = 0.0; ///< unbiased (n - 1); 0 when n == 1
};

struct Summary {
    std::size_t count = 0;
    bool degenerate = false; ///< n == 1, std reported as 0
    std::optional<Stat> snr_in;
    std::optional<Stat> snr_out;
    std::optional<Stat> delta_snr;
    std::vector<double> mean_mse_db;
    std::vector<double> mean_sq_pred_err;
};

Stat mean_std(const std::vector<double>& values);

/// Curves are averaged only when every report has the same horizon;
/// SNR statistics only over reports that carry them.
Summary aggregate(const std::vector<TrialReport>& reports, CurveMode mode = CurveMode::mean_of_db);

/// Columns: k, mse_db, sq_pred_err.
void write_per_step_csv(std::ostream& os, const std::vector<double>& mse_db, const std::vector<double>& sq_pred_err);

struct SummaryRow {
    std::string algorithm;
    Summary summary;
};

/// Columns: algorithm, snr_in, snr_out, delta_snr_mean, delta_snr_std.
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

} // namespace mlms::metrics
