#pragma once

#include "mlms/anc.hpp"
#include "mlms/filters.hpp"
#include "mlms/metrics.hpp"
#include "mlms/parallel.hpp"
#include "mlms/systems.hpp"
#include "mlms/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlms::experiments {

enum class Kind { synth_track, anc, sweep_beta, stability_probe, validate };

std::string_view to_string(Kind k) noexcept;
/// Accepts both "synth_track" and "synth-track" spellings.
std::optional<Kind> parse_kind(std::string_view name) noexcept;

struct AlgorithmEntry {
    std::string name;
    filters::FilterConfig cfg; ///< dim filled in by the experiment
};

enum class SceneSource { synthetic, corpus };

struct CorpusSpec {
    std::string root; ///< empty: taken from MLMS_CORPUS_ROOT
    std::vector<std::string> clean;
    std::string noise;
    std::vector<double> path_fir = anc::default_path_fir();
};

struct SceneSettings {
    SceneSource source = SceneSource::synthetic;
    bool synthetic_fallback = false;
    std::size_t taps = 50;
    anc::Topology topology = anc::Topology::clean_reference;
    anc::SyntheticSceneSpec synthetic;
    CorpusSpec corpus;
};

struct SynthTrackSettings {
    systems::JumpSystemSpec system = systems::JumpSystemSpec::reference();
    metrics::CurveMode curve_mode = metrics::CurveMode::mean_of_db;
    std::vector<AlgorithmEntry> algorithms;
};

struct AncSettings {
    std::vector<double> snr_levels_db{5.0, 10.0, 15.0};
    bool write_wav = false;
    std::vector<AlgorithmEntry> algorithms;
};

struct SweepSettings {
    double mu = 0.35;
    double delta = 1e-12;
    double snr_db = 0.0;
    std::vector<double> betas;
};

struct ProbeSettings {
    systems::RegressorSpec regressors;
    int h = 1;
    std::vector<int> p{1};
    std::optional<double> mu; ///< empty: mu_max for each p
    double kappa = 2.0;       ///< used for mu_max and, when beta is empty, beta = mu^kappa
    std::optional<double> beta;
    double delta = 1.0;
    std::optional<double> alpha;
    int max_blocks = 30;
    bool allow_inadmissible = false;
};

struct ValidateSettings {
    filters::FilterConfig filter;
    std::optional<filters::BoundParams> bound;
    std::optional<double> bound_kappa; ///< kappa for the printed mu_max; defaults to the implied one
};

struct ExperimentConfig {
    Kind kind = Kind::synth_track;
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    std::filesystem::path output_dir = "out";
    Execution execution = Execution::parallel;

    SynthTrackSettings synth;
    SceneSettings scenes;
    AncSettings anc;
    SweepSettings sweep;
    ProbeSettings probe;
    ValidateSettings validate;

    /// Sorted key=value listing of every resolved setting (defaults included).
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string digest() const;
};

/// Parses YAML text. Unknown keys, wrong types and out-of-range values raise
/// ConfigError carrying the 1-based line of the offending node.
ExperimentConfig parse_config(std::string_view yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---- synth_track ----

struct SegmentStat {
    std::size_t segment = 0;
    std::size_t begin = 0; ///< first step of the averaging window
    std::size_t end = 0;   ///< one past the last step
    double mean_mse_db = 0.0;
};

struct AlgorithmTrack {
    std::string name;
    metrics::Summary summary;
    std::vector<metrics::TrialReport> trials;
    std::vector<SegmentStat> windows; ///< steps 50..99 of every jump segment, trial mean
};

struct SynthTrackResult {
    std::vector<AlgorithmTrack> algorithms;
};

/// Every algorithm runs on the same `trials` trajectories; trial t uses
/// derive_seed(seed, t).
SynthTrackResult run_synth_track(const ExperimentConfig& cfg);

/// MSE-dB and squared prediction error for one algorithm on one trajectory.
metrics::TrialReport track(const filters::FilterConfig& cfg, const systems::Trajectory& traj);

/// Time-averaged mean curve over [seg*period + lo, seg*period + hi) per segment.
std::vector<SegmentStat> segment_windows(const std::vector<double>& curve, std::size_t period, std::size_t lo,
                                         std::size_t hi);

// ---- anc / sweep ----

/// Scenes for one input SNR level. Synthetic scene i uses
/// derive_seed(derive_seed(seed, level_index), i).
std::vector<anc::AncScene> build_scenes(const ExperimentConfig& cfg, double snr_db, std::size_t level_index);

struct AncCell {
    std::string algorithm;
    double snr_db = 0.0;
    std::vector<double> snr_in, snr_out, delta;
    metrics::Stat delta_stat, in_stat, out_stat;
};

struct AncResult {
    std::vector<AncCell> cells; ///< level-major, algorithm order as configured
    const AncCell& at(std::string_view algorithm, double snr_db) const;
};

AncResult run_anc_experiment(const ExperimentConfig& cfg);
std::vector<anc::BetaRow> run_sweep(const ExperimentConfig& cfg);

// ---- probe / validate ----

std::vector<theory::StabilityProbeReport> run_probe(const ExperimentConfig& cfg);

struct ValidateReport {
    std::vector<filters::Diagnostic> diagnostics;
    std::optional<double> implied_kappa;
    std::optional<double> mu_max;
    std::optional<double> lambda_at_mu_max;
    std::optional<double> lambda_at_mu;
};

ValidateReport run_validate(const ExperimentConfig& cfg);
void print_validate(std::ostream& os, const ValidateReport& report);

/// Runs the configured experiment and writes its files into cfg.output_dir.
/// Returns the written paths. Every CSV starts with the digest and seed.
std::vector<std::filesystem::path> execute(const ExperimentConfig& cfg, std::ostream& log);

} // namespace mlms::experiments
