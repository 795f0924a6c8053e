#pragma once

#include "mlms/filters.hpp"
#include "mlms/metrics.hpp"
#include "mlms/parallel.hpp"
#include "mlms/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlms::anc {

struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 8000;

    std::size_t size() const noexcept { return samples.size(); }
    /// Samples with |x| > 1. They are kept as is; writers clip them.
    std::size_t clipped_count() const noexcept;
};

/// 16-bit PCM WAV. Multi-channel input is downmixed by averaging; samples are
/// divided by 32768.
AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes);
AudioBuffer load_wav(const std::filesystem::path& path);

/// Mono 16-bit PCM, samples clipped to [-1, 1] and scaled by 32767.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf);
void save_wav(const std::filesystem::path& path, const AudioBuffer& buf);

/// Causal FIR with zero initial conditions, output length = input length.
std::vector<double> fir_filter(const std::vector<double>& taps, const std::vector<double>& x);

struct AncScene {
    AudioBuffer clean;
    AudioBuffer noisy;     ///< clean + scaled noise through path_fir
    AudioBuffer reference; ///< scaled noise before the path
    double target_snr_db = 0.0;
    std::vector<double> path_fir;
    std::uint64_t seed = 0;
};

inline const std::vector<double>& default_path_fir()
{
    static const std::vector<double> p{1.0, 0.5, -0.3};
    return p;
}

/// Crops `noise` at a seeded offset to the length of `clean`, then scales it so
/// that 10 log10(sum c^2 / sum (g path * noise)^2) = target_snr_db.
AncScene make_scene(const AudioBuffer& clean, const AudioBuffer& noise, double target_snr_db,
                    const std::vector<double>& path_fir, std::uint64_t seed);

/// Speech-like test signal: syllables of 80-250 ms separated by short pauses;
/// 3/4 voiced (harmonic source, f0 90-220 Hz with glide, three formant
/// resonators), 1/4 unvoiced (resonant noise). RMS normalized to 0.1.
std::vector<double> synth_speech(Rng& rng, std::size_t n, int sample_rate);

struct NoiseSpec {
    std::vector<double> color{1.0};
    /// Std of the slowly varying log level, in dB. 0 gives stationary noise.
    double level_std_db = 18.0;
    /// Time constant of the level process, in seconds.
    double level_tau_s = 0.03;
    /// g is clipped to [-level_clip, level_clip]; 0 disables clipping.
    double level_clip = 2.5;
};

/// Gaussian noise through `color`, amplitude-modulated by 10^(level_std_db g(t) / 20)
/// with g a unit-variance AR(1) process, clipped at +/- level_clip
/// (babble-like level fluctuations without unbounded bursts).
std::vector<double> synth_noise(Rng& rng, std::size_t n, int sample_rate, const NoiseSpec& spec);

struct SyntheticSceneSpec {
    std::size_t n_samples = 20000;
    int sample_rate = 8000;
    NoiseSpec noise;
    std::vector<double> path_fir{1.0};
};

AncScene make_synthetic_scene(const SyntheticSceneSpec& spec, double target_snr_db, std::uint64_t seed);

enum class Topology {
    /// Regressor = tapped delay line of the noisy signal, desired = clean,
    /// enhanced = filter output.
    clean_reference,
    /// Regressor = tapped delay line of the noise reference, desired = noisy,
    /// enhanced = error signal noisy - filter output.
    noise_reference,
};

std::string_view to_string(Topology t) noexcept;
std::optional<Topology> parse_topology(std::string_view name) noexcept;

struct AncResult {
    AudioBuffer enhanced;
    std::vector<double> prediction;
    metrics::TrialReport report; ///< per_step_sq_pred_err = e_k^2; SNR when the clean signal has energy
    filters::FilterState final_state;
};

/// Fresh filter state per call. Empty scenes give empty outputs.
AncResult run_anc(const filters::FilterConfig& cfg, const AncScene& scene, std::size_t taps,
                  Topology topology = Topology::clean_reference);

/// One pass over a concatenation of utterances; filter state and delay line
/// are reset at every index in `boundaries` (ascending, inside the scene).
AncResult run_anc_segmented(const filters::FilterConfig& cfg, const AncScene& scene, std::size_t taps,
                            const std::vector<std::size_t>& boundaries,
                            Topology topology = Topology::clean_reference);

struct BetaRow {
    double beta = 0.0;
    double mean_delta_snr = 0.0;
    double std_delta_snr = 0.0;
};

/// run_anc for every (beta, scene) pair with everything else fixed.
std::vector<BetaRow> sweep_beta(const filters::FilterConfig& base_cfg, const std::vector<AncScene>& scenes,
                                const std::vector<double>& betas, std::size_t taps,
                                Topology topology = Topology::clean_reference,
                                Execution exec = Execution::parallel);

/// Columns: beta, delta_snr_mean, delta_snr_std.
void write_sweep_csv(std::ostream& os, const std::vector<BetaRow>& rows);

} // namespace mlms::anc
