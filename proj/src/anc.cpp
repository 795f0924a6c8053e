#include "mlms/anc.hpp"

#include "mlms/csv.hpp"
#include "mlms/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <ostream>

namespace mlms::anc {

namespace {

std::uint32_t read_u32(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const std::uint8_t* p)
{
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

double energy(const std::vector<double>& x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

/// Two-pole resonator, gain-normalized by (1 - r).
std::vector<double> resonate(const std::vector<double>& x, double freq, double bw, int fs)
{
    const double r = std::exp(-std::numbers::pi * bw / fs);
    const double th = 2.0 * std::numbers::pi * freq / fs;
    const double a1 = -2.0 * r * std::cos(th);
    const double a2 = r * r;
    std::vector<double> y(x.size());
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] - a1 * y1 - a2 * y2;
        y[i] = v * (1.0 - r);
        y2 = y1;
        y1 = v;
    }
    return y;
}

void require_same_shape(const AncScene& scene)
{
    const auto n = scene.clean.size();
    if (scene.noisy.size() != n || scene.reference.size() != n)
        throw InvalidArgument("scene buffers differ in length");
    if (scene.noisy.sample_rate != scene.clean.sample_rate || scene.reference.sample_rate != scene.clean.sample_rate)
        throw InvalidArgument("scene buffers differ in sample rate");
}

} // namespace

std::size_t AudioBuffer::clipped_count() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](double x) { return std::abs(x) > 1.0; }));
}

AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 12) throw IoError("WAV: file shorter than the RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError("WAV: missing RIFF/WAVE signature");

    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = bytes.data() + pos;
        const std::uint32_t len = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (len < 16 || body + 16 > bytes.size()) throw IoError("WAV: truncated fmt chunk");
            std::uint16_t format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == 0xFFFE) {
                if (len < 40 || body + 26 > bytes.size()) throw IoError("WAV: truncated extensible fmt chunk");
                format = read_u16(bytes.data() + body + 24);
            }
            if (format != 1) throw FormatError("WAV: only integer PCM is supported (format tag " + std::to_string(format) + ")");
            if (bits != 16) throw FormatError("WAV: only 16-bit samples are supported (got " + std::to_string(bits) + ")");
            if (channels == 0) throw FormatError("WAV: zero channels");
            if (rate == 0) throw FormatError("WAV: zero sample rate");
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("WAV: data chunk before fmt chunk");
            if (body + len > bytes.size()) throw IoError("WAV: truncated data chunk");
            const std::size_t frame = 2U * channels;
            const std::size_t frames = len / frame;
            AudioBuffer out;
            out.sample_rate = static_cast<int>(rate);
            out.samples.resize(frames);
            for (std::size_t f = 0; f < frames; ++f) {
                double acc = 0.0;
                for (std::size_t c = 0; c < channels; ++c) {
                    const auto raw = static_cast<std::int16_t>(read_u16(bytes.data() + body + f * frame + 2 * c));
                    acc += raw / 32768.0;
                }
                out.samples[f] = acc / channels;
            }
            return out;
        }
        pos = body + len + (len & 1U);
    }
    throw IoError(have_fmt ? "WAV: no data chunk" : "WAV: no fmt chunk");
}

AudioBuffer load_wav(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_wav(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf)
{
    if (buf.sample_rate <= 0) throw InvalidArgument("sample rate must be > 0");
    const auto data_len = static_cast<std::uint32_t>(2 * buf.samples.size());
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(buf.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_len);
    for (double x : buf.samples) {
        const double c = std::isfinite(x) ? std::clamp(x, -1.0, 1.0) : 0.0;
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
    }
    return out;
}

void save_wav(const std::filesystem::path& path, const AudioBuffer& buf)
{
    const auto bytes = encode_wav(buf);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> fir_filter(const std::vector<double>& taps, const std::vector<double>& x)
{
    if (taps.empty()) throw InvalidArgument("FIR needs at least one tap");
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        double acc = 0.0;
        const std::size_t top = std::min(taps.size(), k + 1);
        for (std::size_t j = 0; j < top; ++j) acc += taps[j] * x[k - j];
        y[k] = acc;
    }
    return y;
}

AncScene make_scene(const AudioBuffer& clean, const AudioBuffer& noise, double target_snr_db,
                    const std::vector<double>& path_fir, std::uint64_t seed)
{
    if (clean.sample_rate != noise.sample_rate) throw InvalidArgument("clean and noise sample rates differ");
    if (noise.size() < clean.size()) throw InvalidArgument("noise must be at least as long as clean");
    if (!std::isfinite(target_snr_db)) throw InvalidArgument("target SNR must be finite");
    if (!(energy(clean.samples) > 0.0)) throw InvalidArgument("clean signal has zero energy");

    Rng rng(seed);
    const std::size_t n = clean.size();
    const std::size_t offset = rng.below(noise.size() - n + 1);
    const std::vector<double> crop(noise.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                   noise.samples.begin() + static_cast<std::ptrdiff_t>(offset + n));
    const std::vector<double> through = fir_filter(path_fir, crop);
    const double e_path = energy(through);
    if (!(e_path > 0.0)) throw InvalidArgument("noise has zero energy after the path");
    const double gain = std::sqrt(energy(clean.samples) / (e_path * std::pow(10.0, target_snr_db / 10.0)));

    AncScene s;
    s.clean = clean;
    s.target_snr_db = target_snr_db;
    s.path_fir = path_fir;
    s.seed = seed;
    s.noisy.sample_rate = s.reference.sample_rate = clean.sample_rate;
    s.noisy.samples.resize(n);
    s.reference.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.noisy.samples[k] = clean.samples[k] + gain * through[k];
        s.reference.samples[k] = gain * crop[k];
    }
    return s;
}

std::vector<double> synth_speech(Rng& rng, std::size_t n, int fs)
{
    if (fs <= 0) throw InvalidArgument("sample rate must be > 0");
    std::vector<double> s(n, 0.0);
    const auto sec = [fs](double t) { return static_cast<std::size_t>(t * fs); };
    const std::size_t headroom = std::min(sec(0.2), n / 8);
    std::size_t k = std::min(sec(rng.uniform(0.1, 0.25)), n / 8);
    while (k + headroom < n) {
        const std::size_t len = std::min(sec(rng.uniform(0.08, 0.25)), n - k);
        if (len < 2) break;
        std::vector<double> seg;
        if (rng.uniform() < 0.75) {
            const double f0 = rng.uniform(90.0, 220.0);
            const double glide = rng.uniform(-0.2, 0.2);
            std::vector<double> phase(len);
            double ph = 0.0, f_top = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                const double f = f0 * (1.0 + glide * static_cast<double>(i) / static_cast<double>(len - 1));
                f_top = std::max(f_top, f);
                ph += 2.0 * std::numbers::pi * f / fs;
                phase[i] = ph;
            }
            std::vector<double> src(len, 0.0);
            const int harmonics = static_cast<int>(3800.0 / f_top);
            for (int h = 1; h < harmonics; ++h) {
                const double w = std::pow(h, -0.3);
                for (std::size_t i = 0; i < len; ++i) src[i] += std::sin(h * phase[i]) * w;
            }
            const double f1 = rng.uniform(300.0, 850.0);
            const double f2 = rng.uniform(900.0, 2300.0);
            const double f3 = rng.uniform(2300.0, 3200.0);
            const auto r1 = resonate(src, f1, 80.0, fs);
            const auto r2 = resonate(src, f2, 120.0, fs);
            const auto r3 = resonate(src, f3, 180.0, fs);
            seg.resize(len);
            for (std::size_t i = 0; i < len; ++i) seg[i] = r1[i] + 0.6 * r2[i] + 0.3 * r3[i];
        } else {
            std::vector<double> w(len);
            for (auto& v : w) v = rng.normal();
            seg = resonate(w, rng.uniform(2000.0, 3500.0), 600.0, fs);
            for (auto& v : seg) v *= 0.5;
        }
        const double rms = std::sqrt(energy(seg) / static_cast<double>(len));
        const double level = rng.uniform(0.5, 1.5) / (rms + 1e-12);
        for (std::size_t i = 0; i < len; ++i) {
            const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                     static_cast<double>(len - 1));
            s[k + i] += seg[i] * std::sqrt(hann) * level;
        }
        k += len + sec(rng.uniform(0.0, 0.12));
    }
    const double e = energy(s);
    if (e > 0.0) {
        const double scale = 0.1 / std::sqrt(e / static_cast<double>(n));
        for (auto& v : s) v *= scale;
    }
    return s;
}

std::vector<double> synth_noise(Rng& rng, std::size_t n, int fs, const NoiseSpec& spec)
{
    if (fs <= 0) throw InvalidArgument("sample rate must be > 0");
    if (!(spec.level_std_db >= 0.0)) throw InvalidArgument("level_std_db must be >= 0");
    std::vector<double> w(n);
    for (auto& v : w) v = rng.normal();
    std::vector<double> x = fir_filter(spec.color, w);
    if (spec.level_std_db > 0.0) {
        if (!(spec.level_tau_s > 0.0)) throw InvalidArgument("level_tau_s must be > 0");
        if (!(spec.level_clip >= 0.0)) throw InvalidArgument("level_clip must be >= 0");
        const double clip = spec.level_clip > 0.0 ? spec.level_clip : std::numeric_limits<double>::infinity();
        const double a = std::exp(-1.0 / (spec.level_tau_s * fs));
        const double drive = std::sqrt(1.0 - a * a);
        double g = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
            g = a * g + drive * rng.normal();
            x[i] *= std::pow(10.0, spec.level_std_db * std::clamp(g, -clip, clip) / 20.0);
        }
    }
    return x;
}

AncScene make_synthetic_scene(const SyntheticSceneSpec& spec, double target_snr_db, std::uint64_t seed)
{
    Rng root(seed);
    Rng speech_rng = root.split(0);
    Rng noise_rng = root.split(1);
    AudioBuffer clean{synth_speech(speech_rng, spec.n_samples, spec.sample_rate), spec.sample_rate};
    AudioBuffer noise{synth_noise(noise_rng, spec.n_samples, spec.sample_rate, spec.noise), spec.sample_rate};
    return make_scene(clean, noise, target_snr_db, spec.path_fir, seed);
}

std::string_view to_string(Topology t) noexcept
{
    return t == Topology::clean_reference ? "clean_reference" : "noise_reference";
}

std::optional<Topology> parse_topology(std::string_view name) noexcept
{
    if (name == "clean_reference") return Topology::clean_reference;
    if (name == "noise_reference") return Topology::noise_reference;
    return std::nullopt;
}

AncResult run_anc(const filters::FilterConfig& cfg, const AncScene& scene, std::size_t taps, Topology topology)
{
    return run_anc_segmented(cfg, scene, taps, {}, topology);
}

AncResult run_anc_segmented(const filters::FilterConfig& cfg, const AncScene& scene, std::size_t taps,
                            const std::vector<std::size_t>& boundaries, Topology topology)
{
    if (taps == 0) throw InvalidArgument("taps must be >= 1");
    if (cfg.dim != taps) throw InvalidArgument("filter dim must equal the tap count");
    require_same_shape(scene);
    if (!std::is_sorted(boundaries.begin(), boundaries.end()))
        throw InvalidArgument("segment boundaries must be ascending");

    const std::size_t n = scene.clean.size();
    const auto& input = topology == Topology::clean_reference ? scene.noisy.samples : scene.reference.samples;
    const auto& desired = topology == Topology::clean_reference ? scene.clean.samples : scene.noisy.samples;

    filters::AdaptiveFilter filter(cfg);
    filters::Vector phi = filters::Vector::Zero(static_cast<Eigen::Index>(taps));

    AncResult res;
    res.enhanced.sample_rate = scene.clean.sample_rate;
    res.enhanced.samples.resize(n);
    res.prediction.resize(n);
    res.report.per_step_sq_pred_err.resize(n);

    auto next_reset = boundaries.begin();
    for (std::size_t k = 0; k < n; ++k) {
        if (next_reset != boundaries.end() && *next_reset == k) {
            filter.reset();
            phi.setZero();
            while (next_reset != boundaries.end() && *next_reset == k) ++next_reset;
        }
        for (Eigen::Index i = phi.size() - 1; i > 0; --i) phi[i] = phi[i - 1];
        phi[0] = input[k];
        const auto out = filter.step(phi, desired[k]);
        res.prediction[k] = out.prediction;
        res.enhanced.samples[k] =
            topology == Topology::clean_reference ? out.prediction : scene.noisy.samples[k] - out.prediction;
        res.report.per_step_sq_pred_err[k] = out.error * out.error;
    }
    res.final_state = filter.state();

    if (n > 0 && energy(scene.clean.samples) > 0.0) {
        const auto snr = metrics::snr_metrics(scene.noisy.samples, scene.clean.samples, res.enhanced.samples);
        res.report.snr_in_db = snr.snr_in;
        res.report.snr_out_db = snr.snr_out;
        res.report.delta_snr_db = snr.delta;
    }
    res.report.seed = scene.seed;
    return res;
}

std::vector<BetaRow> sweep_beta(const filters::FilterConfig& base_cfg, const std::vector<AncScene>& scenes,
                                const std::vector<double>& betas, std::size_t taps, Topology topology,
                                Execution exec)
{
    if (betas.empty() || scenes.empty()) throw InvalidArgument("sweep_beta needs betas and scenes");
    if (base_cfg.algorithm != filters::Algorithm::mlms && base_cfg.algorithm != filters::Algorithm::projected_mlms)
        throw InvalidArgument("sweep_beta needs an MLMS configuration");

    const std::size_t ns = scenes.size();
    const auto deltas = map_indexed(
        betas.size() * ns,
        [&](std::size_t idx) {
            filters::FilterConfig cfg = base_cfg;
            cfg.beta = betas[idx / ns];
            const auto r = run_anc(cfg, scenes[idx % ns], taps, topology);
            if (!r.report.delta_snr_db) throw InvalidArgument("sweep_beta: scene has a silent clean signal");
            return *r.report.delta_snr_db;
        },
        exec);

    std::vector<BetaRow> rows;
    for (std::size_t b = 0; b < betas.size(); ++b) {
        const std::vector<double> vals(deltas.begin() + static_cast<std::ptrdiff_t>(b * ns),
                                       deltas.begin() + static_cast<std::ptrdiff_t>((b + 1) * ns));
        const auto st = metrics::mean_std(vals);
        rows.push_back({betas[b], st.mean, st.std});
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<BetaRow>& rows)
{
    os << "beta,delta_snr_mean,delta_snr_std\n";
    for (const auto& r : rows)
        os << csv::num(r.beta) << ',' << csv::num(r.mean_delta_snr) << ',' << csv::num(r.std_delta_snr) << '\n';
}

} // namespace mlms::anc
