#include "mlms/anc.hpp"
#include "mlms/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

using namespace mlms;
using namespace mlms::anc;

namespace {

double energy(const std::vector<double>& x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

void put(std::vector<std::uint8_t>& b, std::uint32_t v, int bytes)
{
    for (int i = 0; i < bytes; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void tag(std::vector<std::uint8_t>& b, const char* t) { b.insert(b.end(), t, t + 4); }

/// Hand-assembled WAV with an optional extra chunk before "data".
std::vector<std::uint8_t> wav(const std::vector<std::int16_t>& samples, int channels, int rate,
                              std::uint16_t format = 1, int bits = 16, bool odd_chunk = false,
                              bool extensible = false)
{
    std::vector<std::uint8_t> fmt;
    put(fmt, extensible ? 0xFFFE : format, 2);
    put(fmt, static_cast<std::uint32_t>(channels), 2);
    put(fmt, static_cast<std::uint32_t>(rate), 4);
    put(fmt, static_cast<std::uint32_t>(rate * channels * bits / 8), 4);
    put(fmt, static_cast<std::uint32_t>(channels * bits / 8), 2);
    put(fmt, static_cast<std::uint32_t>(bits), 2);
    if (extensible) {
        put(fmt, 22, 2);
        put(fmt, static_cast<std::uint32_t>(bits), 2);
        put(fmt, 0, 4);
        put(fmt, format, 2);
        for (int i = 0; i < 14; ++i) fmt.push_back(0);
    }
    std::vector<std::uint8_t> body;
    tag(body, "WAVE");
    tag(body, "fmt ");
    put(body, static_cast<std::uint32_t>(fmt.size()), 4);
    body.insert(body.end(), fmt.begin(), fmt.end());
    if (odd_chunk) {
        tag(body, "LIST");
        put(body, 3, 4);
        body.insert(body.end(), {'a', 'b', 'c', 0});
    }
    tag(body, "data");
    put(body, static_cast<std::uint32_t>(samples.size() * 2), 4);
    for (auto s : samples) put(body, static_cast<std::uint16_t>(s), 2);
    std::vector<std::uint8_t> out;
    tag(out, "RIFF");
    put(out, static_cast<std::uint32_t>(body.size()), 4);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

AudioBuffer buffer(std::vector<double> x, int rate = 8000) { return AudioBuffer{std::move(x), rate}; }

AudioBuffer noise_buffer(std::uint64_t seed, std::size_t n)
{
    Rng rng(seed);
    return buffer(oracle::gaussian(rng, n, 0.1));
}

AncScene noise_only_scene(const std::vector<double>& path, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    AncScene s;
    s.reference = buffer(oracle::gaussian(rng, n, 0.3));
    s.noisy = buffer(fir_filter(path, s.reference.samples));
    s.clean = buffer(std::vector<double>(n, 0.0));
    s.path_fir = path;
    return s;
}

} // namespace

TEST_SUITE("anc")
{
    TEST_CASE("WAV decoding examples")
    {
        auto b = decode_wav(wav(std::vector<std::int16_t>(8000, 0), 1, 8000));
        CHECK(b.size() == 8000);
        CHECK(b.sample_rate == 8000);
        CHECK(energy(b.samples) == 0.0);

        b = decode_wav(wav({32767, -32768, 16384}, 1, 16000));
        CHECK(b.samples[0] == 32767.0 / 32768.0);
        CHECK(b.samples[1] == -1.0);
        CHECK(b.samples[2] == 0.5);
        CHECK(b.sample_rate == 16000);

        b = decode_wav(wav({1000, 3000, -200, 200}, 2, 8000));
        REQUIRE(b.size() == 2);
        CHECK(b.samples[0] == doctest::Approx(2000.0 / 32768.0).epsilon(1e-15));
        CHECK(b.samples[1] == 0.0);

        b = decode_wav(wav({100, 200}, 1, 8000, 1, 16, true));
        CHECK(b.size() == 2);
        b = decode_wav(wav({100, 200}, 1, 8000, 1, 16, false, true));
        CHECK(b.samples[1] == 200.0 / 32768.0);
    }

    TEST_CASE("WAV errors")
    {
        CHECK_THROWS_AS(decode_wav(wav({1, 2}, 1, 8000, 3, 32)), FormatError);
        CHECK_THROWS_AS(decode_wav(wav({1, 2}, 1, 8000, 1, 8)), FormatError);
        CHECK_THROWS_AS(decode_wav(wav({1, 2}, 1, 8000, 3, 16, false, true)), FormatError);
        auto bytes = wav({1, 2, 3, 4}, 1, 8000);
        bytes.resize(bytes.size() - 3);
        CHECK_THROWS_AS(decode_wav(bytes), IoError);
        CHECK_THROWS_AS(decode_wav({'R', 'I', 'F'}), IoError);
        auto bad = wav({1}, 1, 8000);
        std::memcpy(bad.data() + 8, "AVI ", 4);
        CHECK_THROWS_AS(decode_wav(bad), FormatError);
        CHECK_THROWS_AS(load_wav("/nonexistent/none.wav"), IoError);
    }

    TEST_CASE("WAV round trip through a file")
    {
        std::vector<double> x;
        for (int i = -5; i <= 5; ++i) x.push_back(i / 5.0);
        x.push_back(1.7);
        const AudioBuffer in = buffer(x, 8000);
        CHECK(in.clipped_count() == 1);
        const auto path = std::filesystem::temp_directory_path() / "mlms_roundtrip.wav";
        save_wav(path, in);
        const auto out = load_wav(path);
        std::filesystem::remove(path);
        REQUIRE(out.size() == x.size());
        CHECK(out.sample_rate == 8000);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) CHECK(std::abs(out.samples[i] - x[i]) <= 1.0 / 32768.0 + 1e-12);
        CHECK(out.samples.back() == 32767.0 / 32768.0);
        CHECK(out.clipped_count() == 0);
    }

    TEST_CASE("fir_filter against direct convolution")
    {
        Rng rng(2);
        const auto x = oracle::gaussian(rng, 40), h = oracle::gaussian(rng, 5);
        const auto y = fir_filter(h, x);
        for (std::size_t k = 0; k < x.size(); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < h.size() && j <= k; ++j) acc += h[j] * x[k - j];
            REQUIRE(y[k] == doctest::Approx(acc).epsilon(1e-14));
        }
        CHECK_THROWS_AS(fir_filter({}, x), InvalidArgument);
    }

    TEST_CASE("make_scene hits the target SNR")
    {
        Rng rng(3);
        const auto clean = buffer(synth_speech(rng, 4000, 8000));
        const auto noise = noise_buffer(4, 6000);

        auto s = make_scene(clean, noise, 0.0, {1.0}, 9);
        std::vector<double> diff(clean.size());
        for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = s.noisy.samples[k] - clean.samples[k];
        CHECK(std::abs(10.0 * std::log10(energy(clean.samples) / energy(diff))) < 0.1);

        for (double target : {-5.0, 5.0, 10.0, 15.0}) {
            s = make_scene(clean, noise, target, default_path_fir(), 9);
            const auto m = metrics::snr_metrics(s.noisy.samples, s.clean.samples, s.noisy.samples);
            CHECK(std::abs(m.snr_in - target) < 0.1);
            CHECK(s.noisy.size() == clean.size());
            CHECK(s.reference.size() == clean.size());
            CHECK(s.noisy.sample_rate == s.clean.sample_rate);
        }

        s = make_scene(clean, noise, 200.0, default_path_fir(), 9);
        for (std::size_t k = 0; k < clean.size(); ++k) REQUIRE(std::abs(s.noisy.samples[k] - clean.samples[k]) < 1e-8);

        const auto a = make_scene(clean, noise, 5.0, default_path_fir(), 77);
        const auto b = make_scene(clean, noise, 5.0, default_path_fir(), 77);
        CHECK(a.noisy.samples == b.noisy.samples);
        CHECK(a.reference.samples == b.reference.samples);
    }

    TEST_CASE("make_scene errors")
    {
        const auto noise = noise_buffer(1, 100);
        CHECK_THROWS_AS(make_scene(buffer(std::vector<double>(50, 0.0)), noise, 5.0, {1.0}, 1), InvalidArgument);
        CHECK_THROWS_AS(make_scene(buffer(std::vector<double>(50, 0.1)), buffer(std::vector<double>(100, 0.0)), 5.0,
                                   {1.0}, 1),
                        InvalidArgument);
        CHECK_THROWS_AS(make_scene(buffer(std::vector<double>(150, 0.1)), noise, 5.0, {1.0}, 1), InvalidArgument);
        CHECK_THROWS_AS(make_scene(buffer(std::vector<double>(50, 0.1), 16000), noise, 5.0, {1.0}, 1),
                        InvalidArgument);
    }

    TEST_CASE("synthetic signals")
    {
        Rng rng(5);
        const auto s = synth_speech(rng, 20000, 8000);
        CHECK(std::sqrt(energy(s) / s.size()) == doctest::Approx(0.1).epsilon(1e-12));

        NoiseSpec flat;
        flat.level_std_db = 0.0;
        Rng r1(6);
        const auto n = synth_noise(r1, 40000, 8000, flat);
        const double first = energy({n.begin(), n.begin() + 20000}), second = energy({n.begin() + 20000, n.end()});
        CHECK(first / second == doctest::Approx(1.0).epsilon(0.05));

        NoiseSpec bad;
        bad.level_clip = -1.0;
        Rng r2(7);
        CHECK_THROWS_AS(synth_noise(r2, 10, 8000, bad), InvalidArgument);

        SyntheticSceneSpec spec;
        spec.n_samples = 3000;
        const auto a = make_synthetic_scene(spec, 5.0, 42), b = make_synthetic_scene(spec, 5.0, 42);
        CHECK(a.noisy.samples == b.noisy.samples);
        CHECK(make_synthetic_scene(spec, 5.0, 43).noisy.samples != a.noisy.samples);
    }

    TEST_CASE("noise-reference topology cancels a noise-only scene")
    {
        const auto scene = noise_only_scene({1.0}, 8000, 1);
        const auto cfg = filters::FilterConfig::mlms(4, 0.5, 1e-3, 0.1);
        const auto r = run_anc(cfg, scene, 4, Topology::noise_reference);
        const std::vector<double> tail_e(r.enhanced.samples.begin() + 4000, r.enhanced.samples.end());
        const std::vector<double> tail_n(scene.noisy.samples.begin() + 4000, scene.noisy.samples.end());
        CHECK(energy(tail_e) < 0.01 * energy(tail_n));
        CHECK_FALSE(r.report.delta_snr_db.has_value());
    }

    TEST_CASE("single tap converges to the memoryless path gain")
    {
        for (double g : {0.4, -1.3}) {
            const auto scene = noise_only_scene({g}, 4000, 2);
            const auto r = run_anc(filters::FilterConfig::nlms(1, 0.2, 1e-6), scene, 1, Topology::noise_reference);
            CHECK(std::abs(r.final_state.theta_hat[0] - g) <= 0.05 * std::abs(g));
        }
    }

    TEST_CASE("noise-reference identities")
    {
        SyntheticSceneSpec spec;
        spec.n_samples = 3000;
        spec.path_fir = default_path_fir();
        const auto scene = make_synthetic_scene(spec, 5.0, 8);
        const auto r = run_anc(filters::FilterConfig::mlms(8, 0.25, 1e-12, 0.15), scene, 8, Topology::noise_reference);
        for (std::size_t k = 0; k < scene.noisy.size(); ++k)
            REQUIRE(r.enhanced.samples[k] == scene.noisy.samples[k] - r.prediction[k]);
        REQUIRE(r.report.delta_snr_db);
        CHECK(*r.report.delta_snr_db == *r.report.snr_out_db - *r.report.snr_in_db);

        // Silent reference: the estimate never moves and the clean signal passes through.
        AncScene quiet = scene;
        quiet.reference.samples.assign(scene.clean.size(), 0.0);
        quiet.noisy = scene.clean;
        const auto q = run_anc(filters::FilterConfig::mlms(8, 0.25, 1e-12, 0.15), quiet, 8, Topology::noise_reference);
        CHECK(q.enhanced.samples == scene.clean.samples);
        CHECK(q.final_state.theta_hat.isZero());
    }

    TEST_CASE("clean-reference topology matches a hand-built delay line")
    {
        SyntheticSceneSpec spec;
        spec.n_samples = 2000;
        const auto scene = make_synthetic_scene(spec, 5.0, 10);
        const std::size_t taps = 6;
        const auto cfg = filters::FilterConfig::mlms(taps, 0.25, 1e-12, 0.15);
        const auto r = run_anc(cfg, scene, taps);

        oracle::Mlms ref(taps, 0.25, 1e-12, 0.15);
        for (std::size_t k = 0; k < scene.clean.size(); ++k) {
            oracle::Vec phi(taps, 0.0);
            for (std::size_t j = 0; j < taps && j <= k; ++j) phi[j] = scene.noisy.samples[k - j];
            const double pred = oracle::dot(phi, ref.theta);
            REQUIRE(r.enhanced.samples[k] == doctest::Approx(pred).epsilon(1e-9).scale(1.0));
            REQUIRE(r.enhanced.samples[k] == r.prediction[k]);
            ref.step(phi, scene.clean.samples[k]);
        }
        CHECK(r.report.per_step_sq_pred_err.size() == scene.clean.size());
    }

    TEST_CASE("segmented reset equals separate runs bitwise")
    {
        SyntheticSceneSpec spec;
        spec.n_samples = 1500;
        const auto a = make_synthetic_scene(spec, 5.0, 1), b = make_synthetic_scene(spec, 10.0, 2);
        AncScene joined = a;
        for (auto* part : {&joined.clean, &joined.noisy, &joined.reference}) part->samples.clear();
        for (const auto* s : {&a, &b}) {
            joined.clean.samples.insert(joined.clean.samples.end(), s->clean.samples.begin(), s->clean.samples.end());
            joined.noisy.samples.insert(joined.noisy.samples.end(), s->noisy.samples.begin(), s->noisy.samples.end());
            joined.reference.samples.insert(joined.reference.samples.end(), s->reference.samples.begin(),
                                            s->reference.samples.end());
        }
        for (auto topo : {Topology::clean_reference, Topology::noise_reference}) {
            const auto cfg = filters::FilterConfig::mlms(10, 0.25, 1e-12, 0.15);
            const auto whole = run_anc_segmented(cfg, joined, 10, {a.clean.size()}, topo);
            const auto ra = run_anc(cfg, a, 10, topo), rb = run_anc(cfg, b, 10, topo);
            const auto split = std::next(whole.enhanced.samples.begin(), static_cast<std::ptrdiff_t>(a.clean.size()));
            CHECK(std::vector<double>(whole.enhanced.samples.begin(), split) == ra.enhanced.samples);
            CHECK(std::vector<double>(split, whole.enhanced.samples.end()) == rb.enhanced.samples);
        }
    }

    TEST_CASE("run_anc argument handling")
    {
        AncScene empty;
        const auto r = run_anc(filters::FilterConfig::mlms(3, 0.2, 0.1, 0.0), empty, 3);
        CHECK(r.enhanced.samples.empty());
        CHECK(r.prediction.empty());

        SyntheticSceneSpec spec;
        spec.n_samples = 100;
        const auto s = make_synthetic_scene(spec, 5.0, 1);
        CHECK_THROWS_AS(run_anc(filters::FilterConfig::mlms(3, 0.2, 0.1, 0.0), s, 4), InvalidArgument);
        CHECK_THROWS_AS(run_anc(filters::FilterConfig::mlms(3, 0.2, 0.1, 0.0), s, 0), InvalidArgument);
        AncScene ragged = s;
        ragged.noisy.samples.pop_back();
        CHECK_THROWS_AS(run_anc(filters::FilterConfig::mlms(3, 0.2, 0.1, 0.0), ragged, 3), InvalidArgument);
    }

    TEST_CASE("beta sweep")
    {
        SyntheticSceneSpec spec;
        spec.n_samples = 2000;
        std::vector<AncScene> scenes{make_synthetic_scene(spec, 0.0, 1), make_synthetic_scene(spec, 0.0, 2)};
        const auto base = filters::FilterConfig::mlms(8, 0.35, 1e-12, 0.0);

        const auto rows = sweep_beta(base, scenes, {0.0}, 8);
        REQUIRE(rows.size() == 1);
        double mean = 0.0;
        for (const auto& s : scenes) mean += *run_anc(filters::FilterConfig::nlms(8, 0.35, 1e-12), s, 8).report.delta_snr_db;
        CHECK(rows[0].mean_delta_snr == mean / 2.0);

        const auto two = sweep_beta(base, {scenes[0]}, {0.1, 0.3}, 8);
        REQUIRE(two.size() == 2);
        CHECK(two[0].beta == 0.1);
        CHECK(two[1].beta == 0.3);
        CHECK(two[0].std_delta_snr == 0.0);
        const auto again = sweep_beta(base, {scenes[0]}, {0.1, 0.3}, 8);
        CHECK(again[1].mean_delta_snr == two[1].mean_delta_snr);

        CHECK_THROWS_AS(sweep_beta(filters::FilterConfig::nlms(8, 0.35, 1e-12), scenes, {0.0}, 8), InvalidArgument);
        CHECK_THROWS_AS(sweep_beta(base, scenes, {}, 8), InvalidArgument);
    }

    TEST_CASE("topology names")
    {
        CHECK(parse_topology("clean_reference") == Topology::clean_reference);
        CHECK(parse_topology(to_string(Topology::noise_reference)) == Topology::noise_reference);
        CHECK_FALSE(parse_topology("feedback").has_value());
    }
}
