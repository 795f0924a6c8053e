#include "mlms/error.hpp"
#include "mlms/experiments.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mlms;
using namespace mlms::experiments;

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(MLMS_SOURCE_DIR) / "configs";

int error_line(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string error_text(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmallTrack = R"(experiment: synth_track
seed: 5
trials: 2
output_dir: OUT
system:
  horizon: 10
algorithms:
  - {name: LMS, algorithm: nlms, mu: 0.1, delta: 0.1}
  - {name: MLMS, algorithm: mlms, mu: 0.1, delta: 0.1, beta: 0.099}
)";

std::string small_track(const fs::path& out)
{
    std::string s = kSmallTrack;
    s.replace(s.find("OUT"), 3, out.string());
    return s;
}

} // namespace

TEST_SUITE("config")
{
    TEST_CASE("shipped configs parse")
    {
        const std::pair<const char*, Kind> files[] = {{"synth_track.yaml", Kind::synth_track},
                                                      {"anc.yaml", Kind::anc},
                                                      {"anc_corpus.yaml", Kind::anc},
                                                      {"sweep_beta.yaml", Kind::sweep_beta},
                                                      {"stability_probe.yaml", Kind::stability_probe},
                                                      {"validate.yaml", Kind::validate}};
        for (const auto& [name, kind] : files) {
            CAPTURE(name);
            const auto cfg = load_config(kConfigs / name);
            CHECK(cfg.kind == kind);
            CHECK(cfg.digest().size() == 16);
        }
        const auto track = load_config(kConfigs / "synth_track.yaml");
        CHECK(track.trials == 10);
        REQUIRE(track.synth.algorithms.size() == 4);
        CHECK(track.synth.algorithms[3].cfg.beta == 0.099);
        CHECK(track.synth.algorithms[3].cfg.dim == 6);

        const auto sweep = load_config(kConfigs / "sweep_beta.yaml");
        CHECK(sweep.sweep.betas.size() == 13);
        CHECK(sweep.sweep.mu == 0.35);
    }

    TEST_CASE("unknown keys are errors with line numbers")
    {
        CHECK(error_line("experiment: validate\nsede: 3\n") == 2);
        CHECK(error_text("experiment: validate\nsede: 3\n").find("sede") != std::string::npos);
        CHECK(error_line(std::string(kSmallTrack) + "  - {name: X, algorithm: sgd, mu: 0.1, bta: 0.2}\n") == 10);
        CHECK(error_line("experiment: synth_track\nsystem:\n  dim: 2\n  horizn: 4\nalgorithms:\n  - {name: A, "
                         "algorithm: sgd}\n") == 4);
    }

    TEST_CASE("type and range errors")
    {
        CHECK(error_line("experiment: synth_track\ntrials: 0\nalgorithms:\n  - {name: A, algorithm: sgd}\n") == 2);
        CHECK(error_line("experiment: synth_track\nseed: abc\nalgorithms:\n  - {name: A, algorithm: sgd}\n") == 2);
        CHECK(error_line("experiment: synth_track\nalgorithms:\n  - {name: A, algorithm: sgd, mu: -1}\n") == 3);
        CHECK(error_line("experiment: synth_track\nalgorithms:\n  - {name: A, algorithm: adam}\n") == 3);
        CHECK(error_line("experiment: warp\n") == 1);
        CHECK(error_line("experiment: validate\nsystem: {dim: 2}\n") == 2);
        CHECK(error_line("experiment: synth_track\nalgorithms: [\n") > 0);
        CHECK(error_text("experiment: synth_track\n").find("algorithms") != std::string::npos);
        CHECK(error_text("experiment: synth_track\nalgorithms:\n  - {name: A, algorithm: sgd}\n  - {name: A, "
                         "algorithm: nlms}\n")
                  .find("duplicates") != std::string::npos);
    }

    TEST_CASE("digest is stable and ignores the execution mode and output directory")
    {
        const auto a = parse_config(small_track("x"));
        const auto b = parse_config(small_track("y") + "execution: serial\n");
        CHECK(a.digest() == b.digest());
        CHECK(a.canonical() == b.canonical());
        CHECK(b.execution == Execution::serial);

        std::string other = small_track("x");
        other.replace(other.find("seed: 5"), 7, "seed: 6");
        CHECK(parse_config(other).digest() != a.digest());
        std::string mu = small_track("x");
        mu.replace(mu.find("beta: 0.099"), 11, "beta: 0.098");
        CHECK(parse_config(mu).digest() != a.digest());
        CHECK(parse_config(small_track("x")).digest() == a.digest());
    }

    TEST_CASE("missing corpus is an actionable error")
    {
        auto cfg = load_config(kConfigs / "anc_corpus.yaml");
        cfg.scenes.corpus.root = "/nonexistent/corpus";
        try {
            build_scenes(cfg, 5.0, 0);
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("synthetic_fallback") != std::string::npos);
        }

        auto fallback = cfg;
        fallback.scenes.synthetic_fallback = true;
        fallback.scenes.synthetic.n_samples = 500;
        const auto scenes = build_scenes(fallback, 5.0, 0);
        CHECK(scenes.size() == fallback.trials);
    }

    TEST_CASE("corpus scenes load from WAV files")
    {
        const auto root = fs::temp_directory_path() / "mlms_corpus_test";
        fs::remove_all(root);
        fs::create_directories(root / "clean");
        fs::create_directories(root / "noise");
        Rng rng(1);
        anc::NoiseSpec flat;
        flat.level_std_db = 0.0;
        for (const char* name : {"sp01.wav", "sp02.wav", "sp03.wav"})
            anc::save_wav(root / "clean" / name, {anc::synth_speech(rng, 2000, 8000), 8000});
        anc::save_wav(root / "noise" / "airport.wav", {anc::synth_noise(rng, 5000, 8000, flat), 8000});

        auto cfg = load_config(kConfigs / "anc_corpus.yaml");
        cfg.scenes.corpus.root = root.string();
        const auto scenes = build_scenes(cfg, 10.0, 1);
        REQUIRE(scenes.size() == 3);
        for (const auto& s : scenes) {
            CHECK(s.clean.size() == 2000);
            const auto m = metrics::snr_metrics(s.noisy.samples, s.clean.samples, s.noisy.samples);
            CHECK(std::abs(m.snr_in - 10.0) < 0.1);
        }
        fs::remove_all(root);
    }

    TEST_CASE("execute writes provenance headers and reproduces files")
    {
        const auto dir = fs::temp_directory_path() / "mlms_execute_test";
        fs::remove_all(dir);
        const auto cfg = parse_config(small_track(dir / "a"));
        std::ostringstream log;
        const auto files = execute(cfg, log);
        REQUIRE_FALSE(files.empty());
        for (const auto& f : files) {
            const auto body = slurp(f);
            CHECK(body.rfind("# config_digest: " + cfg.digest() + "\n# seed: 5\n", 0) == 0);
        }
        auto again = cfg;
        again.output_dir = dir / "b";
        again.execution = Execution::serial;
        const auto files_b = execute(again, log);
        REQUIRE(files_b.size() == files.size());
        for (std::size_t i = 0; i < files.size(); ++i) CHECK(slurp(files[i]) == slurp(files_b[i]));
        fs::remove_all(dir);
    }

    TEST_CASE("validate report for the reference bound")
    {
        const auto cfg = load_config(kConfigs / "validate.yaml");
        const auto r = run_validate(cfg);
        REQUIRE(r.mu_max);
        CHECK(std::abs(*r.mu_max - 1.0 / 60.0) < 1e-15);
        REQUIRE(r.lambda_at_mu_max);
        CHECK(std::abs(*r.lambda_at_mu_max - 0.9989583333333333) < 1e-15);
        REQUIRE(r.implied_kappa);
        CHECK(*r.implied_kappa == doctest::Approx(1.00436).epsilon(1e-5));
        std::ostringstream os;
        print_validate(os, r);
        CHECK(os.str().find("0.016666666666666666") != std::string::npos);
    }
}
