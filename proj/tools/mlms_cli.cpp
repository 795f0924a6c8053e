#include "mlms/error.hpp"
#include "mlms/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Failure {
    int code;
    const char* kind;
};

int report(const Failure& f, const std::string& message)
{
    std::cerr << "error: " << f.kind << ": " << message << '\n';
    return f.code;
}

} // namespace

int main(int argc, char** argv)
{
    using namespace mlms;

    CLI::App app{"Momentum LMS experiments. Each subcommand takes one YAML config file."};
    app.require_subcommand(1);

    std::string config_path;
    bool serial = false;
    bool quiet = false;
    app.add_flag("--serial", serial, "run trials on one thread (results are identical)");
    app.add_flag("-q,--quiet", quiet, "suppress the progress summary on stdout");
    app.fallthrough();
    const std::vector<std::pair<const char*, const char*>> commands{
        {"synth-track", "jump-system tracking: per-step MSE-dB curves and segment summary"},
        {"anc", "noise cancellation on synthetic or corpus scenes: SNR table per level"},
        {"sweep-beta", "delta-SNR as a function of the momentum coefficient"},
        {"stability-probe", "Monte Carlo product-norm decay against lambda_p^n"},
        {"validate", "config diagnostics, mu_max and lambda_p"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config_path, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        auto cfg = experiments::load_config(config_path);
        const auto wanted = experiments::parse_kind(command);
        if (!wanted || *wanted != cfg.kind) {
            throw ConfigError(config_path + ": experiment is '" + std::string(experiments::to_string(cfg.kind)) +
                              "' but the subcommand is '" + command + "'");
        }
        if (serial) cfg.execution = Execution::serial;

        std::ostream null_stream(nullptr);
        std::ostream& log = quiet ? null_stream : std::cout;
        log << "config digest " << cfg.digest() << ", seed " << cfg.seed << '\n';
        const auto files = experiments::execute(cfg, log);
        for (const auto& f : files) log << "wrote " << f.string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        return report({2, "config"}, e.what());
    } catch (const InvalidArgument& e) {
        return report({3, "invalid-argument"}, e.what());
    } catch (const NonFiniteInput& e) {
        return report({3, "non-finite-input"}, e.what());
    } catch (const FormatError& e) {
        return report({4, "format"}, e.what());
    } catch (const IoError& e) {
        return report({4, "io"}, e.what());
    } catch (const NumericalDegeneracy& e) {
        return report({5, "numerical"}, e.what());
    } catch (const std::exception& e) {
        return report({1, "internal"}, e.what());
    }
}
