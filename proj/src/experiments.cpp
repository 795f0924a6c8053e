#include "mlms/experiments.hpp"

#include "mlms/csv.hpp"
#include "mlms/error.hpp"
#include "mlms/rng.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace mlms::experiments {

namespace fs = std::filesystem;

namespace {

int line_of(const YAML::Node& n)
{
    return n.IsDefined() && n.Mark().line >= 0 ? n.Mark().line + 1 : 0;
}

/// A YAML mapping plus its dotted path, with typed, line-aware accessors.
class Section {
public:
    Section(const YAML::Node& node, std::string path, int fallback_line = 0)
        : node_(node.IsDefined() ? node : YAML::Node()), path_(std::move(path))
    {
        line_ = line_of(node_) ? line_of(node_) : fallback_line;
        if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap())
            throw ConfigError(path_ + " must be a mapping", line_);
    }

    void allow(std::initializer_list<const char*> keys) const
    {
        if (!node_.IsMap()) return;
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!ok.contains(key)) {
                std::string list;
                for (const auto& k : ok) list += (list.empty() ? "" : ", ") + k;
                throw ConfigError("unknown key '" + qualify(key) + "' (allowed: " + list + ")", line_of(kv.first));
            }
        }
    }

    bool has(const char* key) const { return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull(); }
    YAML::Node raw(const char* key) const { return node_.IsMap() ? node_[key] : YAML::Node(); }
    int line() const { return line_; }
    std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    Section sub(const char* key) const { return Section(raw(key), qualify(key), line_); }

    double number(const char* key, double def) const { return has(key) ? as_number(raw(key), key) : def; }
    std::optional<double> opt_number(const char* key) const
    {
        return has(key) ? std::optional<double>(as_number(raw(key), key)) : std::nullopt;
    }

    std::uint64_t u64(const char* key, std::uint64_t def) const
    {
        if (!has(key)) return def;
        const auto n = raw(key);
        try {
            const auto text = n.as<std::string>();
            if (text.empty() || text[0] == '-') throw YAML::BadConversion(n.Mark());
            return n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            throw ConfigError(qualify(key) + " must be a non-negative integer", line_of(n));
        }
    }

    std::size_t count(const char* key, std::size_t def, std::size_t min = 0) const
    {
        const auto v = u64(key, def);
        if (v < min) throw ConfigError(qualify(key) + " must be >= " + std::to_string(min), line_of(raw(key)));
        return static_cast<std::size_t>(v);
    }

    bool boolean(const char* key, bool def) const
    {
        if (!has(key)) return def;
        try {
            return raw(key).as<bool>();
        } catch (const YAML::Exception&) {
            throw ConfigError(qualify(key) + " must be true or false", line_of(raw(key)));
        }
    }

    std::string text(const char* key, const std::string& def) const
    {
        if (!has(key)) return def;
        const auto n = raw(key);
        if (!n.IsScalar()) throw ConfigError(qualify(key) + " must be a string", line_of(n));
        return n.as<std::string>();
    }

    std::vector<double> numbers(const char* key, std::vector<double> def) const
    {
        if (!has(key)) return def;
        const auto n = raw(key);
        if (!n.IsSequence()) throw ConfigError(qualify(key) + " must be a list of numbers", line_of(n));
        std::vector<double> out;
        for (const auto& item : n) out.push_back(as_number(item, key));
        return out;
    }

    std::vector<std::string> strings(const char* key) const
    {
        if (!has(key)) return {};
        const auto n = raw(key);
        if (!n.IsSequence()) throw ConfigError(qualify(key) + " must be a list of strings", line_of(n));
        std::vector<std::string> out;
        for (const auto& item : n) out.push_back(item.as<std::string>());
        return out;
    }

    [[noreturn]] void fail(const char* key, const std::string& what) const
    {
        throw ConfigError(qualify(key) + " " + what, has(key) ? line_of(raw(key)) : line_);
    }

private:
    double as_number(const YAML::Node& n, const char* key) const
    {
        try {
            if (!n.IsScalar()) throw YAML::BadConversion(n.Mark());
            const double v = n.as<double>();
            if (!std::isfinite(v)) throw YAML::BadConversion(n.Mark());
            return v;
        } catch (const YAML::Exception&) {
            throw ConfigError(qualify(key) + " must be a finite number", line_of(n));
        }
    }

    YAML::Node node_;
    std::string path_;
    int line_ = 0;
};

filters::FilterConfig parse_filter(const Section& s, std::size_t dim)
{
    const auto name = s.text("algorithm", "");
    if (name.empty()) s.fail("algorithm", "is required");
    const auto algo = filters::parse_algorithm(name);
    if (!algo) s.fail("algorithm", "has unknown value '" + name + "'");

    filters::FilterConfig c;
    c.algorithm = *algo;
    c.dim = dim;
    if (*algo == filters::Algorithm::rls) c.delta = 1e-2;
    if (*algo == filters::Algorithm::gngd) c.delta = 1.0;
    c.mu = s.number("mu", c.mu);
    c.delta = s.number("delta", c.delta);
    c.beta = s.number("beta", c.beta);
    c.lambda_forget = s.number("lambda_forget", c.lambda_forget);
    c.rho = s.number("rho", c.rho);
    c.box_half_width = s.number("box_half_width", c.box_half_width);

    const auto diags = filters::validate_config(c);
    for (const auto& d : diags) {
        if (d.severity == filters::Severity::error) throw ConfigError(s.qualify(d.code) + ": " + d.message, s.line());
    }
    return c;
}

std::vector<AlgorithmEntry> parse_algorithms(const YAML::Node& root, std::size_t dim)
{
    const auto node = root["algorithms"];
    if (!node.IsDefined() || node.IsNull()) throw ConfigError("algorithms: at least one entry is required");
    if (!node.IsSequence()) throw ConfigError("algorithms must be a list", line_of(node));
    std::vector<AlgorithmEntry> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < node.size(); ++i) {
        Section s(node[i], "algorithms[" + std::to_string(i) + "]");
        s.allow({"name", "algorithm", "mu", "delta", "beta", "lambda_forget", "rho", "box_half_width"});
        AlgorithmEntry e;
        e.cfg = parse_filter(s, dim);
        e.name = s.text("name", std::string(filters::to_string(e.cfg.algorithm)));
        if (!names.insert(e.name).second) s.fail("name", "duplicates an earlier entry ('" + e.name + "')");
        out.push_back(std::move(e));
    }
    if (out.empty()) throw ConfigError("algorithms: at least one entry is required", line_of(node));
    return out;
}

void parse_scenes(const Section& s, SceneSettings& out)
{
    s.allow({"source", "synthetic_fallback", "taps", "topology", "synthetic", "corpus"});
    const auto src = s.text("source", "synthetic");
    if (src == "synthetic") out.source = SceneSource::synthetic;
    else if (src == "corpus") out.source = SceneSource::corpus;
    else s.fail("source", "must be 'synthetic' or 'corpus'");
    out.synthetic_fallback = s.boolean("synthetic_fallback", false);
    out.taps = s.count("taps", 50, 1);
    const auto topo = anc::parse_topology(s.text("topology", "clean_reference"));
    if (!topo) s.fail("topology", "must be 'clean_reference' or 'noise_reference'");
    out.topology = *topo;

    const auto syn = s.sub("synthetic");
    syn.allow({"n_samples", "sample_rate", "noise_color", "level_std_db", "level_tau_s", "level_clip", "path_fir"});
    out.synthetic.n_samples = syn.count("n_samples", out.synthetic.n_samples, 1);
    out.synthetic.sample_rate = static_cast<int>(syn.count("sample_rate", 8000, 1));
    out.synthetic.noise.color = syn.numbers("noise_color", out.synthetic.noise.color);
    out.synthetic.noise.level_std_db = syn.number("level_std_db", out.synthetic.noise.level_std_db);
    out.synthetic.noise.level_tau_s = syn.number("level_tau_s", out.synthetic.noise.level_tau_s);
    out.synthetic.noise.level_clip = syn.number("level_clip", out.synthetic.noise.level_clip);
    if (out.synthetic.noise.level_clip < 0.0) syn.fail("level_clip", "must be >= 0");
    out.synthetic.path_fir = syn.numbers("path_fir", out.synthetic.path_fir);
    if (out.synthetic.noise.color.empty()) syn.fail("noise_color", "must not be empty");
    if (out.synthetic.path_fir.empty()) syn.fail("path_fir", "must not be empty");
    if (out.synthetic.noise.level_std_db < 0.0) syn.fail("level_std_db", "must be >= 0");
    if (!(out.synthetic.noise.level_tau_s > 0.0)) syn.fail("level_tau_s", "must be > 0");

    const auto cor = s.sub("corpus");
    cor.allow({"root", "clean", "noise", "path_fir"});
    out.corpus.root = cor.text("root", "");
    out.corpus.clean = cor.strings("clean");
    out.corpus.noise = cor.text("noise", "");
    out.corpus.path_fir = cor.numbers("path_fir", out.corpus.path_fir);
    if (out.corpus.path_fir.empty()) cor.fail("path_fir", "must not be empty");
}

systems::RegressorSpec parse_regressors(const Section& s)
{
    s.allow({"kind", "dim", "scale", "ar_diag", "random_phase"});
    systems::RegressorSpec r;
    const auto kind = systems::parse_regressor_kind(s.text("kind", "iid_gaussian"));
    if (!kind) s.fail("kind", "must be iid_gaussian, cycling_basis or ar_diag");
    r.kind = *kind;
    r.dim = s.count("dim", 1, 1);
    r.scale = s.number("scale", 1.0);
    if (r.scale < 0.0) s.fail("scale", "must be >= 0");
    const auto a = s.numbers("ar_diag", {});
    if (r.kind == systems::RegressorKind::ar_diag) {
        if (a.size() != r.dim) s.fail("ar_diag", "must have dim entries");
        r.ar_diag = Eigen::Map<const filters::Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
        if ((r.ar_diag.array().abs() >= 1.0).any()) s.fail("ar_diag", "entries must satisfy |a| < 1");
    }
    r.random_phase = s.boolean("random_phase", false);
    return r;
}

std::string sanitize(const std::string& name)
{
    std::string out;
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::string list(const std::vector<double>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::num(v[i]);
    return s + "]";
}

void add_filter(std::vector<std::string>& lines, const std::string& prefix, const filters::FilterConfig& c)
{
    lines.push_back(prefix + ".algorithm=" + std::string(filters::to_string(c.algorithm)));
    lines.push_back(prefix + ".mu=" + csv::num(c.mu));
    lines.push_back(prefix + ".delta=" + csv::num(c.delta));
    lines.push_back(prefix + ".beta=" + csv::num(c.beta));
    lines.push_back(prefix + ".lambda_forget=" + csv::num(c.lambda_forget));
    lines.push_back(prefix + ".rho=" + csv::num(c.rho));
    lines.push_back(prefix + ".box_half_width=" + csv::num(c.box_half_width));
    lines.push_back(prefix + ".dim=" + std::to_string(c.dim));
}

void add_scenes(std::vector<std::string>& lines, const SceneSettings& s)
{
    lines.push_back(std::string("scenes.source=") + (s.source == SceneSource::synthetic ? "synthetic" : "corpus"));
    lines.push_back("scenes.synthetic_fallback=" + std::to_string(s.synthetic_fallback));
    lines.push_back("scenes.taps=" + std::to_string(s.taps));
    lines.push_back("scenes.topology=" + std::string(anc::to_string(s.topology)));
    lines.push_back("scenes.synthetic.n_samples=" + std::to_string(s.synthetic.n_samples));
    lines.push_back("scenes.synthetic.sample_rate=" + std::to_string(s.synthetic.sample_rate));
    lines.push_back("scenes.synthetic.noise_color=" + list(s.synthetic.noise.color));
    lines.push_back("scenes.synthetic.level_std_db=" + csv::num(s.synthetic.noise.level_std_db));
    lines.push_back("scenes.synthetic.level_tau_s=" + csv::num(s.synthetic.noise.level_tau_s));
    lines.push_back("scenes.synthetic.level_clip=" + csv::num(s.synthetic.noise.level_clip));
    lines.push_back("scenes.synthetic.path_fir=" + list(s.synthetic.path_fir));
    if (s.source == SceneSource::corpus) {
        lines.push_back("scenes.corpus.root=" + s.corpus.root);
        std::string files;
        for (const auto& f : s.corpus.clean) files += f + ";";
        lines.push_back("scenes.corpus.clean=" + files);
        lines.push_back("scenes.corpus.noise=" + s.corpus.noise);
        lines.push_back("scenes.corpus.path_fir=" + list(s.corpus.path_fir));
    }
}

void add_algorithms(std::vector<std::string>& lines, const std::vector<AlgorithmEntry>& algos)
{
    for (std::size_t i = 0; i < algos.size(); ++i) {
        const auto prefix = "algorithms[" + std::to_string(i) + "]";
        lines.push_back(prefix + ".name=" + algos[i].name);
        add_filter(lines, prefix, algos[i].cfg);
    }
}

std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return csv::hex64(h);
}

fs::path resolve_corpus_root(const CorpusSpec& c)
{
    if (!c.root.empty()) return c.root;
    if (const char* env = std::getenv("MLMS_CORPUS_ROOT"); env && *env) return env;
    return {};
}

std::string fixed(double x, int digits = 2)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

} // namespace

std::string_view to_string(Kind k) noexcept
{
    switch (k) {
    case Kind::synth_track: return "synth_track";
    case Kind::anc: return "anc";
    case Kind::sweep_beta: return "sweep_beta";
    case Kind::stability_probe: return "stability_probe";
    case Kind::validate: return "validate";
    }
    return "?";
}

std::optional<Kind> parse_kind(std::string_view name) noexcept
{
    std::string s(name);
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "synth_track") return Kind::synth_track;
    if (s == "anc") return Kind::anc;
    if (s == "sweep_beta") return Kind::sweep_beta;
    if (s == "stability_probe") return Kind::stability_probe;
    if (s == "validate") return Kind::validate;
    return std::nullopt;
}

std::string ExperimentConfig::canonical() const
{
    std::vector<std::string> lines;
    lines.push_back("experiment=" + std::string(to_string(kind)));
    lines.push_back("seed=" + std::to_string(seed));
    lines.push_back("trials=" + std::to_string(trials));
    switch (kind) {
    case Kind::synth_track: {
        const auto& s = synth.system;
        lines.push_back("system.dim=" + std::to_string(s.dim));
        lines.push_back("system.a_diag=" + list(std::vector<double>(s.a_diag.data(), s.a_diag.data() + s.a_diag.size())));
        lines.push_back("system.state_noise_cov_scale=" + csv::num(s.state_noise_cov_scale));
        lines.push_back("system.jump_period=" + std::to_string(s.jump_period));
        lines.push_back("system.jump_scale=" + csv::num(s.jump_scale));
        lines.push_back("system.obs_noise_std=" + csv::num(s.obs_noise_std));
        lines.push_back("system.horizon=" + std::to_string(s.horizon));
        lines.push_back("system.theta0_std=" + csv::num(s.theta0_std));
        lines.push_back(std::string("curve_mode=") +
                        (synth.curve_mode == metrics::CurveMode::mean_of_db ? "mean_of_db" : "db_of_mean"));
        add_algorithms(lines, synth.algorithms);
        break;
    }
    case Kind::anc:
        add_scenes(lines, scenes);
        lines.push_back("anc.snr_levels_db=" + list(anc.snr_levels_db));
        lines.push_back("anc.write_wav=" + std::to_string(anc.write_wav));
        add_algorithms(lines, anc.algorithms);
        break;
    case Kind::sweep_beta:
        add_scenes(lines, scenes);
        lines.push_back("sweep.mu=" + csv::num(sweep.mu));
        lines.push_back("sweep.delta=" + csv::num(sweep.delta));
        lines.push_back("sweep.snr_db=" + csv::num(sweep.snr_db));
        lines.push_back("sweep.betas=" + list(sweep.betas));
        break;
    case Kind::stability_probe: {
        const auto& r = probe.regressors;
        lines.push_back("probe.regressors.kind=" + std::string(systems::to_string(r.kind)));
        lines.push_back("probe.regressors.dim=" + std::to_string(r.dim));
        lines.push_back("probe.regressors.scale=" + csv::num(r.scale));
        lines.push_back("probe.regressors.ar_diag=" +
                        list(std::vector<double>(r.ar_diag.data(), r.ar_diag.data() + r.ar_diag.size())));
        lines.push_back("probe.regressors.random_phase=" + std::to_string(r.random_phase));
        lines.push_back("probe.h=" + std::to_string(probe.h));
        std::vector<double> ps(probe.p.begin(), probe.p.end());
        lines.push_back("probe.p=" + list(ps));
        lines.push_back("probe.mu=" + (probe.mu ? csv::num(*probe.mu) : std::string("mu_max")));
        lines.push_back("probe.kappa=" + csv::num(probe.kappa));
        lines.push_back("probe.beta=" + (probe.beta ? csv::num(*probe.beta) : std::string("mu_pow_kappa")));
        lines.push_back("probe.delta=" + csv::num(probe.delta));
        lines.push_back("probe.alpha=" + (probe.alpha ? csv::num(*probe.alpha) : std::string("estimated")));
        lines.push_back("probe.max_blocks=" + std::to_string(probe.max_blocks));
        lines.push_back("probe.allow_inadmissible=" + std::to_string(probe.allow_inadmissible));
        break;
    }
    case Kind::validate:
        add_filter(lines, "validate.filter", validate.filter);
        if (validate.bound) {
            lines.push_back("validate.bound.alpha=" + csv::num(validate.bound->alpha));
            lines.push_back("validate.bound.h=" + std::to_string(validate.bound->h));
            lines.push_back("validate.bound.p=" + std::to_string(validate.bound->p));
        }
        if (validate.bound_kappa) lines.push_back("validate.bound.kappa=" + csv::num(*validate.bound_kappa));
        break;
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::string ExperimentConfig::digest() const
{
    return fnv1a_hex(canonical());
}

ExperimentConfig parse_config(std::string_view yaml_text)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1);
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping at top level", line_of(root));
    const Section top(root, "");
    top.allow({"experiment", "seed", "trials", "output_dir", "execution", "system", "curve_mode", "algorithms",
               "scenes", "anc", "sweep", "probe", "validate"});

    ExperimentConfig cfg;
    const auto kind_name = top.text("experiment", "");
    if (kind_name.empty()) top.fail("experiment", "is required");
    const auto kind = parse_kind(kind_name);
    if (!kind) top.fail("experiment", "has unknown value '" + kind_name + "'");
    cfg.kind = *kind;
    cfg.seed = top.u64("seed", 0);
    cfg.trials = top.count("trials", 1, 1);
    cfg.output_dir = top.text("output_dir", "out");
    const auto exec = top.text("execution", "parallel");
    if (exec == "parallel") cfg.execution = Execution::parallel;
    else if (exec == "serial") cfg.execution = Execution::serial;
    else top.fail("execution", "must be 'serial' or 'parallel'");

    auto reject = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) {
            if (top.has(k)) top.fail(k, "is not used by experiment '" + std::string(to_string(cfg.kind)) + "'");
        }
    };

    switch (cfg.kind) {
    case Kind::synth_track: {
        reject({"scenes", "anc", "sweep", "probe", "validate"});
        const auto s = top.sub("system");
        s.allow({"dim", "a_diag", "state_noise_cov_scale", "jump_period", "jump_scale", "obs_noise_std", "horizon",
                 "theta0_std"});
        auto& sys = cfg.synth.system;
        const auto ref = systems::JumpSystemSpec::reference();
        const auto a = s.numbers("a_diag", std::vector<double>(ref.a_diag.data(), ref.a_diag.data() + ref.a_diag.size()));
        sys.dim = s.count("dim", a.size(), 1);
        sys.a_diag = Eigen::Map<const filters::Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
        sys.state_noise_cov_scale = s.number("state_noise_cov_scale", ref.state_noise_cov_scale);
        sys.jump_period = s.count("jump_period", ref.jump_period, 1);
        sys.jump_scale = s.number("jump_scale", ref.jump_scale);
        sys.obs_noise_std = s.number("obs_noise_std", ref.obs_noise_std);
        sys.horizon = s.count("horizon", ref.horizon, 1);
        sys.theta0_std = s.number("theta0_std", ref.theta0_std);
        try {
            sys.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("system: ") + e.what(), s.line());
        }
        const auto mode = top.text("curve_mode", "mean_of_db");
        if (mode == "mean_of_db") cfg.synth.curve_mode = metrics::CurveMode::mean_of_db;
        else if (mode == "db_of_mean") cfg.synth.curve_mode = metrics::CurveMode::db_of_mean;
        else top.fail("curve_mode", "must be 'mean_of_db' or 'db_of_mean'");
        cfg.synth.algorithms = parse_algorithms(root, sys.dim);
        break;
    }
    case Kind::anc: {
        reject({"system", "curve_mode", "sweep", "probe", "validate"});
        parse_scenes(top.sub("scenes"), cfg.scenes);
        const auto s = top.sub("anc");
        s.allow({"snr_levels_db", "write_wav"});
        cfg.anc.snr_levels_db = s.numbers("snr_levels_db", cfg.anc.snr_levels_db);
        if (cfg.anc.snr_levels_db.empty()) s.fail("snr_levels_db", "must not be empty");
        cfg.anc.write_wav = s.boolean("write_wav", false);
        cfg.anc.algorithms = parse_algorithms(root, cfg.scenes.taps);
        break;
    }
    case Kind::sweep_beta: {
        reject({"system", "curve_mode", "algorithms", "anc", "probe", "validate"});
        parse_scenes(top.sub("scenes"), cfg.scenes);
        const auto s = top.sub("sweep");
        s.allow({"mu", "delta", "snr_db", "betas"});
        cfg.sweep.mu = s.number("mu", cfg.sweep.mu);
        cfg.sweep.delta = s.number("delta", cfg.sweep.delta);
        cfg.sweep.snr_db = s.number("snr_db", cfg.sweep.snr_db);
        std::vector<double> def;
        for (int i = 0; i <= 12; ++i) def.push_back(0.05 * i);
        cfg.sweep.betas = s.numbers("betas", def);
        if (cfg.sweep.betas.empty()) s.fail("betas", "must not be empty");
        for (double b : cfg.sweep.betas) {
            if (!(b >= 0.0 && b < 1.0)) s.fail("betas", "entries must lie in [0, 1)");
        }
        if (!(cfg.sweep.mu > 0.0)) s.fail("mu", "must be > 0");
        if (!(cfg.sweep.delta > 0.0)) s.fail("delta", "must be > 0");
        break;
    }
    case Kind::stability_probe: {
        reject({"system", "curve_mode", "algorithms", "scenes", "anc", "sweep", "validate"});
        const auto s = top.sub("probe");
        s.allow({"regressors", "h", "p", "mu", "kappa", "beta", "delta", "alpha", "max_blocks", "allow_inadmissible"});
        auto& p = cfg.probe;
        p.regressors = parse_regressors(s.sub("regressors"));
        p.h = static_cast<int>(s.count("h", p.regressors.dim, 1));
        p.p.clear();
        if (s.has("p") && s.raw("p").IsSequence()) {
            for (double v : s.numbers("p", {})) {
                if (v < 1 || v != std::floor(v)) s.fail("p", "entries must be integers >= 1");
                p.p.push_back(static_cast<int>(v));
            }
        } else {
            p.p.push_back(static_cast<int>(s.count("p", 1, 1)));
        }
        if (p.p.empty()) s.fail("p", "must not be empty");
        if (s.has("mu") && s.text("mu", "") != "mu_max") {
            p.mu = s.number("mu", 0.0);
            if (!(*p.mu >= 0.0)) s.fail("mu", "must be >= 0 or 'mu_max'");
        }
        p.kappa = s.number("kappa", 2.0);
        if (!(p.kappa > 1.0)) s.fail("kappa", "must be > 1");
        if (s.has("beta") && s.text("beta", "") != "mu_pow_kappa") {
            p.beta = s.number("beta", 0.0);
            if (!(*p.beta >= 0.0 && *p.beta < 1.0)) s.fail("beta", "must lie in [0, 1) or be 'mu_pow_kappa'");
        }
        p.delta = s.number("delta", 1.0);
        if (!(p.delta > 0.0)) s.fail("delta", "must be > 0");
        p.alpha = s.opt_number("alpha");
        if (p.alpha && !(*p.alpha > 0.0 && *p.alpha <= 1.0)) s.fail("alpha", "must lie in (0, 1]");
        p.max_blocks = static_cast<int>(s.count("max_blocks", 30, 1));
        p.allow_inadmissible = s.boolean("allow_inadmissible", false);
        break;
    }
    case Kind::validate: {
        reject({"system", "curve_mode", "algorithms", "scenes", "anc", "sweep", "probe"});
        const auto s = top.sub("validate");
        s.allow({"filter", "bound"});
        const auto f = s.sub("filter");
        f.allow({"algorithm", "dim", "mu", "delta", "beta", "lambda_forget", "rho", "box_half_width"});
        // parse_filter rejects hard errors; validate should report them instead.
        const auto name = f.text("algorithm", "mlms");
        const auto algo = filters::parse_algorithm(name);
        if (!algo) f.fail("algorithm", "has unknown value '" + name + "'");
        auto& c = cfg.validate.filter;
        c.algorithm = *algo;
        c.dim = f.count("dim", 1);
        if (*algo == filters::Algorithm::rls) c.delta = 1e-2;
        if (*algo == filters::Algorithm::gngd) c.delta = 1.0;
        c.mu = f.number("mu", c.mu);
        c.delta = f.number("delta", c.delta);
        c.beta = f.number("beta", c.beta);
        c.lambda_forget = f.number("lambda_forget", c.lambda_forget);
        c.rho = f.number("rho", c.rho);
        c.box_half_width = f.number("box_half_width", c.box_half_width);
        const auto b = s.sub("bound");
        b.allow({"alpha", "h", "p", "kappa"});
        if (b.has("alpha") || b.has("h") || b.has("p")) {
            filters::BoundParams bp{};
            bp.alpha = b.number("alpha", 0.0);
            bp.h = static_cast<int>(b.count("h", 1));
            bp.p = static_cast<int>(b.count("p", 1));
            cfg.validate.bound = bp;
        }
        cfg.validate.bound_kappa = b.opt_number("kappa");
        break;
    }
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---- synth_track ----

metrics::TrialReport track(const filters::FilterConfig& cfg, const systems::Trajectory& traj)
{
    filters::AdaptiveFilter f(cfg);
    metrics::TrialReport r;
    r.seed = traj.seed;
    r.per_step_mse_db.reserve(traj.size());
    r.per_step_sq_pred_err.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        r.per_step_mse_db.push_back(metrics::mse_db(f.state().theta_hat, traj.theta[k]));
        const auto out = f.step(traj.phi[k], traj.y[k]);
        r.per_step_sq_pred_err.push_back(out.error * out.error);
    }
    return r;
}

std::vector<SegmentStat> segment_windows(const std::vector<double>& curve, std::size_t period, std::size_t lo,
                                         std::size_t hi)
{
    if (period == 0 || !(lo < hi) || hi > period) throw InvalidArgument("segment window must satisfy lo < hi <= period");
    std::vector<SegmentStat> out;
    for (std::size_t seg = 0; seg * period + hi <= curve.size(); ++seg) {
        SegmentStat s;
        s.segment = seg;
        s.begin = seg * period + lo;
        s.end = seg * period + hi;
        s.mean_mse_db = metrics::cesaro_avg(curve, s.begin, s.end);
        out.push_back(s);
    }
    return out;
}

SynthTrackResult run_synth_track(const ExperimentConfig& cfg)
{
    if (cfg.kind != Kind::synth_track) throw InvalidArgument("config is not a synth_track experiment");
    const auto& algos = cfg.synth.algorithms;
    const auto per_trial = map_indexed(
        cfg.trials,
        [&](std::size_t t) {
            const auto traj = systems::gen_jump_system(cfg.synth.system, derive_seed(cfg.seed, t));
            std::vector<metrics::TrialReport> reports;
            for (const auto& a : algos) {
                auto r = track(a.cfg, traj);
                r.config_digest = cfg.digest();
                reports.push_back(std::move(r));
            }
            return reports;
        },
        cfg.execution);

    SynthTrackResult res;
    for (std::size_t i = 0; i < algos.size(); ++i) {
        AlgorithmTrack at;
        at.name = algos[i].name;
        for (const auto& trial : per_trial) at.trials.push_back(trial[i]);
        at.summary = metrics::aggregate(at.trials, cfg.synth.curve_mode);
        const auto period = cfg.synth.system.jump_period;
        if (period >= 100) at.windows = segment_windows(at.summary.mean_mse_db, period, 50, 100);
        else if (period >= 2) at.windows = segment_windows(at.summary.mean_mse_db, period, period / 2, period);
        res.algorithms.push_back(std::move(at));
    }
    return res;
}

// ---- anc / sweep ----

std::vector<anc::AncScene> build_scenes(const ExperimentConfig& cfg, double snr_db, std::size_t level_index)
{
    const auto& sc = cfg.scenes;
    const std::uint64_t level_seed = derive_seed(cfg.seed, level_index);
    auto synthetic = [&] {
        return map_indexed(
            cfg.trials,
            [&](std::size_t i) { return anc::make_synthetic_scene(sc.synthetic, snr_db, derive_seed(level_seed, i)); },
            cfg.execution);
    };
    if (sc.source == SceneSource::synthetic) return synthetic();

    const fs::path root = resolve_corpus_root(sc.corpus);
    std::string problem;
    if (root.empty()) problem = "scenes.corpus.root is not set and MLMS_CORPUS_ROOT is empty";
    else if (!fs::is_directory(root)) problem = "corpus root '" + root.string() + "' (scenes.corpus.root) is not a directory";
    else if (sc.corpus.clean.empty()) problem = "scenes.corpus.clean lists no utterances";
    else if (sc.corpus.noise.empty()) problem = "scenes.corpus.noise is not set";
    else {
        for (const auto& f : sc.corpus.clean) {
            if (!fs::exists(root / f)) {
                problem = "scenes.corpus.clean entry '" + f + "' not found under " + root.string();
                break;
            }
        }
        if (problem.empty() && !fs::exists(root / sc.corpus.noise))
            problem = "scenes.corpus.noise file '" + sc.corpus.noise + "' not found under " + root.string();
    }
    if (!problem.empty()) {
        if (sc.synthetic_fallback) return synthetic();
        throw ConfigError(problem + " (set scenes.synthetic_fallback: true or scenes.source: synthetic to run without the corpus)");
    }

    const auto noise = anc::load_wav(root / sc.corpus.noise);
    std::vector<anc::AncScene> scenes;
    for (std::size_t i = 0; i < sc.corpus.clean.size(); ++i) {
        const auto clean = anc::load_wav(root / sc.corpus.clean[i]);
        scenes.push_back(anc::make_scene(clean, noise, snr_db, sc.corpus.path_fir, derive_seed(level_seed, i)));
    }
    return scenes;
}

const AncCell& AncResult::at(std::string_view algorithm, double snr_db) const
{
    for (const auto& c : cells) {
        if (c.algorithm == algorithm && c.snr_db == snr_db) return c;
    }
    throw InvalidArgument("no ANC result for " + std::string(algorithm) + " at " + csv::num(snr_db) + " dB");
}

AncResult run_anc_experiment(const ExperimentConfig& cfg)
{
    if (cfg.kind != Kind::anc) throw InvalidArgument("config is not an anc experiment");
    const auto& algos = cfg.anc.algorithms;
    AncResult res;
    for (std::size_t li = 0; li < cfg.anc.snr_levels_db.size(); ++li) {
        const double level = cfg.anc.snr_levels_db[li];
        const auto scenes = build_scenes(cfg, level, li);
        const std::size_t na = algos.size();
        const auto snrs = map_indexed(
            scenes.size() * na,
            [&](std::size_t idx) {
                const auto r = anc::run_anc(algos[idx % na].cfg, scenes[idx / na], cfg.scenes.taps, cfg.scenes.topology);
                if (!r.report.delta_snr_db) throw InvalidArgument("scene has a silent clean signal");
                return std::array<double, 3>{*r.report.snr_in_db, *r.report.snr_out_db, *r.report.delta_snr_db};
            },
            cfg.execution);
        for (std::size_t a = 0; a < na; ++a) {
            AncCell cell;
            cell.algorithm = algos[a].name;
            cell.snr_db = level;
            for (std::size_t s = 0; s < scenes.size(); ++s) {
                const auto& v = snrs[s * na + a];
                cell.snr_in.push_back(v[0]);
                cell.snr_out.push_back(v[1]);
                cell.delta.push_back(v[2]);
            }
            cell.in_stat = metrics::mean_std(cell.snr_in);
            cell.out_stat = metrics::mean_std(cell.snr_out);
            cell.delta_stat = metrics::mean_std(cell.delta);
            res.cells.push_back(std::move(cell));
        }
    }
    return res;
}

std::vector<anc::BetaRow> run_sweep(const ExperimentConfig& cfg)
{
    if (cfg.kind != Kind::sweep_beta) throw InvalidArgument("config is not a sweep_beta experiment");
    const auto scenes = build_scenes(cfg, cfg.sweep.snr_db, 0);
    const auto base = filters::FilterConfig::mlms(cfg.scenes.taps, cfg.sweep.mu, cfg.sweep.delta, 0.0);
    return anc::sweep_beta(base, scenes, cfg.sweep.betas, cfg.scenes.taps, cfg.scenes.topology, cfg.execution);
}

// ---- probe / validate ----

std::vector<theory::StabilityProbeReport> run_probe(const ExperimentConfig& cfg)
{
    if (cfg.kind != Kind::stability_probe) throw InvalidArgument("config is not a stability_probe experiment");
    const auto& ps = cfg.probe;
    const auto h = static_cast<std::size_t>(ps.h);
    const double alpha = ps.alpha ? *ps.alpha : theory::pilot_alpha(ps.regressors, h, cfg.seed);
    std::vector<theory::StabilityProbeReport> out;
    for (int p : ps.p) {
        theory::ProbeSpec spec;
        spec.regressors = ps.regressors;
        spec.h = ps.h;
        spec.p = p;
        spec.delta = ps.delta;
        spec.max_blocks = ps.max_blocks;
        spec.trials = static_cast<int>(cfg.trials);
        spec.seed = cfg.seed;
        spec.alpha_hat = alpha;
        spec.allow_inadmissible = ps.allow_inadmissible;
        if (ps.mu) {
            spec.mu = *ps.mu;
        } else {
            if (!(alpha > 0.0)) throw InvalidArgument("mu_max needs excited regressors (estimated alpha is 0)");
            spec.mu = theory::mu_max(std::min(alpha, 1.0), ps.h, p, ps.kappa);
        }
        spec.beta = ps.beta ? *ps.beta : std::pow(spec.mu, ps.kappa);
        out.push_back(theory::product_norm_probe(spec, cfg.execution));
    }
    return out;
}

ValidateReport run_validate(const ExperimentConfig& cfg)
{
    const auto& v = cfg.validate;
    ValidateReport r;
    r.diagnostics = filters::validate_config(v.filter, v.bound);
    r.implied_kappa = v.filter.implied_kappa();
    if (v.bound && !filters::has_errors(r.diagnostics)) {
        const double kappa = v.bound_kappa ? *v.bound_kappa : (r.implied_kappa ? *r.implied_kappa : 0.0);
        if (kappa > 1.0) {
            r.mu_max = theory::mu_max(v.bound->alpha, v.bound->h, v.bound->p, kappa);
            r.lambda_at_mu_max = theory::lambda_p(v.bound->alpha, *r.mu_max, v.bound->p);
            const double prod = v.bound->alpha * v.filter.mu / 8.0;
            if (prod > 0.0 && prod < 1.0) r.lambda_at_mu = theory::lambda_p(v.bound->alpha, v.filter.mu, v.bound->p);
        }
    }
    return r;
}

void print_validate(std::ostream& os, const ValidateReport& r)
{
    if (r.diagnostics.empty()) os << "diagnostics: none\n";
    for (const auto& d : r.diagnostics)
        os << (d.severity == filters::Severity::error ? "error" : "warning") << " [" << d.code << "]: " << d.message
           << '\n';
    if (r.implied_kappa) os << "implied_kappa: " << csv::num(*r.implied_kappa) << '\n';
    if (r.mu_max) os << "mu_max: " << csv::num(*r.mu_max) << '\n';
    if (r.lambda_at_mu_max) os << "lambda_p(mu_max): " << csv::num(*r.lambda_at_mu_max) << '\n';
    if (r.lambda_at_mu) os << "lambda_p(mu): " << csv::num(*r.lambda_at_mu) << '\n';
}

std::vector<fs::path> execute(const ExperimentConfig& cfg, std::ostream& log)
{
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
    const auto digest = cfg.digest();
    std::vector<fs::path> written;
    auto open = [&](const std::string& name) {
        const auto path = cfg.output_dir / name;
        auto out = open_out(path);
        csv::write_provenance(out, digest, cfg.seed);
        out << "# experiment: " << to_string(cfg.kind) << '\n';
        written.push_back(path);
        return out;
    };

    switch (cfg.kind) {
    case Kind::synth_track: {
        const auto res = run_synth_track(cfg);
        auto summary = open("synth_track_summary.csv");
        summary << "algorithm,segment,window_begin,window_end,mean_mse_db\n";
        for (const auto& a : res.algorithms) {
            auto curve = open("synth_track_" + sanitize(a.name) + ".csv");
            metrics::write_per_step_csv(curve, a.summary.mean_mse_db, a.summary.mean_sq_pred_err);
            log << a.name << ":";
            for (const auto& w : a.windows) {
                summary << a.name << ',' << w.segment << ',' << w.begin << ',' << w.end << ','
                        << csv::num(w.mean_mse_db) << '\n';
                log << ' ' << fixed(w.mean_mse_db);
            }
            log << " dB\n";
        }
        break;
    }
    case Kind::anc: {
        const auto res = run_anc_experiment(cfg);
        auto per = open("anc_utterances.csv");
        per << "utterance,snr_level,algorithm,snr_in,snr_out,delta\n";
        auto sum = open("anc_summary.csv");
        sum << "snr_level,algorithm,snr_in,snr_out,delta_snr_mean,delta_snr_std\n";
        for (const auto& c : res.cells) {
            for (std::size_t u = 0; u < c.delta.size(); ++u)
                per << u << ',' << csv::num(c.snr_db) << ',' << c.algorithm << ',' << csv::num(c.snr_in[u]) << ','
                    << csv::num(c.snr_out[u]) << ',' << csv::num(c.delta[u]) << '\n';
            sum << csv::num(c.snr_db) << ',' << c.algorithm << ',' << csv::num(c.in_stat.mean) << ','
                << csv::num(c.out_stat.mean) << ',' << csv::num(c.delta_stat.mean) << ','
                << csv::num(c.delta_stat.std) << '\n';
            log << c.snr_db << " dB  " << c.algorithm << ": " << fixed(c.delta_stat.mean) << " +/- "
                << fixed(c.delta_stat.std) << " dB\n";
        }
        if (cfg.anc.write_wav) {
            const auto dir = cfg.output_dir / "enhanced";
            fs::create_directories(dir);
            for (std::size_t li = 0; li < cfg.anc.snr_levels_db.size(); ++li) {
                const auto scenes = build_scenes(cfg, cfg.anc.snr_levels_db[li], li);
                for (std::size_t s = 0; s < scenes.size(); ++s) {
                    for (const auto& a : cfg.anc.algorithms) {
                        const auto r = anc::run_anc(a.cfg, scenes[s], cfg.scenes.taps, cfg.scenes.topology);
                        const auto path = dir / (csv::num(cfg.anc.snr_levels_db[li]) + "dB_utt" + std::to_string(s) +
                                                 "_" + sanitize(a.name) + ".wav");
                        anc::save_wav(path, r.enhanced);
                        written.push_back(path);
                    }
                }
            }
        }
        break;
    }
    case Kind::sweep_beta: {
        const auto rows = run_sweep(cfg);
        auto out = open("sweep_beta.csv");
        anc::write_sweep_csv(out, rows);
        for (const auto& r : rows)
            log << "beta=" << fixed(r.beta) << "  delta_snr=" << fixed(r.mean_delta_snr, 3) << " dB\n";
        break;
    }
    case Kind::stability_probe: {
        for (const auto& rep : run_probe(cfg)) {
            auto out = open("stability_probe_p" + std::to_string(rep.p) + ".csv");
            out << "# p: " << rep.p << "\n# h: " << rep.h << "\n# alpha_hat: " << csv::num(rep.alpha_hat)
                << "\n# mu: " << csv::num(rep.mu) << "\n# trials: " << rep.trials << '\n';
            for (const auto& d : rep.diagnostics) out << "# note: " << d << '\n';
            theory::write_probe_csv(out, rep);
            const auto ratio = rep.ratio();
            log << "p=" << rep.p << " mu=" << csv::num(rep.mu) << " log-slope=" << csv::num(rep.log_slope())
                << " max ratio=" << csv::num(*std::max_element(ratio.begin(), ratio.end())) << '\n';
        }
        break;
    }
    case Kind::validate: {
        const auto rep = run_validate(cfg);
        auto out = open("validate.txt");
        print_validate(out, rep);
        print_validate(log, rep);
        break;
    }
    }
    return written;
}

} // namespace mlms::experiments
