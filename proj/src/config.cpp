#include "pergarch/config.hpp"

#include "pergarch/errors.hpp"
#include "pergarch/random.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace pergarch {

namespace {

using nlohmann::json;

/// Typed access to one JSON object with the key path carried into error messages.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            fail("", "expected an object");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::string where = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
        throw ConfigError("config: " + (where.empty() ? std::string("<root>") : where) + ": " + what);
    }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& item : node_.items()) {
            if (!ok.count(item.key())) {
                fail(item.key(), "unknown key");
            }
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    [[nodiscard]] Section child(const std::string& key) const {
        if (!node_.contains(key)) {
            fail(key, "missing section");
        }
        return Section(node_.at(key), join(key));
    }

    [[nodiscard]] double number(const std::string& key) const {
        const json& v = get(key);
        if (!v.is_number()) {
            fail(key, "expected a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            fail(key, "expected a finite number");
        }
        return x;
    }
    [[nodiscard]] double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    [[nodiscard]] std::uint64_t unsigned_integer(const std::string& key) const {
        const json& v = get(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            fail(key, "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }
    [[nodiscard]] std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? unsigned_integer(key) : fallback;
    }

    [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json& v = get(key);
        if (!v.is_string()) {
            fail(key, "expected a string");
        }
        return v.get<std::string>();
    }

    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json& v = get(key);
        if (!v.is_boolean()) {
            fail(key, "expected true or false");
        }
        return v.get<bool>();
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key) const {
        const json& v = get(key);
        if (!v.is_array()) {
            fail(key, "expected an array of numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                fail(key + "[" + std::to_string(i) + "]", "expected a finite number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    [[nodiscard]] const json& get(const std::string& key) const {
        if (!node_.contains(key)) {
            fail(key, "missing key");
        }
        return node_.at(key);
    }

    [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& node_;
    std::string path_;
};

}  // namespace

ExperimentConfig parse_config(const json& j) {
    const Section root(j, "");
    root.allow({"intensity", "partition", "drift", "cogarch", "run", "analysis"});
    ExperimentConfig c;

    {
        const Section s = root.child("intensity");
        s.allow({"form", "a", "b", "tau", "rate", "breaks", "rates"});
        c.intensity.form = s.string("form", "cosine");
        c.intensity.tau = s.number("tau");
        if (!(c.intensity.tau > 0.0)) {
            s.fail("tau", "must be positive");
        }
        if (c.intensity.form == "cosine") {
            c.intensity.a = s.number("a");
            c.intensity.b = s.number("b", 0.0);
            if (c.intensity.a < std::abs(c.intensity.b)) {
                s.fail("a", "intensity must be non-negative: need a >= |b|");
            }
        } else if (c.intensity.form == "constant") {
            c.intensity.rate = s.number("rate");
            if (c.intensity.rate < 0.0) {
                s.fail("rate", "must be non-negative");
            }
        } else if (c.intensity.form == "piecewise") {
            c.intensity.breaks = s.numbers("breaks");
            c.intensity.rates = s.numbers("rates");
            if (c.intensity.breaks.size() != c.intensity.rates.size() || c.intensity.breaks.empty()) {
                s.fail("rates", "must have the same non-zero length as breaks");
            }
        } else {
            s.fail("form", "expected cosine, constant or piecewise");
        }
    }

    {
        const Section s = root.child("partition");
        s.allow({"lengths", "laws"});
        c.season_lengths = s.numbers("lengths");
        const json& laws = s.get("laws");
        if (!laws.is_array()) {
            s.fail("laws", "expected an array of {type, mu, sigma2}");
        }
        for (std::size_t i = 0; i < laws.size(); ++i) {
            const Section l(laws[i], s.join("laws[" + std::to_string(i) + "]"));
            l.allow({"type", "mu", "sigma2"});
            LawConfig law;
            law.type = l.string("type", "normal");
            law.mu = l.number("mu");
            law.sigma2 = l.number("sigma2", 0.0);
            if (law.sigma2 < 0.0) {
                l.fail("sigma2", "must be non-negative");
            }
            if (law.type != "normal" && law.type != "point_mass" && law.type != "uniform") {
                l.fail("type", "unknown jump law '" + law.type + "' (expected normal, point_mass or uniform)");
            }
            c.laws.push_back(law);
        }
        if (c.season_lengths.size() != c.laws.size()) {
            s.fail("laws", "must have one entry per season length (" + std::to_string(c.season_lengths.size()) + ")");
        }
        double total = 0.0;
        for (double len : c.season_lengths) {
            if (!(len > 0.0)) {
                s.fail("lengths", "season lengths must be positive");
            }
            total += len;
        }
        if (std::abs(total - c.intensity.tau) > 1e-12 * c.intensity.tau) {
            s.fail("lengths", "must sum to intensity.tau");
        }
    }

    if (root.has("drift")) {
        const Section s = root.child("drift");
        s.allow({"form", "amplitude"});
        c.drift.form = s.string("form", "zero");
        if (c.drift.form == "sine") {
            c.drift.amplitude = s.number("amplitude");
        } else if (c.drift.form != "zero") {
            s.fail("form", "expected zero or sine");
        }
    }

    {
        const Section s = root.child("cogarch");
        s.allow({"p", "q", "alpha0", "alpha", "beta", "y0"});
        c.cogarch.alpha0 = s.number("alpha0");
        c.cogarch.alpha = s.numbers("alpha");
        c.cogarch.beta = s.numbers("beta");
        c.cogarch.p = static_cast<int>(s.unsigned_integer("p", c.cogarch.alpha.size()));
        c.cogarch.q = static_cast<int>(s.unsigned_integer("q", c.cogarch.beta.size()));
        if (static_cast<std::size_t>(c.cogarch.p) != c.cogarch.alpha.size()) {
            s.fail("alpha", "must have p = " + std::to_string(c.cogarch.p) + " entries");
        }
        if (static_cast<std::size_t>(c.cogarch.q) != c.cogarch.beta.size()) {
            s.fail("beta", "must have q = " + std::to_string(c.cogarch.q) + " entries");
        }
        if (c.cogarch.q < 1 || c.cogarch.p < 1 || c.cogarch.p > c.cogarch.q) {
            s.fail("p", "require 1 <= p <= q");
        }
        if (!(c.cogarch.alpha0 > 0.0)) {
            s.fail("alpha0", "must be positive");
        }
        if (s.has("y0")) {
            c.cogarch.y0 = s.numbers("y0");
            if (c.cogarch.y0.size() != static_cast<std::size_t>(c.cogarch.q)) {
                s.fail("y0", "must have q = " + std::to_string(c.cogarch.q) + " entries");
            }
        }
    }

    {
        const Section s = root.child("run");
        s.allow({"horizon_periods", "h", "seed", "replicates", "center_jumps"});
        c.run.horizon_periods = s.number("horizon_periods");
        c.run.h = s.number("h", 1.0);
        c.run.seed = s.unsigned_integer("seed", 1);
        c.run.replicates = s.unsigned_integer("replicates", 2000);
        c.run.center_jumps = s.boolean("center_jumps", false);
        if (!(c.run.horizon_periods > 0.0)) {
            s.fail("horizon_periods", "must be positive");
        }
        if (!(c.run.h > 0.0)) {
            s.fail("h", "must be positive");
        }
    }

    if (root.has("analysis")) {
        const Section s = root.child("analysis");
        s.allow({"M", "alpha", "expected_period", "remove_periodic_mean", "norm", "lyapunov_periods",
                 "lyapunov_replicates"});
        c.analysis.M = s.unsigned_integer("M", 2);
        c.analysis.alpha = s.number("alpha", 0.05);
        if (s.has("expected_period")) {
            c.analysis.expected_period = s.unsigned_integer("expected_period");
        }
        c.analysis.remove_periodic_mean = s.boolean("remove_periodic_mean", true);
        c.analysis.norm = s.string("norm", "2");
        c.analysis.lyapunov_periods = s.unsigned_integer("lyapunov_periods", 20);
        c.analysis.lyapunov_replicates = s.unsigned_integer("lyapunov_replicates", 200);
        if (c.analysis.M < 2 || c.analysis.M % 2 != 0) {
            s.fail("M", "must be even and at least 2");
        }
        if (!(c.analysis.alpha > 0.0 && c.analysis.alpha < 1.0)) {
            s.fail("alpha", "must lie in (0, 1)");
        }
        try {
            (void)parse_norm_index(c.analysis.norm);
        } catch (const ConfigError&) {
            s.fail("norm", "must be \"1\", \"2\" or \"inf\"");
        }
        if (c.analysis.expected_period) {
            const double ratio = c.intensity.tau / c.run.h;
            if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
                s.fail("expected_period", "run.h must divide intensity.tau when a period is expected");
            }
        }
    }

    // build once so model-level errors surface at load time
    (void)c.model(false);
    (void)c.params();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
    json j;
    json& in = j["intensity"];
    in["form"] = c.intensity.form;
    in["tau"] = c.intensity.tau;
    if (c.intensity.form == "cosine") {
        in["a"] = c.intensity.a;
        in["b"] = c.intensity.b;
    } else if (c.intensity.form == "constant") {
        in["rate"] = c.intensity.rate;
    } else {
        in["breaks"] = c.intensity.breaks;
        in["rates"] = c.intensity.rates;
    }
    j["partition"]["lengths"] = c.season_lengths;
    json laws = json::array();
    for (const auto& l : c.laws) {
        laws.push_back({{"type", l.type}, {"mu", l.mu}, {"sigma2", l.sigma2}});
    }
    j["partition"]["laws"] = laws;
    j["drift"]["form"] = c.drift.form;
    if (c.drift.form == "sine") {
        j["drift"]["amplitude"] = c.drift.amplitude;
    }
    json& cg = j["cogarch"];
    cg["p"] = c.cogarch.p;
    cg["q"] = c.cogarch.q;
    cg["alpha0"] = c.cogarch.alpha0;
    cg["alpha"] = c.cogarch.alpha;
    cg["beta"] = c.cogarch.beta;
    if (!c.cogarch.y0.empty()) {
        cg["y0"] = c.cogarch.y0;
    }
    json& run = j["run"];
    run["horizon_periods"] = c.run.horizon_periods;
    run["h"] = c.run.h;
    run["seed"] = c.run.seed;
    run["replicates"] = c.run.replicates;
    run["center_jumps"] = c.run.center_jumps;
    json& an = j["analysis"];
    an["M"] = c.analysis.M;
    an["alpha"] = c.analysis.alpha;
    if (c.analysis.expected_period) {
        an["expected_period"] = *c.analysis.expected_period;
    }
    an["remove_periodic_mean"] = c.analysis.remove_periodic_mean;
    an["norm"] = c.analysis.norm;
    an["lyapunov_periods"] = c.analysis.lyapunov_periods;
    an["lyapunov_replicates"] = c.analysis.lyapunov_replicates;
    return j;
}

std::string config_digest(const ExperimentConfig& config) {
    const std::uint64_t h = fnv1a64(to_json(config).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SemiLevyModel ExperimentConfig::model() const {
    return model(run.center_jumps);
}

SemiLevyModel ExperimentConfig::model(bool centered) const {
    const double tau = intensity.tau;
    PeriodicIntensity lambda = intensity.form == "cosine"     ? PeriodicIntensity::cosine(intensity.a, intensity.b, tau)
                               : intensity.form == "constant" ? PeriodicIntensity::constant(intensity.rate, tau)
                                                              : PeriodicIntensity::piecewise(tau, intensity.breaks, intensity.rates);
    std::vector<JumpLaw> jl;
    for (const auto& l : laws) {
        JumpLaw law = JumpLaw::parse(l.type, l.mu, l.sigma2);
        jl.push_back(centered ? law.centered() : law);
    }
    SeasonPartition partition(season_lengths, std::move(jl));
    const DriftFunction d = drift.form == "sine" ? DriftFunction::sine(drift.amplitude, tau) : DriftFunction::zero();
    return SemiLevyModel(std::move(lambda), std::move(partition), d);
}

CogarchParams ExperimentConfig::params() const {
    return CogarchParams::make(cogarch.alpha0, cogarch.alpha, cogarch.beta);
}

Eigen::VectorXd ExperimentConfig::y0() const {
    if (cogarch.y0.empty()) {
        return Eigen::VectorXd::Zero(cogarch.q);
    }
    return Eigen::Map<const Eigen::VectorXd>(cogarch.y0.data(), static_cast<Eigen::Index>(cogarch.y0.size()));
}

NormIndex ExperimentConfig::norm() const {
    return parse_norm_index(analysis.norm);
}

std::optional<std::size_t> ExperimentConfig::removal_period() const {
    if (!analysis.remove_periodic_mean) {
        return std::nullopt;
    }
    if (analysis.expected_period) {
        return analysis.expected_period;
    }
    const double ratio = intensity.tau / run.h;
    const double rounded = std::round(ratio);
    if (rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * ratio) {
        return static_cast<std::size_t>(rounded);
    }
    return std::nullopt;
}

ExperimentConfig builtin_example_config() {
    ExperimentConfig c;
    c.intensity.form = "cosine";
    c.intensity.a = 4.0;
    c.intensity.b = 1.0;
    c.intensity.tau = 12.0;
    c.season_lengths = {2.0, 2.0, 2.0, 3.0, 3.0};
    c.laws = {{"normal", 3.0, 1.0}, {"normal", 0.0, 1.0}, {"normal", 1.25, 1.25}, {"normal", 4.0, 1.0},
              {"normal", 0.0, 1.5}};
    c.cogarch.p = 1;
    c.cogarch.q = 3;
    c.cogarch.alpha0 = 1.0;
    c.cogarch.alpha = {0.03};
    c.cogarch.beta = {5.0, 9.0, 5.0};
    c.cogarch.y0 = {8.3580, 2.3377, 0.9040};
    c.run.horizon_periods = 40.0;
    c.run.h = 1.0;
    c.run.seed = 20240517;
    c.run.replicates = 2000;
    c.analysis.M = 240;
    c.analysis.alpha = 0.05;
    c.analysis.expected_period = 12;
    return c;
}

}  // namespace pergarch
