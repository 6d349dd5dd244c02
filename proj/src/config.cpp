#include "mvsde/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mvsde/model.hpp"

namespace mvsde {
namespace {

using nlohmann::json;

/// Line of the first occurrence of "key" in the source, or 0.
std::size_t line_of(std::string_view text, const std::string& key) {
    const std::string needle = "\"" + key + "\"";
    const auto pos = text.find(needle);
    if (pos == std::string_view::npos) return 0;
    return static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n')) + 1;
}

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::size_t line = line_of(text_, key);
        std::string msg = line ? "line " + std::to_string(line) + ": " : std::string();
        throw ConfigError(msg + "'" + key + "' " + what);
    }

    void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                        const std::string& where) const {
        for (const auto& [key, value] : obj.items())
            if (!allowed.count(key))
                fail(key, "is not a recognised key" + (where.empty() ? "" : " in '" + where + "'"));
    }

    std::size_t positive_int(const json& v, const std::string& key) const {
        if (!v.is_number_integer() || v.get<long long>() < 1)
            fail(key, "must be a positive integer");
        return v.get<std::size_t>();
    }

    double number(const json& v, const std::string& key) const {
        if (!v.is_number()) fail(key, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        return x;
    }

    bool boolean(const json& v, const std::string& key) const {
        if (!v.is_boolean()) fail(key, "must be true or false");
        return v.get<bool>();
    }

    std::string string(const json& v, const std::string& key) const {
        if (!v.is_string()) fail(key, "must be a string");
        return v.get<std::string>();
    }

    std::vector<std::size_t> int_list(const json& v, const std::string& key) const {
        if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of positive integers");
        std::vector<std::size_t> out;
        for (const auto& e : v) out.push_back(positive_int(e, key));
        return out;
    }

    std::map<std::string, double> params(const json& v, const std::string& key) const {
        if (!v.is_object()) fail(key, "must be an object of numbers");
        std::map<std::string, double> out;
        for (const auto& [name, value] : v.items()) out[name] = number(value, name);
        return out;
    }

    std::string_view text() const { return text_; }

private:
    std::string_view text_;
};

InitialLaw parse_initial(const Reader& rd, const json& v) {
    if (!v.is_object()) rd.fail("initial", "must be an object");
    rd.reject_unknown(v, {"kind", "params"}, "initial");
    if (!v.contains("kind")) rd.fail("initial", "needs a 'kind'");
    const std::string kind = rd.string(v["kind"], "kind");
    auto p = v.contains("params") ? rd.params(v["params"], "params") : std::map<std::string, double>{};
    auto take = [&](const std::string& name, double fallback) {
        auto it = p.find(name);
        if (it == p.end()) return fallback;
        const double x = it->second;
        p.erase(it);
        return x;
    };
    InitialLaw law;
    if (kind == "constant") {
        law = InitialLaw::constant(take("value", 0.0));
    } else if (kind == "gaussian") {
        const double m = take("mean", 0.0);
        law = InitialLaw::gaussian(m, take("std", 1.0));
        if (law.b < 0.0) rd.fail("std", "must be >= 0");
    } else if (kind == "uniform") {
        const double lo = take("low", 0.0);
        law = InitialLaw::uniform(lo, take("high", 1.0));
        if (law.b < law.a) rd.fail("high", "must be >= low");
    } else {
        rd.fail("kind", "must be \"constant\", \"gaussian\" or \"uniform\"");
    }
    if (!p.empty()) rd.fail(p.begin()->first, "is not a parameter of initial kind '" + kind + "'");
    return law;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    Reader rd(text);
    if (!doc.is_object()) throw ConfigError("line 1: configuration must be a JSON object");
    rd.reject_unknown(doc,
                      {"model", "N", "n", "n_fine", "T", "scheme", "taming", "seed", "initial",
                       "output", "levels", "n_ref", "repetitions", "error_metric", "p",
                       "particle_counts", "lambda1", "lambda2"},
                      "");

    ExperimentConfig cfg;
    if (!doc.contains("model")) throw ConfigError("missing required key 'model'");
    {
        const json& m = doc["model"];
        if (!m.is_object()) rd.fail("model", "must be an object");
        rd.reject_unknown(m, {"name", "params"}, "model");
        if (!m.contains("name")) rd.fail("model", "needs a 'name'");
        cfg.model_name = rd.string(m["name"], "name");
        if (m.contains("params")) cfg.model_params = rd.params(m["params"], "params");
        try {
            (void)make_model(cfg.model_name, cfg.model_params);
        } catch (const std::invalid_argument& e) {
            rd.fail("model", std::string("is invalid: ") + e.what());
        }
    }

    if (!doc.contains("N")) throw ConfigError("missing required key 'N'");
    cfg.sim.particles = rd.positive_int(doc["N"], "N");
    if (doc.contains("n")) {
        cfg.sim.steps = rd.positive_int(doc["n"], "n");
        cfg.has_steps = true;
    }
    if (doc.contains("n_fine")) cfg.sim.fine_steps = rd.positive_int(doc["n_fine"], "n_fine");
    if (doc.contains("T")) {
        cfg.sim.horizon = rd.number(doc["T"], "T");
        if (!(cfg.sim.horizon > 0.0)) rd.fail("T", "must be > 0");
    }
    if (doc.contains("scheme")) {
        const std::string s = rd.string(doc["scheme"], "scheme");
        if (s == "euler")
            cfg.sim.step.scheme = Scheme::euler;
        else if (s == "milstein")
            cfg.sim.step.scheme = Scheme::milstein;
        else
            rd.fail("scheme", "must be \"euler\" or \"milstein\"");
    }
    if (doc.contains("taming")) cfg.sim.step.taming = rd.boolean(doc["taming"], "taming");
    if (doc.contains("lambda1")) cfg.sim.step.lambda1 = rd.boolean(doc["lambda1"], "lambda1");
    if (doc.contains("lambda2")) cfg.sim.step.lambda2 = rd.boolean(doc["lambda2"], "lambda2");
    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() &&
                                       s.get<long long>() < 0))
            rd.fail("seed", "must be a non-negative integer");
        cfg.sim.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("initial")) cfg.sim.initial = parse_initial(rd, doc["initial"]);
    if (doc.contains("output")) {
        const json& o = doc["output"];
        if (!o.is_object()) rd.fail("output", "must be an object");
        rd.reject_unknown(o, {"path", "stride"}, "output");
        if (o.contains("path")) cfg.output_path = rd.string(o["path"], "path");
        if (o.contains("stride")) cfg.sim.stride = rd.positive_int(o["stride"], "stride");
    }
    if (doc.contains("levels")) cfg.levels = rd.int_list(doc["levels"], "levels");
    if (doc.contains("n_ref")) cfg.reference_level = rd.positive_int(doc["n_ref"], "n_ref");
    if (doc.contains("repetitions"))
        cfg.repetitions = rd.positive_int(doc["repetitions"], "repetitions");
    if (doc.contains("error_metric")) {
        const std::string s = rd.string(doc["error_metric"], "error_metric");
        if (s == "terminal")
            cfg.error_metric = ErrorMetric::terminal;
        else if (s == "sup")
            cfg.error_metric = ErrorMetric::sup;
        else
            rd.fail("error_metric", "must be \"terminal\" or \"sup\"");
    }
    if (doc.contains("p")) {
        cfg.moment_order = rd.number(doc["p"], "p");
        if (cfg.moment_order < 2.0) rd.fail("p", "must be >= 2");
    }
    if (doc.contains("particle_counts"))
        cfg.particle_counts = rd.int_list(doc["particle_counts"], "particle_counts");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void ExperimentConfig::require(Workflow workflow) const {
    auto need_steps = [&] {
        if (!has_steps) throw ConfigError("missing required key 'n'");
    };
    auto check_sim = [&](const SimConfig& s) {
        try {
            s.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    };
    switch (workflow) {
        case Workflow::simulate:
        case Workflow::moments:
            need_steps();
            check_sim(sim);
            break;
        case Workflow::chaos: {
            need_steps();
            if (particle_counts.size() < 2)
                throw ConfigError("'particle_counts' needs at least two entries for chaos");
            if (!std::is_sorted(particle_counts.begin(), particle_counts.end()))
                throw ConfigError("'particle_counts' must be non-decreasing");
            check_sim(sim);
            break;
        }
        case Workflow::converge: {
            if (levels.size() < 2) throw ConfigError("'levels' needs at least two entries for converge");
            if (reference_level == 0) throw ConfigError("missing required key 'n_ref'");
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (reference_level % levels[i] != 0)
                    throw ConfigError("level " + std::to_string(levels[i]) +
                                      " does not divide n_ref=" + std::to_string(reference_level));
                if (i > 0 && levels[i] <= levels[i - 1])
                    throw ConfigError("'levels' must be strictly increasing");
            }
            if (reference_level < 16 * levels.back())
                throw ConfigError("'n_ref' must be at least 16 times the largest level");
            SimConfig s = sim;
            s.steps = reference_level;
            s.fine_steps = reference_level;
            check_sim(s);
            break;
        }
        case Workflow::validate:
            break;
    }
}

}  // namespace mvsde
