#include "dosefind/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace dosefind {

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void expect_object(const json& j, const std::string& path,
                   std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ConfigError(path, "expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return key == k; });
        if (!known) {
            throw ConfigError(join(path, key), "unknown field");
        }
    }
}

const json& require(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError(join(path, key), "missing required field");
    }
    return *it;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) {
        throw ConfigError(path, "expected a number");
    }
    return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
        throw ConfigError(path, "expected an integer");
    }
    return v.get<std::int64_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) {
        throw ConfigError(path, "expected a string");
    }
    return v.get<std::string>();
}

std::vector<double> as_number_list(const json& v, const std::string& path) {
    if (!v.is_array()) {
        throw ConfigError(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::pair<double, double> as_pair(const json& v, const std::string& path) {
    const std::vector<double> xs = as_number_list(v, path);
    if (xs.size() != 2) {
        throw ConfigError(path, "expected exactly two numbers");
    }
    return {xs[0], xs[1]};
}

template <class F>
void checked(const std::string& path, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

}  // namespace

double DesignSpec::target() const {
    return family == DesignFamily::Crm ? crm.target : keyboard.target;
}

std::string DesignSpec::family_name() const {
    return family == DesignFamily::Crm ? "crm" : "keyboard";
}

std::unique_ptr<Design> DesignSpec::make_design(int table_max_n) const {
    if (family == DesignFamily::Crm) {
        return std::make_unique<CrmDesign>(crm);
    }
    return std::make_unique<KeyboardDesign>(keyboard, doses, table_max_n);
}

DesignSpec DesignSpec::from_json(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw ConfigError(path, "expected an object");
    }
    DesignSpec spec;
    const std::string family = as_string(require(j, path, "family"), join(path, "family"));
    if (family == "crm") {
        expect_object(j, path, {"family", "target", "skeleton", "prior_variance", "estimator", "doses"});
        spec.family = DesignFamily::Crm;
        spec.crm.target = as_number(require(j, path, "target"), join(path, "target"));
        spec.crm.skeleton = as_number_list(require(j, path, "skeleton"), join(path, "skeleton"));
        if (j.contains("prior_variance")) {
            spec.crm.prior_variance = as_number(j["prior_variance"], join(path, "prior_variance"));
        }
        if (j.contains("estimator")) {
            const std::string e = as_string(j["estimator"], join(path, "estimator"));
            if (e == "plug-in") {
                spec.crm.estimator = CrmEstimator::PlugIn;
            } else if (e == "posterior-mean") {
                spec.crm.estimator = CrmEstimator::PosteriorMean;
            } else {
                throw ConfigError(join(path, "estimator"), "expected \"plug-in\" or \"posterior-mean\"");
            }
        }
        checked(path, [&] { spec.crm.validate(); });
        spec.doses = spec.crm.skeleton.size();
        if (j.contains("doses") &&
            as_integer(j["doses"], join(path, "doses")) != static_cast<std::int64_t>(spec.doses)) {
            throw ConfigError(join(path, "doses"), "does not match skeleton length");
        }
    } else if (family == "keyboard") {
        expect_object(j, path, {"family", "target", "interval", "doses", "prior", "selection_prior",
                                "elimination"});
        spec.family = DesignFamily::Keyboard;
        const double target = as_number(require(j, path, "target"), join(path, "target"));
        const auto [lo, hi] = as_pair(require(j, path, "interval"), join(path, "interval"));
        spec.interval_lower = lo;
        spec.interval_upper = hi;
        const std::int64_t doses = as_integer(require(j, path, "doses"), join(path, "doses"));
        if (doses < 1) {
            throw ConfigError(join(path, "doses"), "must be at least 1");
        }
        spec.doses = static_cast<std::size_t>(doses);
        KeyboardConfig& kb = spec.keyboard;
        kb.target = target;
        checked(join(path, "interval"), [&] { kb.keyset = build_keys(lo, hi); });
        if (j.contains("prior")) {
            std::tie(kb.prior_alpha, kb.prior_beta) = as_pair(j["prior"], join(path, "prior"));
        }
        if (j.contains("selection_prior")) {
            std::tie(kb.selection_prior_alpha, kb.selection_prior_beta) =
                as_pair(j["selection_prior"], join(path, "selection_prior"));
        }
        if (j.contains("elimination")) {
            const std::string ep = join(path, "elimination");
            const json& e = j["elimination"];
            expect_object(e, ep, {"enabled", "threshold"});
            if (e.contains("enabled")) {
                if (!e["enabled"].is_boolean()) {
                    throw ConfigError(join(ep, "enabled"), "expected a boolean");
                }
                kb.elimination_enabled = e["enabled"].get<bool>();
            }
            if (e.contains("threshold")) {
                kb.elimination_threshold = as_number(e["threshold"], join(ep, "threshold"));
            }
        }
        checked(path, [&] { kb.validate(); });
    } else {
        throw ConfigError(join(path, "family"), "expected \"crm\" or \"keyboard\"");
    }
    return spec;
}

json DesignSpec::to_json() const {
    if (family == DesignFamily::Crm) {
        return json{{"family", "crm"},
                    {"target", crm.target},
                    {"skeleton", crm.skeleton},
                    {"prior_variance", crm.prior_variance},
                    {"estimator", crm.estimator == CrmEstimator::PlugIn ? "plug-in" : "posterior-mean"}};
    }
    return json{{"family", "keyboard"},
                {"target", keyboard.target},
                {"interval", {interval_lower, interval_upper}},
                {"doses", doses},
                {"prior", {keyboard.prior_alpha, keyboard.prior_beta}},
                {"selection_prior", {keyboard.selection_prior_alpha, keyboard.selection_prior_beta}},
                {"elimination",
                 {{"enabled", keyboard.elimination_enabled},
                  {"threshold", keyboard.elimination_threshold}}}};
}

CohortSchedule ScheduleSpec::build() const {
    return unequal ? build_unequal_schedule(total) : build_fixed_schedule(total, cohort_size);
}

std::string ScheduleSpec::label() const {
    return unequal ? "unequal" : "fixed-" + std::to_string(cohort_size);
}

ScheduleSpec ScheduleSpec::from_json(const json& j, const std::string& path) {
    expect_object(j, path, {"mode", "n", "cohort"});
    ScheduleSpec s;
    const std::string mode = as_string(require(j, path, "mode"), join(path, "mode"));
    const std::int64_t n = as_integer(require(j, path, "n"), join(path, "n"));
    if (n < 1 || n > 100000) {
        throw ConfigError(join(path, "n"), "must lie in [1, 100000]");
    }
    s.total = static_cast<int>(n);
    if (mode == "unequal") {
        s.unequal = true;
        if (j.contains("cohort")) {
            throw ConfigError(join(path, "cohort"), "only valid with mode \"fixed\"");
        }
    } else if (mode == "fixed") {
        s.unequal = false;
        const std::int64_t c = as_integer(require(j, path, "cohort"), join(path, "cohort"));
        if (c < 1 || c > n) {
            throw ConfigError(join(path, "cohort"), "must lie in [1, n]");
        }
        s.cohort_size = static_cast<int>(c);
    } else {
        throw ConfigError(join(path, "mode"), "expected \"unequal\" or \"fixed\"");
    }
    return s;
}

json ScheduleSpec::to_json() const {
    json j{{"mode", unequal ? "unequal" : "fixed"}, {"n", total}};
    if (!unequal) {
        j["cohort"] = cohort_size;
    }
    return j;
}

SimConfig SimConfig::from_json(const json& j) {
    expect_object(j, "", {"design", "schedule", "scenarios", "replications", "master_seed", "output",
                          "workers"});
    SimConfig cfg;
    cfg.design = DesignSpec::from_json(require(j, "", "design"));
    cfg.schedule = ScheduleSpec::from_json(require(j, "", "schedule"));

    const json& sc = require(j, "", "scenarios");
    if (sc.is_string()) {
        if (sc.get<std::string>() != "paper6") {
            throw ConfigError("scenarios", "expected \"paper6\" or a list of scenarios");
        }
        cfg.builtin_scenarios = true;
        cfg.scenarios = dosefind::builtin_scenarios();
    } else if (sc.is_array()) {
        if (sc.empty()) {
            throw ConfigError("scenarios", "list is empty");
        }
        for (std::size_t i = 0; i < sc.size(); ++i) {
            const std::string p = "scenarios[" + std::to_string(i) + "]";
            expect_object(sc[i], p, {"name", "true_tox", "mtd"});
            Scenario s;
            s.name = as_string(require(sc[i], p, "name"), p + ".name");
            s.true_tox = as_number_list(require(sc[i], p, "true_tox"), p + ".true_tox");
            if (sc[i].contains("mtd") && !sc[i]["mtd"].is_null()) {
                s.mtd_index = static_cast<int>(as_integer(sc[i]["mtd"], p + ".mtd"));
            }
            cfg.scenarios.push_back(std::move(s));
        }
    } else {
        throw ConfigError("scenarios", "expected \"paper6\" or a list of scenarios");
    }
    for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
        checked("scenarios[" + std::to_string(i) + "]", [&] {
            cfg.scenarios[i].validate(cfg.design.num_doses(), cfg.design.target());
        });
    }

    const std::int64_t reps = as_integer(require(j, "", "replications"), "replications");
    if (reps < 1) {
        throw ConfigError("replications", "must be at least 1");
    }
    cfg.replications = static_cast<std::uint64_t>(reps);

    const json& seed = require(j, "", "master_seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        throw ConfigError("master_seed", "expected a non-negative integer");
    }
    cfg.master_seed = seed.get<std::uint64_t>();

    if (j.contains("output")) {
        const std::string f = as_string(j["output"], "output");
        if (f == "markdown") {
            cfg.output = OutputFormat::Markdown;
        } else if (f == "csv") {
            cfg.output = OutputFormat::Csv;
        } else if (f == "json") {
            cfg.output = OutputFormat::Json;
        } else {
            throw ConfigError("output", "expected \"markdown\", \"csv\" or \"json\"");
        }
    }
    if (j.contains("workers")) {
        const std::int64_t w = as_integer(j["workers"], "workers");
        if (w < 0) {
            throw ConfigError("workers", "must be non-negative");
        }
        cfg.workers = static_cast<unsigned>(w);
    }
    return cfg;
}

json SimConfig::to_json() const {
    json j{{"design", design.to_json()},
           {"schedule", schedule.to_json()},
           {"replications", replications},
           {"master_seed", master_seed},
           {"output", format_name(output)}};
    if (builtin_scenarios) {
        j["scenarios"] = "paper6";
    } else {
        json list = json::array();
        for (const Scenario& s : scenarios) {
            list.push_back({{"name", s.name},
                            {"true_tox", s.true_tox},
                            {"mtd", s.mtd_index ? json(*s.mtd_index) : json(nullptr)}});
        }
        j["scenarios"] = list;
    }
    if (workers != 0) {
        j["workers"] = workers;
    }
    return j;
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", e.what());
    }
}

SimConfig parse_sim_config(const std::string& text) {
    return SimConfig::from_json(parse_json_text(text));
}

SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_sim_config(buf.str());
}

std::string format_name(OutputFormat f) {
    switch (f) {
        case OutputFormat::Markdown: return "markdown";
        case OutputFormat::Csv: return "csv";
        case OutputFormat::Json: return "json";
    }
    return "markdown";
}

}  // namespace dosefind
