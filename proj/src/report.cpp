#include "dosefind/report.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dosefind {

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::runtime_error("bad number '" + s + "'");
    }
    return v;
}

std::string mtd_label(const Scenario& s) {
    return s.mtd_index ? std::to_string(*s.mtd_index) : "none";
}

}  // namespace

std::vector<ScenarioResult> simulate(const SimConfig& cfg) {
    const CohortSchedule schedule = cfg.schedule.build();
    const auto design = cfg.design.make_design(cfg.schedule.total);
    std::vector<ScenarioResult> out;
    for (const Scenario& s : cfg.scenarios) {
        out.push_back({s, run_batch(*design, s, schedule, cfg.replications, cfg.master_seed,
                                    cfg.workers)});
    }
    return out;
}

std::string format_markdown(const SimConfig& cfg, const std::vector<ScenarioResult>& results) {
    const CohortSchedule schedule = cfg.schedule.build();
    std::ostringstream out;
    out << "# " << cfg.design.family_name() << ", " << cfg.schedule.label() << " cohorts, N = "
        << cfg.schedule.total << "\n\n";
    out << "Cohort sizes: ";
    for (std::size_t i = 0; i < schedule.sizes.size(); ++i) {
        out << (i ? "," : "") << schedule.sizes[i];
    }
    out << " (" << schedule.cohorts() << " cohorts); " << cfg.replications
        << " replications, master seed " << cfg.master_seed << "\n";

    for (const ScenarioResult& r : results) {
        const std::size_t J = r.scenario.true_tox.size();
        out << "\n## " << r.scenario.name << " (MTD: dose " << mtd_label(r.scenario) << ")\n\n";
        out << "| |";
        for (std::size_t j = 1; j <= J; ++j) out << ' ' << j << " |";
        out << " Overdose |\n|---|";
        for (std::size_t j = 0; j <= J; ++j) out << "---:|";
        out << "\n| True toxicity |";
        for (double p : r.scenario.true_tox) out << ' ' << fixed2(p) << " |";
        out << " |\n| Selection (%) |";
        for (double p : r.summary.selection_pct) out << ' ' << fixed2(p) << " |";
        out << ' '
            << (r.summary.overdose_selection_pct ? fixed2(*r.summary.overdose_selection_pct) : "-")
            << " |\n| Patients (mean) |";
        for (double m : r.summary.mean_patients) out << ' ' << fixed2(m) << " |";
        out << ' '
            << (r.summary.overdose_patient_mean ? fixed2(*r.summary.overdose_patient_mean) : "-")
            << " |\n";
        if (r.summary.no_selection_pct > 0.0) {
            out << "\nNo MTD selected (stopped early): " << fixed2(r.summary.no_selection_pct) << "%\n";
        }
    }
    return out.str();
}

std::string format_csv(const std::vector<ScenarioResult>& results) {
    std::ostringstream out;
    out << "scenario,dose,true_tox,selection_pct,mean_patients,overdose_selection_pct,"
           "overdose_patient_mean\n";
    for (const ScenarioResult& r : results) {
        const std::string od_sel =
            r.summary.overdose_selection_pct ? exact(*r.summary.overdose_selection_pct) : "";
        const std::string od_pat =
            r.summary.overdose_patient_mean ? exact(*r.summary.overdose_patient_mean) : "";
        for (std::size_t j = 0; j < r.scenario.true_tox.size(); ++j) {
            out << csv_field(r.scenario.name) << ',' << j + 1 << ',' << exact(r.scenario.true_tox[j])
                << ',' << exact(r.summary.selection_pct[j]) << ','
                << exact(r.summary.mean_patients[j]) << ',' << od_sel << ',' << od_pat << '\n';
        }
    }
    return out.str();
}

std::string format_json(const SimConfig& cfg, const std::vector<ScenarioResult>& results) {
    json out{{"design", cfg.design.to_json()},
             {"schedule", cfg.schedule.to_json()},
             {"cohort_sizes", cfg.schedule.build().sizes},
             {"replications", cfg.replications},
             {"master_seed", cfg.master_seed}};
    json list = json::array();
    for (const ScenarioResult& r : results) {
        const SimSummary& s = r.summary;
        list.push_back({{"name", r.scenario.name},
                        {"true_tox", r.scenario.true_tox},
                        {"mtd", r.scenario.mtd_index ? json(*r.scenario.mtd_index) : json(nullptr)},
                        {"selection_pct", s.selection_pct},
                        {"no_selection_pct", s.no_selection_pct},
                        {"mean_patients", s.mean_patients},
                        {"overdose_selection_pct",
                         s.overdose_selection_pct ? json(*s.overdose_selection_pct) : json(nullptr)},
                        {"overdose_patient_mean",
                         s.overdose_patient_mean ? json(*s.overdose_patient_mean) : json(nullptr)}});
    }
    out["scenarios"] = list;
    return out.dump(2) + "\n";
}

std::string format_results(const SimConfig& cfg, const std::vector<ScenarioResult>& results) {
    switch (cfg.output) {
        case OutputFormat::Markdown: return format_markdown(cfg, results);
        case OutputFormat::Csv: return format_csv(results);
        case OutputFormat::Json: return format_json(cfg, results);
    }
    return format_markdown(cfg, results);
}

std::vector<ScenarioResult> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "scenario,dose,true_tox,selection_pct,mean_patients,overdose_selection_pct,"
                "overdose_patient_mean") {
        throw std::runtime_error("csv: unexpected header");
    }
    std::vector<ScenarioResult> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 7 fields");
        }
        const int dose = std::stoi(f[1]);
        if (out.empty() || out.back().scenario.name != f[0] ||
            dose == 1) {
            if (dose != 1) {
                throw std::runtime_error("csv line " + std::to_string(line_no) +
                                         ": scenario must start at dose 1");
            }
            out.push_back({});
            out.back().scenario.name = f[0];
        }
        ScenarioResult& r = out.back();
        if (static_cast<std::size_t>(dose) != r.scenario.true_tox.size() + 1) {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": doses out of order");
        }
        r.scenario.true_tox.push_back(parse_double(f[2]));
        r.summary.selection_pct.push_back(parse_double(f[3]));
        r.summary.mean_patients.push_back(parse_double(f[4]));
        r.summary.overdose_selection_pct =
            f[5].empty() ? std::nullopt : std::optional<double>(parse_double(f[5]));
        r.summary.overdose_patient_mean =
            f[6].empty() ? std::nullopt : std::optional<double>(parse_double(f[6]));
    }
    return out;
}

std::optional<double> CompareRow::overdose_delta() const {
    if (!overdose_a || !overdose_b) return std::nullopt;
    return *overdose_b - *overdose_a;
}

bool CompareRow::b_safer() const {
    const auto d = overdose_delta();
    return d && *d < 0.0;
}

void check_comparable(const SimConfig& a, const SimConfig& b) {
    if (a.design.family != b.design.family) {
        throw ConfigError("design.family", "configs use different design families");
    }
    if (a.schedule.total != b.schedule.total) {
        throw ConfigError("schedule.n", "configs use different total sample sizes");
    }
    if (a.scenarios.size() != b.scenarios.size()) {
        throw ConfigError("scenarios", "configs use different scenario sets");
    }
    for (std::size_t i = 0; i < a.scenarios.size(); ++i) {
        if (a.scenarios[i].name != b.scenarios[i].name ||
            a.scenarios[i].true_tox != b.scenarios[i].true_tox ||
            a.scenarios[i].mtd_index != b.scenarios[i].mtd_index) {
            throw ConfigError("scenarios[" + std::to_string(i) + "]", "scenarios differ");
        }
    }
}

std::vector<CompareRow> compare_results(const std::vector<ScenarioResult>& a,
                                        const std::vector<ScenarioResult>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("result sets differ in scenario count");
    }
    std::vector<CompareRow> rows;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CompareRow row;
        row.scenario = a[i].scenario.name;
        row.mtd_index = a[i].scenario.mtd_index;
        if (row.mtd_index) {
            row.mtd_selection_a = a[i].summary.selection_pct[*row.mtd_index - 1];
            row.mtd_selection_b = b[i].summary.selection_pct[*row.mtd_index - 1];
        }
        row.overdose_a = a[i].summary.overdose_selection_pct;
        row.overdose_b = b[i].summary.overdose_selection_pct;
        rows.push_back(row);
    }
    return rows;
}

std::string format_comparison(const SimConfig& a, const SimConfig& b,
                              const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "# " << a.design.family_name() << ", N = " << a.schedule.total << ": A = "
        << a.schedule.label() << ", B = " << b.schedule.label() << "\n\n";
    out << "| Scenario | MTD | MTD sel. A (%) | MTD sel. B (%) | Delta (pp) | Overdose A (%) | "
           "Overdose B (%) | Delta (pp) | B better |\n";
    out << "|---|---:|---:|---:|---:|---:|---:|---:|---|\n";
    for (const CompareRow& r : rows) {
        std::string better;
        if (r.b_more_accurate()) better += "accuracy";
        if (r.b_safer()) better += better.empty() ? "overdose" : ", overdose";
        const auto od = r.overdose_delta();
        out << "| " << r.scenario << " | " << (r.mtd_index ? std::to_string(*r.mtd_index) : "-")
            << " | " << fixed2(r.mtd_selection_a) << " | " << fixed2(r.mtd_selection_b) << " | "
            << (r.selection_delta() >= 0 ? "+" : "") << fixed2(r.selection_delta()) << " | "
            << (r.overdose_a ? fixed2(*r.overdose_a) : "-") << " | "
            << (r.overdose_b ? fixed2(*r.overdose_b) : "-") << " | "
            << (od ? (*od >= 0 ? "+" : "") + fixed2(*od) : "-") << " | " << better << " |\n";
    }
    return out.str();
}

}  // namespace dosefind
