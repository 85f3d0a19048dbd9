#include "dosefind/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <fstream>
#include <iostream>
#include <memory>

#include "dosefind/config.hpp"
#include "dosefind/crm.hpp"
#include "dosefind/http_api.hpp"
#include "dosefind/keyboard.hpp"
#include "dosefind/report.hpp"
#include "dosefind/schedule.hpp"
#include "dosefind/trialsvc.hpp"

namespace dosefind::cli {

namespace {

std::string join_sizes(const std::vector<int>& sizes) {
    std::string s;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        s += (i ? "," : "") + std::to_string(sizes[i]);
    }
    return s;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        throw ConfigError("", "cannot write '" + path + "'");
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dose-finding designs with growing cohort sizes"};
    app.require_subcommand(1);

    auto* schedule_cmd = app.add_subcommand("schedule", "Print a cohort-size schedule");
    int n = 0;
    std::string mode = "unequal";
    int cohort = 3;
    schedule_cmd->add_option("--n", n, "Total sample size")->required();
    schedule_cmd->add_option("--mode", mode, "unequal or fixed")
        ->check(CLI::IsMember({"unequal", "fixed"}));
    schedule_cmd->add_option("--cohort", cohort, "Cohort size for --mode fixed");

    auto* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo study from a JSON config");
    std::string config_path;
    std::string csv_path;
    std::string format_override;
    int workers = -1;
    simulate_cmd->add_option("config", config_path, "Config file")->required();
    simulate_cmd->add_option("--csv", csv_path, "Also write CSV results here");
    simulate_cmd->add_option("--format", format_override, "Override the config's output format")
        ->check(CLI::IsMember({"markdown", "csv", "json"}));
    simulate_cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");

    auto* compare_cmd = app.add_subcommand("compare", "Compare two configs scenario by scenario");
    std::string config_a;
    std::string config_b;
    compare_cmd->add_option("a", config_a, "Baseline config")->required();
    compare_cmd->add_option("b", config_b, "Alternative config")->required();
    compare_cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");

    auto* table_cmd = app.add_subcommand("keyboard-table", "Export the Keyboard (n, y) decision table");
    double target = 0.3;
    std::vector<double> interval{0.25, 0.35};
    int max_n = 30;
    bool eliminate = false;
    double threshold = 0.95;
    table_cmd->add_option("--target", target, "Target toxicity");
    table_cmd->add_option("--interval", interval, "Target key bounds")->expected(2);
    table_cmd->add_option("--max-n", max_n, "Largest per-dose sample size");
    table_cmd->add_flag("--eliminate", eliminate, "Enable overdose elimination (DU rows)");
    table_cmd->add_option("--threshold", threshold, "Elimination posterior threshold");

    auto* serve_cmd = app.add_subcommand("serve", "Run the trial-conduct REST service");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "sessions";
    std::string cors;
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--port", port, "Listen port");
    serve_cmd->add_option("--data-dir", data_dir, "Event-log directory");
    serve_cmd->add_option("--cors-origin", cors, "Allowed browser origin for the dashboard");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (*schedule_cmd) {
            const CohortSchedule s =
                mode == "unequal" ? build_unequal_schedule(n) : build_fixed_schedule(n, cohort);
            out << join_sizes(s.sizes) << " (" << s.cohorts() << " cohorts)\n";
            return kOk;
        }
        if (*simulate_cmd) {
            SimConfig cfg = load_sim_config(config_path);
            if (workers >= 0) cfg.workers = static_cast<unsigned>(workers);
            if (format_override == "markdown") cfg.output = OutputFormat::Markdown;
            if (format_override == "csv") cfg.output = OutputFormat::Csv;
            if (format_override == "json") cfg.output = OutputFormat::Json;
            const auto results = simulate(cfg);
            out << format_results(cfg, results);
            if (!csv_path.empty()) {
                write_file(csv_path, format_csv(results));
            }
            return kOk;
        }
        if (*compare_cmd) {
            SimConfig a = load_sim_config(config_a);
            SimConfig b = load_sim_config(config_b);
            check_comparable(a, b);
            if (workers >= 0) a.workers = b.workers = static_cast<unsigned>(workers);
            const auto rows = compare_results(simulate(a), simulate(b));
            out << format_comparison(a, b, rows);
            return kOk;
        }
        if (*table_cmd) {
            KeyboardConfig kb = KeyboardConfig::with_interval(target, interval.at(0), interval.at(1));
            kb.elimination_enabled = eliminate;
            kb.elimination_threshold = threshold;
            kb.validate();
            out << DecisionTable(kb, max_n).to_csv();
            return kOk;
        }
        if (*serve_cmd) {
            trialsvc::TrialService service(std::make_shared<trialsvc::FileEventStore>(data_dir));
            httplib::Server server;
            trialsvc::mount_routes(server, service, {cors});
            err << "listening on http://" << host << ':' << port << " (data: " << data_dir << ")\n";
            if (!server.listen(host, port)) {
                err << "error: cannot listen on " << host << ':' << port << '\n';
                return kConfigError;
            }
            return kOk;
        }
    } catch (const QuadratureError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::domain_error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kOk;
}

}  // namespace dosefind::cli
