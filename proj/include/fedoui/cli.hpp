#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedoui/artifacts.hpp"
#include "fedoui/config.hpp"
#include "fedoui/errors.hpp"
#include "fedoui/harness.hpp"

namespace fedoui {

// exit codes: 0 ok, 2 configuration, 3 data, 4 report, 5 inspect, 1 anything else
namespace exit_code {
constexpr int ok = 0;
constexpr int failure = 1;
constexpr int config = 2;
constexpr int data = 3;
constexpr int report = 4;
constexpr int inspect = 5;
}  // namespace exit_code

namespace detail {

inline std::string default_data_dir() {
    const char* env = std::getenv("FEDOUI_DATA_DIR");
    return env ? env : "data/cifar-10-batches-bin";
}

// a config file may be a flat key=value file or a manifest.json written by
// a previous run; the manifest's resolved_config re-runs bit-identically
inline ExperimentConfig load_config_any(const std::string& path) {
    std::string text = read_file(path);
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j = json::parse(text);
        if (j.contains("resolved_config")) return config_from_json(j["resolved_config"]);
        return config_from_json(j);
    }
    return parse_config_text(text);
}

}  // namespace detail

struct RunOptions {
    std::string config_path;  // empty = defaults
    std::string out_dir = "out";
    std::vector<std::pair<std::string, std::string>> overrides;  // key, value
    std::string command_line;  // recorded in the manifest
};

// executes one experiment and writes rounds.csv, log.json and manifest.json
inline int cmd_run(const RunOptions& opt, std::ostream& err = std::cerr) {
    ExperimentConfig cfg;
    try {
        if (!opt.config_path.empty()) cfg = detail::load_config_any(opt.config_path);
        for (const auto& [k, v] : opt.overrides) apply_config_override(cfg, k, v);
        if (cfg.data_dir.empty()) cfg.data_dir = detail::default_data_dir();
        validate_config(cfg);
    } catch (const config_error& e) {
        err << "fedoui run: " << e.what() << "\n";
        return exit_code::config;
    } catch (const io_error& e) {
        err << "fedoui run: " << e.what() << "\n";
        return exit_code::config;
    }

    try {
        std::filesystem::create_directories(opt.out_dir);
        ExperimentLog log = run_experiment(cfg);

        std::string csv = rounds_csv(log.records);
        std::string log_text = log_to_json(log).dump(2) + "\n";
        write_file(opt.out_dir + "/rounds.csv", csv);
        write_file(opt.out_dir + "/log.json", log_text);
        json manifest = make_manifest(cfg, opt.config_path, opt.out_dir, opt.command_line,
                                      {{"rounds.csv", fnv1a64_hex(csv)},
                                       {"log.json", fnv1a64_hex(log_text)}});
        write_file(opt.out_dir + "/manifest.json", manifest.dump(2) + "\n");
        return exit_code::ok;
    } catch (const io_error& e) {
        err << "fedoui run: " << e.what() << "\n";
        return exit_code::data;
    } catch (const std::exception& e) {
        err << "fedoui run: " << e.what() << "\n";
        return exit_code::failure;
    }
}

// a sweep cell is complete when its manifest exists and every artifact
// checksum still matches
inline bool sweep_cell_complete(const std::string& cell_dir) {
    std::string manifest_path = cell_dir + "/manifest.json";
    if (!file_exists(manifest_path)) return false;
    try {
        json manifest = json::parse(read_file(manifest_path));
        for (auto it = manifest.at("artifacts").begin(); it != manifest.at("artifacts").end();
             ++it) {
            std::string path = cell_dir + "/" + it.key();
            if (!file_exists(path)) return false;
            if (fnv1a64_hex(read_file(path)) != it.value().get<std::string>()) return false;
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

struct SweepOptions {
    std::string config_path;
    std::string out_dir = "sweep";
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    bool resume = false;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string command_line;
};

// runs the method x seed product, one subdirectory per cell; --resume skips
// cells whose artifacts verify against their manifest
inline int cmd_sweep(const SweepOptions& opt, std::ostream& err = std::cerr) {
    if (opt.methods.empty() || opt.seeds.empty()) {
        err << "fedoui sweep: --methods and --seeds must be nonempty\n";
        return exit_code::config;
    }
    int worst = exit_code::ok;
    for (const auto& method : opt.methods) {
        for (std::uint64_t seed : opt.seeds) {
            std::string cell = opt.out_dir + "/" + method + "_seed" + std::to_string(seed);
            if (opt.resume && sweep_cell_complete(cell)) continue;
            RunOptions run;
            run.config_path = opt.config_path;
            run.out_dir = cell;
            run.overrides = opt.overrides;
            run.overrides.emplace_back("method", method);
            run.overrides.emplace_back("seed", std::to_string(seed));
            run.command_line = opt.command_line;
            int rc = cmd_run(run, err);
            if (rc != exit_code::ok) {
                err << "fedoui sweep: cell " << cell << " failed with exit code " << rc << "\n";
                worst = rc;  // keep going; exit reflects any failure
            }
        }
    }
    return worst;
}

// aggregates every log.json below `dir` into the mean +- std table
inline int cmd_report(const std::string& dir, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    std::vector<ExperimentLog> logs;
    std::error_code ec;
    for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
         it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (!it->is_regular_file() || it->path().filename() != "log.json") continue;
        try {
            logs.push_back(log_from_json(json::parse(read_file(it->path().string()))));
        } catch (const std::exception& e) {
            err << "fedoui report: skipping " << it->path().string() << ": " << e.what() << "\n";
        }
    }
    if (logs.empty()) {
        err << "fedoui report: no valid log.json found under " << dir << "\n";
        return exit_code::report;
    }
    auto rows = summarize_logs(logs);
    std::string text = summary_table_text(rows);
    out << text;
    try {
        write_file(dir + "/summary.txt", text);
        write_file(dir + "/summary.csv", summary_table_csv(rows));
    } catch (const io_error& e) {
        err << "fedoui report: " << e.what() << "\n";
        return exit_code::report;
    }
    return exit_code::ok;
}

// one round's weighting data, recomputed views included
struct RoundInspection {
    ExperimentConfig config;
    RoundRecord record;
    std::vector<long> sample_counts;         // n_k aligned with selected
    std::vector<double> cdf_values;          // F(o_k) under the logged fit
    std::vector<double> median_distance;     // |F(o_k) - 1/2|
    bool scores_used = false;                // only fedoui consumes scores
};

inline RoundInspection inspect_round(const ExperimentLog& log, int round_index) {
    if (round_index < 0 || static_cast<std::size_t>(round_index) >= log.records.size())
        throw input_error("inspect: round " + std::to_string(round_index) +
                          " out of range (log has " + std::to_string(log.records.size()) +
                          " rounds)");
    RoundInspection ins;
    ins.config = log.config;
    ins.record = log.records[round_index];
    ins.scores_used = log.config.method == "fedoui";
    for (int id : ins.record.selected)
        ins.sample_counts.push_back(log.client_sample_counts.at(id));
    for (double o : ins.record.oui_values) {
        if (ins.record.fit.degenerate) {
            ins.cdf_values.push_back(std::nan(""));
            ins.median_distance.push_back(std::nan(""));
        } else {
            double f = regularized_incomplete_beta(o, ins.record.fit.params);
            ins.cdf_values.push_back(f);
            ins.median_distance.push_back(std::fabs(f - 0.5));
        }
    }
    return ins;
}

// prints the data behind the round-level diagnostics as text plus CSV
inline int cmd_inspect_round(const std::string& log_path, int round_index,
                             std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    ExperimentLog log;
    try {
        log = log_from_json(json::parse(read_file(log_path)));
    } catch (const std::exception& e) {
        err << "fedoui inspect-round: " << e.what() << "\n";
        return exit_code::data;
    }
    RoundInspection ins;
    try {
        ins = inspect_round(log, round_index);
    } catch (const input_error& e) {
        err << "fedoui inspect-round: " << e.what() << "\n";
        return exit_code::inspect;
    }

    char line[200];
    out << "round " << ins.record.round << "  method " << ins.config.method << "  accuracy "
        << detail::csv_double(ins.record.test_accuracy) << "\n";
    if (ins.record.fit.degenerate)
        out << "beta fit: degenerate (all scores 1)";
    else {
        std::snprintf(line, sizeof(line), "beta fit: alpha=%.6f beta=%.6f",
                      ins.record.fit.params.alpha, ins.record.fit.params.beta);
        out << line;
    }
    if (!ins.scores_used) out << "  [scores/fit not used by " << ins.config.method << "]";
    out << "\n\n";
    out << "client,n_samples,oui,cdf,score,weight\n";
    for (std::size_t i = 0; i < ins.record.selected.size(); ++i) {
        std::snprintf(line, sizeof(line), "%d,%ld,%.10g,%.10g,%.10g,%.10g\n",
                      ins.record.selected[i], ins.sample_counts[i], ins.record.oui_values[i],
                      ins.cdf_values[i], ins.record.scores[i], ins.record.weights[i]);
        out << line;
    }
    return exit_code::ok;
}

// ---------------------------------------------------------------------------
// argv dispatch
// ---------------------------------------------------------------------------

namespace detail {

struct ParsedArgs {
    std::vector<std::string> positional;
    std::vector<std::pair<std::string, std::string>> flags;  // name (no --), value
    std::vector<std::string> switches;                       // bare --name
};

inline ParsedArgs parse_args(const std::vector<std::string>& args) {
    ParsedArgs p;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) {
            p.positional.push_back(a);
            continue;
        }
        std::string body = a.substr(2);
        std::size_t eq = body.find('=');
        if (eq != std::string::npos) {
            p.flags.emplace_back(body.substr(0, eq), body.substr(eq + 1));
        } else if (body == "resume") {
            p.switches.push_back(body);
        } else if (i + 1 < args.size()) {
            p.flags.emplace_back(body, args[++i]);
        } else {
            p.switches.push_back(body);
        }
    }
    return p;
}

inline std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

inline std::string usage() {
    return "usage:\n"
           "  fedoui run [--config FILE] [--out DIR] [--data-dir DIR] [--seed N]\n"
           "             [--method NAME] [--KEY=VALUE ...]\n"
           "  fedoui sweep --methods a,b,c --seeds 1,2,3 [--config FILE] [--out DIR]\n"
           "             [--data-dir DIR] [--resume] [--KEY=VALUE ...]\n"
           "  fedoui report DIR\n"
           "  fedoui inspect-round LOG.json ROUND\n";
}

}  // namespace detail

// full command-line entry point; any config key works as --key=value
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    if (args.empty()) {
        err << detail::usage();
        return exit_code::config;
    }
    const std::string& cmd = args[0];
    auto rest = std::vector<std::string>(args.begin() + 1, args.end());
    auto parsed = detail::parse_args(rest);

    std::string command_line = "fedoui";
    for (const auto& a : args) command_line += " " + a;

    try {
        if (cmd == "run" || cmd == "sweep") {
            std::string config_path, out_dir = cmd == "run" ? "out" : "sweep";
            std::vector<std::pair<std::string, std::string>> overrides;
            std::vector<std::string> methods;
            std::vector<std::uint64_t> seeds;
            bool resume = false;
            for (const auto& s : parsed.switches) {
                if (s == "resume" && cmd == "sweep")
                    resume = true;
                else {
                    err << "fedoui " << cmd << ": unknown flag --" << s << "\n";
                    return exit_code::config;
                }
            }
            for (const auto& [key, value] : parsed.flags) {
                if (key == "config")
                    config_path = value;
                else if (key == "out")
                    out_dir = value;
                else if (key == "data-dir")
                    overrides.emplace_back("data_dir", value);
                else if (key == "methods" && cmd == "sweep")
                    methods = detail::split_commas(value);
                else if (key == "seeds" && cmd == "sweep") {
                    for (const auto& s : detail::split_commas(value))
                        seeds.push_back(
                            static_cast<std::uint64_t>(detail::parse_int("seeds", s)));
                } else {
                    overrides.emplace_back(key, value);  // validated against the key table
                }
            }
            if (!parsed.positional.empty()) {
                err << "fedoui " << cmd << ": unexpected argument '" << parsed.positional[0]
                    << "'\n";
                return exit_code::config;
            }
            if (cmd == "run") {
                RunOptions opt{config_path, out_dir, std::move(overrides), command_line};
                return cmd_run(opt, err);
            }
            SweepOptions opt;
            opt.config_path = config_path;
            opt.out_dir = out_dir;
            opt.methods = std::move(methods);
            opt.seeds = std::move(seeds);
            opt.resume = resume;
            opt.overrides = std::move(overrides);
            opt.command_line = command_line;
            return cmd_sweep(opt, err);
        }
        if (cmd == "report") {
            if (parsed.positional.size() != 1) {
                err << "fedoui report: expected exactly one sweep directory\n";
                return exit_code::config;
            }
            return cmd_report(parsed.positional[0], out, err);
        }
        if (cmd == "inspect-round") {
            if (parsed.positional.size() != 2) {
                err << "fedoui inspect-round: expected LOG.json and ROUND\n";
                return exit_code::config;
            }
            int round = static_cast<int>(detail::parse_int("round", parsed.positional[1]));
            return cmd_inspect_round(parsed.positional[0], round, out, err);
        }
    } catch (const config_error& e) {
        err << "fedoui: " << e.what() << "\n";
        return exit_code::config;
    }
    err << "fedoui: unknown command '" << cmd << "'\n" << detail::usage();
    return exit_code::config;
}

}  // namespace fedoui
