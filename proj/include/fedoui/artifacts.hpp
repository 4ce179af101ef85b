#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedoui/config.hpp"
#include "fedoui/errors.hpp"
#include "fedoui/harness.hpp"

namespace fedoui {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// file helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path);
    out << content;
    if (!out) throw io_error("write failed for " + path);
}

inline bool file_exists(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return static_cast<bool>(in);
}

// FNV-1a over the raw bytes, as a 16-digit hex string
inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// rounds.csv
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T, typename Fmt>
inline std::string join_semicolon(const std::vector<T>& v, Fmt fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace detail

inline const char* rounds_csv_header() {
    return "round,test_accuracy,mean_train_loss,selected_ids,oui_values,scores,weights,alpha,"
           "beta,degenerate_fit";
}

inline std::string rounds_csv(const std::vector<RoundRecord>& records) {
    std::string out = rounds_csv_header();
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.round);
        out += ',';
        out += detail::csv_double(r.test_accuracy);
        out += ',';
        out += detail::csv_double(r.mean_train_loss);
        out += ',';
        out += detail::join_semicolon(r.selected, [](int i) { return std::to_string(i); });
        out += ',';
        out += detail::join_semicolon(r.oui_values, detail::csv_double);
        out += ',';
        out += detail::join_semicolon(r.scores, detail::csv_double);
        out += ',';
        out += detail::join_semicolon(r.weights, detail::csv_double);
        out += ',';
        if (!r.fit.degenerate) out += detail::csv_double(r.fit.params.alpha);
        out += ',';
        if (!r.fit.degenerate) out += detail::csv_double(r.fit.params.beta);
        out += ',';
        out += r.fit.degenerate ? '1' : '0';
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// log.json
// ---------------------------------------------------------------------------

inline json config_to_json(const ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& f : detail::config_fields()) j[f.key] = f.get(cfg);
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it)
        apply_config_override(cfg, it.key(), it.value().get<std::string>());
    return cfg;
}

inline json log_to_json(const ExperimentLog& log) {
    json j;
    j["config"] = config_to_json(log.config);
    j["client_sample_counts"] = log.client_sample_counts;
    json rounds = json::array();
    for (const auto& r : log.records) {
        json jr;
        jr["round"] = r.round;
        jr["test_accuracy"] = r.test_accuracy;
        jr["mean_train_loss"] = r.mean_train_loss;
        jr["selected"] = r.selected;
        jr["oui"] = r.oui_values;
        jr["scores"] = r.scores;
        jr["weights"] = r.weights;
        jr["degenerate_fit"] = r.fit.degenerate;
        if (r.fit.degenerate) {
            jr["alpha"] = nullptr;
            jr["beta"] = nullptr;
        } else {
            jr["alpha"] = r.fit.params.alpha;
            jr["beta"] = r.fit.params.beta;
        }
        rounds.push_back(std::move(jr));
    }
    j["rounds"] = std::move(rounds);
    if (log.summary) {
        j["summary"] = {{"final", log.summary->final_accuracy},
                        {"best", log.summary->best_accuracy},
                        {"auc", log.summary->auc}};
    } else {
        j["summary"] = nullptr;
    }
    return j;
}

inline ExperimentLog log_from_json(const json& j) {
    ExperimentLog log;
    log.config = config_from_json(j.at("config"));
    log.client_sample_counts = j.at("client_sample_counts").get<std::vector<long>>();
    for (const auto& jr : j.at("rounds")) {
        RoundRecord r;
        r.round = jr.at("round").get<int>();
        r.test_accuracy = jr.at("test_accuracy").get<double>();
        r.mean_train_loss = jr.at("mean_train_loss").get<double>();
        r.selected = jr.at("selected").get<std::vector<int>>();
        r.oui_values = jr.at("oui").get<std::vector<double>>();
        r.scores = jr.at("scores").get<std::vector<double>>();
        r.weights = jr.at("weights").get<std::vector<double>>();
        r.fit.degenerate = jr.at("degenerate_fit").get<bool>();
        if (!r.fit.degenerate) {
            r.fit.params.alpha = jr.at("alpha").get<double>();
            r.fit.params.beta = jr.at("beta").get<double>();
        }
        log.records.push_back(std::move(r));
    }
    if (!j.at("summary").is_null()) {
        SummaryMetrics m;
        m.final_accuracy = j["summary"].at("final").get<double>();
        m.best_accuracy = j["summary"].at("best").get<double>();
        m.auc = j["summary"].at("auc").get<double>();
        log.summary = m;
    }
    return log;
}

// ---------------------------------------------------------------------------
// manifest.json
// ---------------------------------------------------------------------------

// the resolved config inside the manifest is sufficient to re-run the
// experiment bit-identically (fedoui run --config manifest.json)
inline json make_manifest(const ExperimentConfig& cfg, const std::string& config_path,
                          const std::string& out_dir, const std::string& command,
                          const std::vector<std::pair<std::string, std::string>>& checksums) {
    json j;
    j["tool"] = "fedoui";
    j["version"] = "0.1.0";
    j["created_utc"] = utc_timestamp();
    j["command"] = command;
    j["config_path"] = config_path;
    j["out_dir"] = out_dir;
    j["resolved_config"] = config_to_json(cfg);
    json art = json::object();
    for (const auto& [name, sum] : checksums) art[name] = sum;
    j["artifacts"] = std::move(art);
    return j;
}

// ---------------------------------------------------------------------------
// summary table
// ---------------------------------------------------------------------------

struct SummaryRow {
    std::string method;
    int n_seeds = 0;
    double final_mean = 0, final_std = 0;
    double best_mean = 0, best_std = 0;
    double auc_mean = 0, auc_std = 0;
    bool has_std = false;  // std requires at least 2 seeds
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
    mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    sd = 0;
    if (xs.size() < 2) return;
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));  // sample std
}

}  // namespace detail

inline std::vector<SummaryRow> summarize_logs(const std::vector<ExperimentLog>& logs) {
    static const std::vector<std::string> canonical = {"fedavg", "fedprox", "grad-align",
                                                       "fedoui"};
    std::vector<std::string> methods;
    for (const auto& m : canonical)
        for (const auto& log : logs)
            if (log.config.method == m && std::find(methods.begin(), methods.end(), m) == methods.end())
                methods.push_back(m);
    for (const auto& log : logs)
        if (std::find(methods.begin(), methods.end(), log.config.method) == methods.end())
            methods.push_back(log.config.method);

    std::vector<SummaryRow> rows;
    for (const auto& m : methods) {
        std::vector<double> finals, bests, aucs;
        for (const auto& log : logs) {
            if (log.config.method != m || !log.summary) continue;
            finals.push_back(log.summary->final_accuracy);
            bests.push_back(log.summary->best_accuracy);
            aucs.push_back(log.summary->auc);
        }
        if (finals.empty()) continue;
        SummaryRow row;
        row.method = m;
        row.n_seeds = static_cast<int>(finals.size());
        row.has_std = finals.size() >= 2;
        detail::mean_std(finals, row.final_mean, row.final_std);
        detail::mean_std(bests, row.best_mean, row.best_std);
        detail::mean_std(aucs, row.auc_mean, row.auc_std);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string summary_table_csv(const std::vector<SummaryRow>& rows) {
    std::string out =
        "method,n_seeds,final_mean,final_std,best_mean,best_std,auc_mean,auc_std\n";
    char buf[64];
    for (const auto& r : rows) {
        out += r.method + ',' + std::to_string(r.n_seeds) + ',';
        std::snprintf(buf, sizeof(buf), "%.6f,", r.final_mean);
        out += buf;
        if (r.has_std) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.final_std);
            out += buf;
        }
        out += ',';
        std::snprintf(buf, sizeof(buf), "%.6f,", r.best_mean);
        out += buf;
        if (r.has_std) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.best_std);
            out += buf;
        }
        out += ',';
        std::snprintf(buf, sizeof(buf), "%.6f,", r.auc_mean);
        out += buf;
        if (r.has_std) {
            std::snprintf(buf, sizeof(buf), "%.6f", r.auc_std);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline std::string summary_table_text(const std::vector<SummaryRow>& rows) {
    auto cell = [](double mean, double sd, bool has_std) {
        char buf[64];
        if (has_std)
            std::snprintf(buf, sizeof(buf), "%.4f +- %.4f", mean, sd);
        else
            std::snprintf(buf, sizeof(buf), "%.4f", mean);
        return std::string(buf);
    };
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %6s %-20s %-20s %-20s\n", "method", "seeds",
                  "final_accuracy", "best_accuracy", "accuracy_auc");
    out += line;
    out += std::string(82, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-12s %6d %-20s %-20s %-20s\n", r.method.c_str(),
                      r.n_seeds, cell(r.final_mean, r.final_std, r.has_std).c_str(),
                      cell(r.best_mean, r.best_std, r.has_std).c_str(),
                      cell(r.auc_mean, r.auc_std, r.has_std).c_str());
        out += line;
    }
    return out;
}

}  // namespace fedoui
