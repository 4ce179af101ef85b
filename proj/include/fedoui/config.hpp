#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fedoui/errors.hpp"
#include "fedoui/harness.hpp"

namespace fedoui {

// Flat key=value configuration with '#' comments.  Every key maps to one
// ExperimentConfig field; command-line --key=value overrides reuse the same
// table, so file and flag spellings are identical.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw config_error("config: " + key + ": '" + v + "' is not an integer");
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw config_error("config: " + key + ": '" + v + "' is not a number");
    }
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ConfigField {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<ConfigField>& config_fields() {
    auto int_field = [](const char* key, int ExperimentConfig::* member) {
        return ConfigField{
            key,
            [key, member](ExperimentConfig& c, const std::string& v) {
                c.*member = static_cast<int>(parse_int(key, v));
            },
            [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
    };
    auto dbl_field = [](const char* key, double ExperimentConfig::* member) {
        return ConfigField{
            key,
            [key, member](ExperimentConfig& c, const std::string& v) {
                c.*member = parse_double(key, v);
            },
            [member](const ExperimentConfig& c) { return format_double(c.*member); }};
    };
    auto str_field = [](const char* key, std::string ExperimentConfig::* member) {
        return ConfigField{
            key,
            [member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
            [member](const ExperimentConfig& c) { return c.*member; }};
    };
    static const std::vector<ConfigField> fields = {
        str_field("method", &ExperimentConfig::method),
        int_field("n_clients", &ExperimentConfig::n_clients),
        int_field("clients_per_round", &ExperimentConfig::clients_per_round),
        int_field("rounds", &ExperimentConfig::rounds),
        int_field("local_epochs", &ExperimentConfig::local_epochs),
        dbl_field("lr", &ExperimentConfig::lr),
        dbl_field("momentum", &ExperimentConfig::momentum),
        int_field("batch_size", &ExperimentConfig::batch_size),
        int_field("probe_batch_size", &ExperimentConfig::probe_batch_size),
        dbl_field("eps", &ExperimentConfig::eps),
        dbl_field("fedprox_mu", &ExperimentConfig::fedprox_mu),
        str_field("partition", &ExperimentConfig::partition),
        dbl_field("dirichlet_alpha", &ExperimentConfig::dirichlet_alpha),
        str_field("noise", &ExperimentConfig::noise),
        dbl_field("noise_fraction", &ExperimentConfig::noise_fraction),
        dbl_field("noise_flip_prob", &ExperimentConfig::noise_flip_prob),
        int_field("train_subset", &ExperimentConfig::train_subset),
        int_field("test_subset", &ExperimentConfig::test_subset),
        ConfigField{"seed",
                    [](ExperimentConfig& c, const std::string& v) {
                        c.seed = static_cast<std::uint64_t>(parse_int("seed", v));
                    },
                    [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        str_field("dataset", &ExperimentConfig::dataset),
        str_field("data_dir", &ExperimentConfig::data_dir),
        dbl_field("synth_spread", &ExperimentConfig::synth_spread),
        int_field("threads", &ExperimentConfig::threads),
    };
    return fields;
}

}  // namespace detail

inline void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                                  const std::string& value) {
    for (const auto& f : detail::config_fields())
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    throw config_error("config: unknown key '" + key + "'");
}

inline ExperimentConfig parse_config_text(const std::string& text,
                                          ExperimentConfig base = ExperimentConfig{}) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = detail::trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error("config: line " + std::to_string(line_no) +
                               ": expected key = value");
        std::string key = detail::trim(stripped.substr(0, eq));
        std::string value = detail::trim(stripped.substr(eq + 1));
        apply_config_override(base, key, value);
    }
    return base;
}

inline ExperimentConfig load_config_file(const std::string& path,
                                         ExperimentConfig base = ExperimentConfig{}) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

// canonical key = value form; parse(serialize(c)) == c
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : detail::config_fields()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += "\n";
    }
    return out;
}

}  // namespace fedoui
