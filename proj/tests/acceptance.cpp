// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion.  The desk-scale criteria (9, 10) need the
// CIFAR-10 binary archive; point FEDOUI_DATA_DIR or --data-dir at it.
//
//   acceptance [--data-dir DIR] [--threads N] [--only 1,2,...]

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedoui/fedoui.hpp"
#include "support/quadrature.hpp"
#include "support/tempdir.hpp"

using namespace fedoui;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& msg) {
        if (ok) detail = msg;  // keep the first failure
        ok = false;
    }
    void expect(bool cond, const std::string& msg) {
        if (!cond) fail(msg);
    }
};

std::string data_dir_arg;  // resolved in main
int thread_count = 0;

std::string resolved_data_dir() {
    if (!data_dir_arg.empty()) return data_dir_arg;
    const char* env = std::getenv("FEDOUI_DATA_DIR");
    return env ? env : "data/cifar-10-batches-bin";
}

bool cifar_available(std::string& why) {
    std::string dir = resolved_data_dir();
    for (int i = 1; i <= 5; ++i) {
        std::string f = dir + "/data_batch_" + std::to_string(i) + ".bin";
        if (!file_exists(f)) {
            why = "CIFAR-10 not found at " + dir + " (missing " + f +
                  "); set FEDOUI_DATA_DIR or pass --data-dir";
            return false;
        }
    }
    if (!file_exists(dir + "/test_batch.bin")) {
        why = "CIFAR-10 test_batch.bin missing under " + dir;
        return false;
    }
    return true;
}

Tensor random_preacts(std::size_t b, std::size_t d, Rng& rng) {
    Tensor t({b, d});
    for (auto& v : t.values()) {
        v = rng.uniform(-1.0, 1.0);
        if (v == 0.0) v = 0.5;
    }
    return t;
}

// logs of every experiment completed by this binary, for criteria 11 and 12
std::vector<ExperimentLog> completed_runs;

ExperimentConfig toy_synthetic_config() {
    ExperimentConfig c;
    c.method = "fedavg";
    c.n_clients = 4;
    c.clients_per_round = 2;
    c.rounds = 5;
    c.lr = 0.05;
    c.batch_size = 8;
    c.probe_batch_size = 2;
    c.partition = "iid";
    c.train_subset = 64;
    c.test_subset = 16;
    c.dataset = "synthetic";
    c.synth_spread = 0.3;
    c.seed = 7;
    c.threads = 1;
    return c;
}

ExperimentConfig desk_protocol_config(const std::string& method, std::uint64_t seed) {
    ExperimentConfig c;
    c.method = method;
    c.n_clients = 20;
    c.clients_per_round = 5;
    c.rounds = 60;
    c.local_epochs = 1;
    c.lr = 0.01;
    c.momentum = 0.9;
    c.batch_size = 32;
    c.probe_batch_size = 32;
    c.eps = 1e-3;
    c.partition = "dirichlet";
    c.dirichlet_alpha = 0.1;
    c.train_subset = 3000;
    c.test_subset = 1000;
    c.seed = seed;
    c.dataset = "cifar10";
    c.data_dir = resolved_data_dir();
    c.threads = thread_count;
    return c;
}

ExperimentLog run_logged(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test,
                         const char* label) {
    std::fprintf(stderr, "  running %s (%s, seed %llu, %d rounds)...\n", label,
                 cfg.method.c_str(), static_cast<unsigned long long>(cfg.seed), cfg.rounds);
    ExperimentLog log = run_experiment(cfg, train, test);
    completed_runs.push_back(log);
    if (log.summary)
        std::fprintf(stderr, "    best %.4f final %.4f auc %.4f\n", log.summary->best_accuracy,
                     log.summary->final_accuracy, log.summary->auc);
    return log;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

void criterion_1(Check& c) {
    Tensor all_pos({8, 6}, std::vector<double>(48, 3.0));
    c.expect(oui(all_pos) == 0.0, "all-positive pre-activations must give exactly 0");

    Tensor balanced({6, 4});
    for (std::size_t b = 0; b < 6; ++b)
        for (std::size_t j = 0; j < 4; ++j) balanced.at2(b, j) = b < 3 ? 1.0 : -1.0;
    c.expect(oui(balanced) == 1.0, "perfectly balanced units must give exactly 1");

    Rng rng(101, StreamPurpose::dataset);
    for (int trial = 0; trial < 1000 && c.ok; ++trial) {
        std::size_t b = 2 + rng.uniform_int(9), d = 1 + rng.uniform_int(8);
        double v = oui(random_preacts(b, d, rng));
        c.expect(v >= 0.0 && v <= 1.0, "oui left [0,1]");
        double scaled = v * static_cast<double>(d * (b / 2));
        c.expect(std::fabs(scaled - std::round(scaled)) < 1e-9,
                 "oui left the 1/(d*floor(B/2)) lattice");
    }
}

void criterion_2(Check& c) {
    Rng rng(102, StreamPurpose::dataset);
    for (int trial = 0; trial < 1000 && c.ok; ++trial) {
        std::size_t b = 2 + rng.uniform_int(7), d = 1 + rng.uniform_int(6);
        Tensor t = random_preacts(b, d, rng);
        double base = oui(t);

        std::vector<int> rows(b), cols(d);
        for (std::size_t i = 0; i < b; ++i) rows[i] = static_cast<int>(i);
        for (std::size_t j = 0; j < d; ++j) cols[j] = static_cast<int>(j);
        rng.shuffle(rows);
        rng.shuffle(cols);
        Tensor perm({b, d});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) perm.at2(i, j) = t.at2(rows[i], cols[j]);
        c.expect(oui(perm) == base, "permutation invariance broke");

        Tensor flipped = t;
        std::size_t unit = rng.uniform_int(d);
        for (std::size_t i = 0; i < b; ++i) flipped.at2(i, unit) = -flipped.at2(i, unit);
        c.expect(oui(flipped) == base, "unit sign-flip invariance broke");

        Tensor scaled = t;
        scaled *= 0.001 + 50.0 * rng.uniform();
        c.expect(oui(scaled) == base, "positive-scale invariance broke");
    }
}

void criterion_3(Check& c) {
    // 20 (alpha, beta) pairs covering [1e-3, 1e4]
    const double levels[] = {1e-3, 0.05, 0.6, 2.0, 8.0, 50.0, 400.0, 3000.0, 1e4};
    std::vector<std::pair<double, double>> pairs;
    Rng rng(103, StreamPurpose::dataset);
    pairs.push_back({1e-3, 1e-3});
    pairs.push_back({1e-3, 1e4});
    pairs.push_back({1e4, 1e-3});
    pairs.push_back({1e4, 1e4});
    pairs.push_back({6.10, 15.94});
    while (pairs.size() < 20) {
        double a = levels[rng.uniform_int(9)];
        double b = levels[rng.uniform_int(9)];
        pairs.push_back({a, b});
    }

    for (const auto& [a, b] : pairs) {
        for (int i = 1; i <= 50 && c.ok; ++i) {
            double x = static_cast<double>(i) / 51.0;
            double got = regularized_incomplete_beta(x, {a, b});
            double want = oracle::beta_cdf(x, a, b);
            if (std::fabs(got - want) >= 1e-10) {
                std::ostringstream msg;
                msg << "I_" << x << "(" << a << "," << b << ") = " << got
                    << " but quadrature gives " << want;
                c.fail(msg.str());
            }
        }
    }

    for (int trial = 0; trial < 400 && c.ok; ++trial) {
        double a = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
        double b = std::exp(rng.uniform(std::log(1e-3), std::log(1e4)));
        double x = rng.uniform();
        double lhs = regularized_incomplete_beta(x, {a, b});
        double rhs = 1.0 - regularized_incomplete_beta(1.0 - x, {b, a});
        c.expect(std::fabs(lhs - rhs) < 1e-10, "reflection identity exceeded 1e-10");
    }

    for (int i = 0; i <= 100 && c.ok; ++i) {
        double x = static_cast<double>(i) / 100.0;
        c.expect(std::fabs(regularized_incomplete_beta(x, {1.0, 1.0}) - x) <= 1e-12,
                 "I_x(1,1) deviated from x beyond 1e-12");
    }
}

void criterion_4(Check& c) {
    Rng rng(104, StreamPurpose::dataset);
    for (int trial = 0; trial < 10 && c.ok; ++trial) {
        BetaParams p{std::exp(rng.uniform(std::log(0.5), std::log(50.0))),
                     std::exp(rng.uniform(std::log(0.5), std::log(50.0)))};

        c.expect(bilateral_score(0.0, p) == 0.0, "score at x=0 must be exactly 0");
        c.expect(bilateral_score(1.0, p) == 0.0, "score at x=1 must be exactly 0");

        // bisect the median, confirm against the quadrature oracle
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 100; ++i) {
            double mid = 0.5 * (lo + hi);
            (regularized_incomplete_beta(mid, p) < 0.5 ? lo : hi) = mid;
        }
        double median = 0.5 * (lo + hi);
        c.expect(std::fabs(oracle::beta_cdf(median, p.alpha, p.beta) - 0.5) < 1e-9,
                 "bisected median disagrees with the quadrature oracle");
        c.expect(std::fabs(bilateral_score(median, p) - 1.0) < 1e-8,
                 "score at the fitted median deviates from 1 beyond 1e-8");

        int direction = 1;
        double prev = bilateral_score(0.0, p);
        for (int i = 1; i <= 1000; ++i) {
            double s = bilateral_score(static_cast<double>(i) / 1000.0, p);
            if (direction == 1 && s < prev - 1e-9) direction = -1;
            if (direction == -1 && s > prev + 1e-9) {
                c.fail("secondary maximum on the score grid");
                break;
            }
            prev = s;
        }
    }
}

void criterion_5(Check& c) {
    Rng rng(105, StreamPurpose::dataset);
    for (int trial = 0; trial < 50 && c.ok; ++trial) {
        int channels = 1 + static_cast<int>(rng.uniform_int(2));
        int classes = 2 + static_cast<int>(rng.uniform_int(3));
        int hidden = 3 + static_cast<int>(rng.uniform_int(3));
        ModelSpec spec;
        spec.input(channels, 4, 4)
            .conv(channels, 2, 3, 1)
            .relu()
            .maxpool(2, 2)
            .flatten()
            .linear(8, hidden, true)
            .relu()
            .linear(hidden, classes)
            .classes(classes);
        ModelParams params = init_params(spec, rng);
        Tensor batch({2, static_cast<std::size_t>(channels), 4, 4});
        for (auto& v : batch.values()) v = rng.uniform(-1.0, 1.0);
        std::vector<int> labels = {static_cast<int>(rng.uniform_int(classes)),
                                   static_cast<int>(rng.uniform_int(classes))};

        ForwardResult fwd = forward(spec, params, batch);
        ModelParams grads = backward(spec, params, fwd.cache, labels);
        const double h = 1e-5;
        for (std::size_t e = 0; e < params.size() && c.ok; ++e) {
            for (std::size_t i = 0; i < params[e].tensor.size(); ++i) {
                double saved = params[e].tensor[i];
                params[e].tensor[i] = saved + h;
                double up = cross_entropy_loss(forward_logits(spec, params, batch), labels);
                params[e].tensor[i] = saved - h;
                double down = cross_entropy_loss(forward_logits(spec, params, batch), labels);
                params[e].tensor[i] = saved;
                double fd = (up - down) / (2.0 * h);
                double a = grads[e].tensor[i];
                double rel = std::fabs(a - fd) / std::max({1e-6, std::fabs(a), std::fabs(fd)});
                if (rel >= 1e-4) {
                    c.fail("gradient mismatch at " + params[e].name + " (rel " +
                           std::to_string(rel) + ")");
                    break;
                }
            }
        }
    }
}

void criterion_6(Check& c) {
    Rng rng(106, StreamPurpose::dataset);
    for (int trial = 0; trial < 100 && c.ok; ++trial) {
        std::size_t k = 2 + rng.uniform_int(6);
        std::vector<ClientReport> reports;
        double same_oui = rng.uniform();
        for (std::size_t i = 0; i < k; ++i) {
            ClientReport r;
            r.client_id = static_cast<int>(i);
            r.n_samples = 1 + static_cast<long>(rng.uniform_int(400));
            r.oui = same_oui;  // zero variance forces the degenerate fit
            ModelParams d;
            Tensor t({3});
            for (auto& v : t.values()) v = rng.uniform(-1, 1);
            d.add_layer("w", std::move(t));
            r.delta = std::move(d);
            reports.push_back(std::move(r));
        }
        auto fw = fedoui_weights(reports, 1e-3);
        c.expect(fw.fit.degenerate, "equal ouis must give a degenerate fit");
        auto plain = fedavg_weights(reports);
        for (std::size_t i = 0; i < k; ++i)
            c.expect(fw.weights[i] == plain[i], "weights differ bit-wise from fedavg");

        ModelParams g;
        Tensor t({3});
        for (auto& v : t.values()) v = rng.uniform(-1, 1);
        g.add_layer("w", std::move(t));
        c.expect(aggregate(g, reports, fw.weights) == aggregate(g, reports, plain),
                 "aggregated params differ bit-wise");
    }
}

void criterion_7(Check& c) {
    Rng rng(107, StreamPurpose::dataset);
    for (int trial = 0; trial < 200 && c.ok; ++trial) {
        std::size_t k = 1 + rng.uniform_int(8);
        std::vector<ClientReport> reports;
        for (std::size_t i = 0; i < k; ++i) {
            ClientReport r;
            r.client_id = static_cast<int>(i);
            r.n_samples = 1 + static_cast<long>(rng.uniform_int(500));
            r.oui = rng.uniform();
            ModelParams d;
            Tensor t({4});
            for (auto& v : t.values()) v = rng.uniform(-1, 1);
            d.add_layer("w", std::move(t));
            r.delta = std::move(d);
            reports.push_back(std::move(r));
        }
        for (const std::string method : {"fedavg", "fedprox", "grad-align", "fedoui"}) {
            WeightVector w;
            if (method == "grad-align")
                w = gradalign_weights(reports);
            else if (method == "fedoui")
                w = fedoui_weights(reports, 1e-3).weights;
            else
                w = fedavg_weights(reports);
            double sum = 0;
            for (double v : w) {
                c.expect(v >= 0.0, method + " produced a negative weight");
                sum += v;
            }
            c.expect(std::fabs(sum - 1.0) <= 1e-12, method + " weights do not sum to 1");
            if (method == "fedoui")
                for (double v : w) c.expect(v > 0.0, "fedoui weight not strictly positive");
        }
    }
}

void criterion_8(Check& c) {
    testutil::TempDir dir;
    ExperimentConfig cfg = toy_synthetic_config();
    write_file(dir.file("toy.cfg"), serialize_config(cfg));

    auto run_with_threads = [&](int threads, const std::string& out) {
        RunOptions opt;
        opt.config_path = dir.file("toy.cfg");
        opt.out_dir = dir.file(out);
        opt.overrides = {{"threads", std::to_string(threads)}};
        opt.command_line = "acceptance";
        std::ostringstream err;
        int rc = cmd_run(opt, err);
        c.expect(rc == 0, "cmd_run failed: " + err.str());
    };
    run_with_threads(1, "t1");
    run_with_threads(hardware_threads(), "tn");
    if (c.ok) {
        std::string a = read_file(dir.file("t1/rounds.csv"));
        std::string b = read_file(dir.file("tn/rounds.csv"));
        c.expect(a == b, "rounds.csv differs between 1 thread and N threads");
        completed_runs.push_back(log_from_json(json::parse(read_file(dir.file("t1/log.json")))));
    }
}

struct DeskResults {
    std::map<std::string, std::vector<SummaryMetrics>> by_method;

    double mean_best(const std::string& m) const {
        double s = 0;
        for (const auto& r : by_method.at(m)) s += r.best_accuracy;
        return s / static_cast<double>(by_method.at(m).size());
    }
    double mean_auc(const std::string& m) const {
        double s = 0;
        for (const auto& r : by_method.at(m)) s += r.auc;
        return s / static_cast<double>(by_method.at(m).size());
    }
};

// fedoui logs from the dirichlet runs, reused by criterion 11
std::vector<ExperimentLog> dirichlet_fedoui_logs;

void criterion_9(Check& c) {
    std::string why;
    if (!cifar_available(why)) {
        c.fail(why);
        return;
    }
    auto [train, test] = load_cifar10(resolved_data_dir());
    DeskResults results;
    for (const std::string method : {"fedavg", "fedoui"}) {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            ExperimentConfig cfg = desk_protocol_config(method, seed);
            ExperimentLog log = run_logged(cfg, train, test, "dirichlet protocol");
            if (!log.summary) {
                c.fail("run produced no summary");
                return;
            }
            results.by_method[method].push_back(*log.summary);
            if (method == "fedoui") dirichlet_fedoui_logs.push_back(log);
        }
    }
    double avg_best = results.mean_best("fedavg");
    double oui_best = results.mean_best("fedoui");
    double avg_auc = results.mean_auc("fedavg");
    double oui_auc = results.mean_auc("fedoui");
    std::fprintf(stderr, "  fedavg best %.4f auc %.4f; fedoui best %.4f auc %.4f\n", avg_best,
                 avg_auc, oui_best, oui_auc);
    c.expect(avg_best >= 0.20 && avg_best <= 0.36,
             "fedavg mean best accuracy " + std::to_string(avg_best) + " outside [0.20, 0.36]");
    c.expect(oui_best >= avg_best - 0.02,
             "fedoui mean best " + std::to_string(oui_best) + " trails fedavg " +
                 std::to_string(avg_best) + " by more than 0.02");
    c.expect(oui_auc >= avg_auc - 0.01, "fedoui mean auc " + std::to_string(oui_auc) +
                                            " trails fedavg " + std::to_string(avg_auc) +
                                            " by more than 0.01");
}

void criterion_10(Check& c) {
    std::string why;
    if (!cifar_available(why)) {
        c.fail(why);
        return;
    }
    auto [train, test] = load_cifar10(resolved_data_dir());
    DeskResults results;
    for (const std::string method : {"fedavg", "fedprox", "grad-align", "fedoui"}) {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            ExperimentConfig cfg = desk_protocol_config(method, seed);
            cfg.partition = "iid";
            cfg.noise = "label_noise";
            cfg.noise_fraction = 0.3;
            cfg.noise_flip_prob = 0.5;
            ExperimentLog log = run_logged(cfg, train, test, "noisy protocol");
            if (!log.summary) {
                c.fail("run produced no summary");
                return;
            }
            results.by_method[method].push_back(*log.summary);
        }
    }
    double lo = 1.0, hi = 0.0;
    for (const auto& [method, metrics] : results.by_method) {
        double best = results.mean_best(method);
        std::fprintf(stderr, "  %s mean best %.4f\n", method.c_str(), best);
        c.expect(best >= 0.22,
                 method + " mean best accuracy " + std::to_string(best) + " fell below 0.22");
        lo = std::min(lo, best);
        hi = std::max(hi, best);
    }
    c.expect(hi - lo <= 0.08, "method spread " + std::to_string(hi - lo) + " exceeds 0.08");
}

void criterion_11(Check& c) {
    std::vector<ExperimentLog> logs = dirichlet_fedoui_logs;
    if (logs.empty()) {
        // no CIFAR runs available; exercise the diagnostic on a synthetic
        // fedoui run with the experiment's client/round structure
        ExperimentConfig cfg;
        cfg.method = "fedoui";
        cfg.n_clients = 20;
        cfg.clients_per_round = 5;
        cfg.rounds = 6;
        cfg.lr = 0.05;
        cfg.batch_size = 16;
        cfg.probe_batch_size = 16;
        cfg.partition = "dirichlet";
        cfg.dirichlet_alpha = 0.1;
        cfg.train_subset = 400;
        cfg.test_subset = 100;
        cfg.dataset = "synthetic";
        cfg.synth_spread = 0.8;
        cfg.seed = 5;
        cfg.threads = thread_count;
        std::fprintf(stderr, "  (CIFAR-10 absent: using a synthetic fedoui run)\n");
        ExperimentLog log = run_experiment(cfg);
        completed_runs.push_back(log);
        logs.push_back(std::move(log));
    }

    int nondegenerate_rounds = 0;
    for (const auto& log : logs) {
        for (std::size_t r = 0; r < log.records.size(); ++r) {
            RoundInspection ins = inspect_round(log, static_cast<int>(r));
            if (ins.record.fit.degenerate) continue;
            ++nondegenerate_rounds;
            c.expect(
                std::isfinite(ins.record.fit.params.alpha) && ins.record.fit.params.alpha > 0.0,
                "fitted alpha not finite/positive in round " + std::to_string(r));
            c.expect(
                std::isfinite(ins.record.fit.params.beta) && ins.record.fit.params.beta > 0.0,
                "fitted beta not finite/positive in round " + std::to_string(r));

            // among equal-n clients the max weight must go to the client
            // whose oui is nearest the fitted median
            std::map<long, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < ins.sample_counts.size(); ++i)
                groups[ins.sample_counts[i]].push_back(i);
            for (const auto& [n, members] : groups) {
                if (members.size() < 2) continue;
                std::size_t max_w = members[0], min_d = members[0];
                for (std::size_t m : members) {
                    if (ins.record.weights[m] > ins.record.weights[max_w]) max_w = m;
                    if (ins.median_distance[m] < ins.median_distance[min_d]) min_d = m;
                }
                c.expect(max_w == min_d,
                         "round " + std::to_string(r) +
                             ": max-weight client is not the one nearest the fitted median");
            }
        }
    }
    c.expect(nondegenerate_rounds > 0, "no non-degenerate fedoui round was produced");
    std::fprintf(stderr, "  checked %d non-degenerate fedoui rounds\n", nondegenerate_rounds);
}

void criterion_12(Check& c) {
    // make sure at least the toy runs exist even if 8-11 were filtered out
    if (completed_runs.empty()) {
        ExperimentConfig cfg = toy_synthetic_config();
        completed_runs.push_back(run_experiment(cfg));
    }
    int checked = 0;
    for (const auto& log : completed_runs) {
        if (!log.summary) continue;
        ++checked;
        double min_acc = 1.0;
        for (const auto& r : log.records) min_acc = std::min(min_acc, r.test_accuracy);
        c.expect(log.summary->auc <= log.summary->best_accuracy + 1e-12,
                 "auc exceeded best accuracy");
        c.expect(min_acc <= log.summary->auc + 1e-12, "auc fell below the minimum accuracy");
    }
    c.expect(checked > 0, "no completed runs to check");
    std::fprintf(stderr, "  checked %d completed runs\n", checked);
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--data-dir" && i + 1 < argc) {
            data_dir_arg = argv[++i];
        } else if (a == "--threads" && i + 1 < argc) {
            thread_count = std::atoi(argv[++i]);
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string item;
            while (std::getline(ss, item, ',')) only.insert(std::atoi(item.c_str()));
        } else {
            std::fprintf(stderr, "unknown argument %s\n", a.c_str());
            return 2;
        }
    }

    struct Criterion {
        int id;
        const char* title;
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "oui bounds, exact cases and lattice", criterion_1},
        {2, "oui permutation / sign-flip / scale invariance", criterion_2},
        {3, "regularized incomplete beta vs quadrature oracle", criterion_3},
        {4, "bilateral score median, endpoints and unimodality", criterion_4},
        {5, "analytic gradients vs central finite differences", criterion_5},
        {6, "fedoui/fedavg coincidence under degenerate fits", criterion_6},
        {7, "weight normalization and positivity contracts", criterion_7},
        {8, "byte-identical rounds.csv across thread counts", criterion_8},
        {9, "dirichlet(0.1) desk-scale reproduction", criterion_9},
        {10, "noisy-client desk-scale reproduction", criterion_10},
        {11, "round-level diagnostic via inspect-round", criterion_11},
        {12, "auc bounded by best and minimum accuracy", criterion_12},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        if (!only.empty() && !only.count(crit.id)) continue;
        Check check;
        try {
            crit.run(check);
        } catch (const std::exception& e) {
            check.fail(std::string("exception: ") + e.what());
        }
        if (check.ok) {
            std::printf("[PASS] criterion %2d: %s\n", crit.id, crit.title);
        } else {
            std::printf("[FAIL] criterion %2d: %s -- %s\n", crit.id, crit.title,
                        check.detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
