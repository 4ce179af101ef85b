#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedoui/aggregation.hpp"
#include "fedoui/beta_dist.hpp"
#include "fedoui/data.hpp"
#include "fedoui/errors.hpp"
#include "fedoui/nn.hpp"
#include "fedoui/oui.hpp"
#include "fedoui/parallel.hpp"
#include "fedoui/rng.hpp"
#include "fedoui/tensor.hpp"

namespace fedoui {

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string method = "fedavg";  // fedavg | fedprox | grad-align | fedoui
    int n_clients = 20;
    int clients_per_round = 5;
    int rounds = 60;
    int local_epochs = 1;
    double lr = 0.01;
    double momentum = 0.9;
    int batch_size = 32;
    int probe_batch_size = 32;
    double eps = 1e-3;        // fedoui stability constant
    double fedprox_mu = 0.01;
    std::string partition = "dirichlet";  // dirichlet | iid
    double dirichlet_alpha = 0.1;
    std::string noise = "none";  // none | label_noise
    double noise_fraction = 0.3;
    double noise_flip_prob = 0.5;
    int train_subset = 3000;
    int test_subset = 1000;
    std::uint64_t seed = 0;
    std::string dataset = "cifar10";  // cifar10 | synthetic
    std::string data_dir;
    double synth_spread = 0.25;
    int threads = 0;  // 0 = hardware concurrency; never affects results
};

inline void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw config_error("config: " + field + ": " + why);
    };
    if (c.method != "fedavg" && c.method != "fedprox" && c.method != "grad-align" &&
        c.method != "fedoui")
        fail("method", "unknown method '" + c.method + "'");
    if (c.n_clients < 1) fail("n_clients", "must be positive");
    if (c.clients_per_round < 1 || c.clients_per_round > c.n_clients)
        fail("clients_per_round", "must be in [1, n_clients]");
    if (c.rounds < 0) fail("rounds", "must be nonnegative");
    if (c.local_epochs < 1) fail("local_epochs", "must be positive");
    if (!(c.lr >= 0.0)) fail("lr", "must be nonnegative");
    if (!(c.momentum >= 0.0 && c.momentum < 1.0)) fail("momentum", "must be in [0,1)");
    if (c.batch_size < 1) fail("batch_size", "must be positive");
    if (c.probe_batch_size < 2) fail("probe_batch_size", "must be at least 2");
    if (!(c.eps > 0.0)) fail("eps", "must be positive");
    if (!(c.fedprox_mu >= 0.0)) fail("fedprox_mu", "must be nonnegative");
    if (c.partition != "dirichlet" && c.partition != "iid")
        fail("partition", "unknown partition '" + c.partition + "'");
    if (!(c.dirichlet_alpha > 0.0)) fail("dirichlet_alpha", "must be positive");
    if (c.noise != "none" && c.noise != "label_noise")
        fail("noise", "unknown noise model '" + c.noise + "'");
    if (!(c.noise_fraction >= 0.0 && c.noise_fraction <= 1.0))
        fail("noise_fraction", "must be in [0,1]");
    if (!(c.noise_flip_prob >= 0.0 && c.noise_flip_prob <= 1.0))
        fail("noise_flip_prob", "must be in [0,1]");
    if (c.train_subset < c.n_clients) fail("train_subset", "must cover every client");
    if (c.train_subset < c.n_clients * c.probe_batch_size)
        fail("train_subset", "too small to give every client a probe batch");
    if (c.test_subset < 1) fail("test_subset", "must be positive");
    if (c.dataset != "cifar10" && c.dataset != "synthetic")
        fail("dataset", "unknown dataset '" + c.dataset + "'");
    if (!(c.synth_spread >= 0.0)) fail("synth_spread", "must be nonnegative");
    if (c.threads < 0) fail("threads", "must be nonnegative");
}

// ---------------------------------------------------------------------------
// partitioning and noise
// ---------------------------------------------------------------------------

struct Partition {
    std::vector<std::vector<int>> assignment;  // per client: sample indices

    std::vector<long> sizes() const {
        std::vector<long> s;
        s.reserve(assignment.size());
        for (const auto& a : assignment) s.push_back(static_cast<long>(a.size()));
        return s;
    }
};

namespace detail {

// move samples one at a time from the largest client until every client
// reaches min_size; throws when the total is too small for any repair
inline void repair_partition(Partition& p, std::size_t min_size) {
    std::size_t total = 0;
    for (const auto& a : p.assignment) total += a.size();
    if (total < min_size * p.assignment.size())
        throw input_error("partition: repair impossible, " + std::to_string(total) +
                          " samples cannot give " + std::to_string(p.assignment.size()) +
                          " clients " + std::to_string(min_size) + " each");
    for (;;) {
        std::size_t smallest = 0, largest = 0;
        for (std::size_t i = 1; i < p.assignment.size(); ++i) {
            if (p.assignment[i].size() < p.assignment[smallest].size()) smallest = i;
            if (p.assignment[i].size() > p.assignment[largest].size()) largest = i;
        }
        if (p.assignment[smallest].size() >= min_size) break;
        p.assignment[smallest].push_back(p.assignment[largest].back());
        p.assignment[largest].pop_back();
    }
}

}  // namespace detail

// For each class, class samples are split across clients by proportions
// drawn from a symmetric Dirichlet(concentration).  min_size triggers the
// deterministic repair step.
inline Partition dirichlet_partition(const std::vector<int>& labels, int n_clients,
                                     double concentration, Rng& rng, std::size_t min_size = 0) {
    if (n_clients < 1) throw input_error("partition: need at least one client");
    if (!(concentration > 0.0)) throw input_error("partition: concentration must be positive");

    int n_classes = 0;
    for (int l : labels) n_classes = std::max(n_classes, l + 1);

    Partition p;
    p.assignment.assign(n_clients, {});
    for (int c = 0; c < n_classes; ++c) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(static_cast<int>(i));
        if (idx.empty()) continue;
        rng.shuffle(idx);
        std::vector<double> prop = rng.dirichlet(concentration, n_clients);
        // cumulative rounding keeps every sample assigned exactly once
        double cum = 0.0;
        std::size_t start = 0;
        for (int k = 0; k < n_clients; ++k) {
            cum += prop[k];
            std::size_t stop = k == n_clients - 1
                                   ? idx.size()
                                   : std::min<std::size_t>(
                                         idx.size(), static_cast<std::size_t>(std::lround(
                                                         cum * static_cast<double>(idx.size()))));
            for (std::size_t i = start; i < stop; ++i) p.assignment[k].push_back(idx[i]);
            start = std::max(start, stop);
        }
    }
    if (min_size > 0) detail::repair_partition(p, min_size);
    return p;
}

// seeded shuffle dealt round-robin, sizes differ by at most one
inline Partition iid_partition(std::size_t n_samples, int n_clients, Rng& rng,
                               std::size_t min_size = 0) {
    if (n_clients < 1) throw input_error("partition: need at least one client");
    std::vector<int> idx(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) idx[i] = static_cast<int>(i);
    rng.shuffle(idx);
    Partition p;
    p.assignment.assign(n_clients, {});
    for (std::size_t i = 0; i < idx.size(); ++i)
        p.assignment[i % n_clients].push_back(idx[i]);
    if (min_size > 0) detail::repair_partition(p, min_size);
    return p;
}

// Symmetric label noise on a seeded subset of ceil(fraction * n_clients)
// clients: each of their training labels is replaced, with probability
// flip_prob, by a label drawn uniformly over all classes (so the observed
// change rate is flip_prob * (K-1)/K).  Test data is never touched.
inline Dataset inject_label_noise(Dataset dataset, const Partition& partition, double fraction,
                                  double flip_prob, Rng& rng, int n_classes = cifar::classes) {
    if (!(fraction >= 0.0 && fraction <= 1.0) || !(flip_prob >= 0.0 && flip_prob <= 1.0))
        throw input_error("label noise: fraction and flip_prob must be in [0,1]");
    int n_clients = static_cast<int>(partition.assignment.size());
    int affected = static_cast<int>(
        std::ceil(fraction * static_cast<double>(n_clients) - 1e-12));
    if (affected == 0 || flip_prob == 0.0) return dataset;

    std::vector<int> noisy = rng.sample_without_replacement(n_clients, affected);
    for (int client : noisy)
        for (int sample : partition.assignment[client])
            if (rng.uniform() < flip_prob)
                dataset.labels[sample] = static_cast<int>(rng.uniform_int(n_classes));
    return dataset;
}

// uniform sample without replacement, ascending ids
inline std::vector<int> sample_clients(int n_clients, int clients_per_round, Rng& rng) {
    if (clients_per_round > n_clients)
        throw input_error("sampling: clients_per_round exceeds n_clients");
    return rng.sample_without_replacement(n_clients, clients_per_round);
}

// ---------------------------------------------------------------------------
// local training
// ---------------------------------------------------------------------------

struct LocalTrainResult {
    ClientReport report;
    double mean_loss = 0.0;  // mean over local mini-batch losses
};

namespace detail {

// fedprox proximal gradient: g += mu * (theta - theta_global)
inline void add_prox_term(ModelParams& grads, const ModelParams& local,
                          const ModelParams& global, double mu) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto& g = grads[i].tensor.values();
        const auto& p = local[i].tensor.values();
        const auto& p0 = global[i].tensor.values();
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += mu * (p[j] - p0[j]);
    }
}

}  // namespace detail

// One client's local pass: local_epochs sweeps over a seeded shuffle of the
// shard in mini-batches of batch_size, starting from the global snapshot
// with a fresh momentum buffer.  Returns delta, sample count and the OUI of
// the trained local model on the client's fixed probe batch.
inline LocalTrainResult local_train(const ModelSpec& spec, const ModelParams& global_params,
                                    const Dataset& train, const std::vector<int>& shard,
                                    const Tensor& probe_batch, int client_id,
                                    const ExperimentConfig& cfg, Rng& rng) {
    if (shard.empty()) throw input_error("local train: empty shard");

    ModelParams local = global_params;
    ModelParams velocity = global_params.zeros_like();
    double loss_sum = 0.0;
    long n_batches = 0;

    std::vector<int> order = shard;
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
            std::size_t end = std::min(order.size(), off + cfg.batch_size);
            std::vector<int> batch_idx(order.begin() + off, order.begin() + end);
            Tensor batch = gather_batch(train, batch_idx);
            std::vector<int> labels = gather_labels(train, batch_idx);

            ForwardResult fwd = forward(spec, local, batch);
            loss_sum += cross_entropy_loss(fwd.logits, labels);
            ++n_batches;

            ModelParams grads = backward(spec, local, fwd.cache, labels);
            if (cfg.method == "fedprox" && cfg.fedprox_mu != 0.0)
                detail::add_prox_term(grads, local, global_params, cfg.fedprox_mu);
            sgd_momentum_step(local, grads, velocity, cfg.lr, cfg.momentum);
        }
    }

    LocalTrainResult result;
    result.report.client_id = client_id;
    result.report.n_samples = static_cast<long>(shard.size());
    result.report.delta = local - global_params;
    result.report.oui = oui(forward(spec, local, probe_batch).cache.penultimate);
    result.mean_loss = loss_sum / static_cast<double>(n_batches);
    return result;
}

// ---------------------------------------------------------------------------
// rounds and experiments
// ---------------------------------------------------------------------------

struct RoundRecord {
    int round = 0;
    std::vector<int> selected;
    std::vector<double> oui_values;
    BetaFit fit;
    std::vector<double> scores;
    WeightVector weights;
    double test_accuracy = 0.0;
    double mean_train_loss = 0.0;
};

struct SummaryMetrics {
    double final_accuracy = 0.0;
    double best_accuracy = 0.0;
    double auc = 0.0;
};

struct ExperimentLog {
    ExperimentConfig config;
    std::vector<long> client_sample_counts;
    std::vector<RoundRecord> records;
    std::optional<SummaryMetrics> summary;
};

// final = last round, best = max, auc = trapezoidal area of accuracy vs
// round normalized by rounds-1 (a trapezoid-weighted mean accuracy)
inline SummaryMetrics summary_metrics(const std::vector<RoundRecord>& records) {
    if (records.empty()) throw input_error("summary: no round records");
    SummaryMetrics m;
    m.final_accuracy = records.back().test_accuracy;
    m.best_accuracy = records.front().test_accuracy;
    for (const auto& r : records) m.best_accuracy = std::max(m.best_accuracy, r.test_accuracy);
    if (records.size() == 1) {
        m.auc = records.front().test_accuracy;
        return m;
    }
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < records.size(); ++i)
        area += 0.5 * (records[i].test_accuracy + records[i + 1].test_accuracy);
    m.auc = area / static_cast<double>(records.size() - 1);
    return m;
}

struct ExperimentState {
    ModelSpec spec;
    ModelParams global;
    Dataset train;
    Dataset test;
    Partition partition;
    std::vector<Tensor> probe_batches;  // per client, fixed for the run
    int next_round = 0;
};

namespace detail {

inline double evaluate_accuracy(const ModelSpec& spec, const ModelParams& params,
                                const Dataset& test, int threads) {
    const std::size_t n = test.size();
    if (n == 0) throw input_error("evaluate: empty test set");
    constexpr std::size_t chunk = 125;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<long> correct(n_chunks, 0);
    parallel_for(n_chunks, threads, [&](std::size_t ci) {
        std::size_t lo = ci * chunk, hi = std::min(n, lo + chunk);
        std::vector<int> idx(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) idx[i - lo] = static_cast<int>(i);
        Tensor logits = forward_logits(spec, params, gather_batch(test, idx));
        long c = 0;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < logits.dim(1); ++k)
                if (logits.at2(b, k) > logits.at2(b, best)) best = k;
            if (static_cast<int>(best) == test.labels[idx[b]]) ++c;
        }
        correct[ci] = c;
    });
    long total = 0;
    for (long c : correct) total += c;
    return static_cast<double>(total) / static_cast<double>(n);
}

}  // namespace detail

// One synchronous round: sample clients, train each from the same global
// snapshot (in parallel; per-client RNG streams keep results independent of
// scheduling), weight per the configured method, aggregate, evaluate.
// Numeric failures are rethrown with the round index attached.
inline RoundRecord run_round(ExperimentState& state, const ExperimentConfig& cfg) try {
    const int round = state.next_round;
    Rng sample_rng(cfg.seed, StreamPurpose::client_sampling, static_cast<std::uint32_t>(round));
    std::vector<int> selected = sample_clients(cfg.n_clients, cfg.clients_per_round, sample_rng);

    std::vector<LocalTrainResult> results(selected.size());
    const ModelParams& snapshot = state.global;
    parallel_for(selected.size(), cfg.threads, [&](std::size_t i) {
        int client = selected[i];
        Rng train_rng(cfg.seed, StreamPurpose::client_train, static_cast<std::uint32_t>(round),
                      static_cast<std::uint32_t>(client));
        results[i] = local_train(state.spec, snapshot, state.train,
                                 state.partition.assignment[client],
                                 state.probe_batches[client], client, cfg, train_rng);
    });

    // reports ordered by ascending client id (selected is sorted)
    std::vector<ClientReport> reports;
    reports.reserve(results.size());
    double loss_sum = 0.0;
    for (auto& r : results) {
        loss_sum += r.mean_loss;
        reports.push_back(std::move(r.report));
    }

    RoundRecord rec;
    rec.round = round;
    rec.selected = selected;
    rec.mean_train_loss = loss_sum / static_cast<double>(results.size());
    for (const auto& r : reports) rec.oui_values.push_back(r.oui);

    if (cfg.method == "fedoui") {
        FedOuiWeights fw = fedoui_weights(reports, cfg.eps);
        rec.fit = fw.fit;
        rec.scores = std::move(fw.scores);
        rec.weights = std::move(fw.weights);
    } else {
        // fit and scores are logged as diagnostics for every method
        rec.fit = fit_beta_moments(rec.oui_values);
        rec.scores.assign(reports.size(), 1.0);
        if (!rec.fit.degenerate)
            for (std::size_t i = 0; i < reports.size(); ++i)
                rec.scores[i] = bilateral_score(reports[i].oui, rec.fit.params);
        if (cfg.method == "grad-align")
            rec.weights = gradalign_weights(reports);
        else  // fedavg and fedprox both weight by sample count
            rec.weights = fedavg_weights(reports);
    }

    state.global = aggregate(state.global, reports, rec.weights);
    rec.test_accuracy = detail::evaluate_accuracy(state.spec, state.global, state.test, cfg.threads);
    ++state.next_round;
    return rec;
} catch (const numeric_error& e) {
    throw numeric_error("round " + std::to_string(state.next_round) + ": " + e.what());
}

// Builds the initial state: subsets, partition, probe batches, model init.
// Purpose-split RNG streams make every stage independently reproducible.
inline ExperimentState initialize_experiment(const ExperimentConfig& cfg, const Dataset& train_full,
                                             const Dataset& test_full) {
    validate_config(cfg);
    ExperimentState st;
    st.spec = experiment_cnn(cifar::classes);

    {
        Rng rng(cfg.seed, StreamPurpose::dataset, 0);
        st.train = subset(train_full, cfg.train_subset, rng);
    }
    {
        Rng rng(cfg.seed, StreamPurpose::dataset, 1);
        st.test = subset(test_full, cfg.test_subset, rng);
    }

    Rng part_rng(cfg.seed, StreamPurpose::partition);
    std::size_t min_size = static_cast<std::size_t>(cfg.probe_batch_size);
    if (cfg.partition == "dirichlet")
        st.partition = dirichlet_partition(st.train.labels, cfg.n_clients, cfg.dirichlet_alpha,
                                           part_rng, min_size);
    else
        st.partition = iid_partition(st.train.size(), cfg.n_clients, part_rng, min_size);

    if (cfg.noise == "label_noise") {
        Rng noise_rng(cfg.seed, StreamPurpose::label_noise);
        st.train = inject_label_noise(std::move(st.train), st.partition, cfg.noise_fraction,
                                      cfg.noise_flip_prob, noise_rng);
    }

    // fixed probe batch per client: first B of a seeded shard shuffle
    st.probe_batches.resize(cfg.n_clients);
    for (int k = 0; k < cfg.n_clients; ++k) {
        Rng probe_rng(cfg.seed, StreamPurpose::probe, static_cast<std::uint32_t>(k));
        std::vector<int> order = st.partition.assignment[k];
        probe_rng.shuffle(order);
        order.resize(cfg.probe_batch_size);
        st.probe_batches[k] = gather_batch(st.train, order);
    }

    Rng init_rng(cfg.seed, StreamPurpose::model_init);
    st.global = init_params(st.spec, init_rng);
    return st;
}

inline ExperimentLog run_experiment(const ExperimentConfig& cfg, const Dataset& train_full,
                                    const Dataset& test_full) {
    ExperimentState st = initialize_experiment(cfg, train_full, test_full);
    ExperimentLog log;
    log.config = cfg;
    log.client_sample_counts = st.partition.sizes();
    log.records.reserve(cfg.rounds);
    for (int r = 0; r < cfg.rounds; ++r) log.records.push_back(run_round(st, cfg));
    if (!log.records.empty()) log.summary = summary_metrics(log.records);
    return log;
}

// resolves the dataset per config: cifar10 from data_dir, or a synthetic
// pool split into disjoint train/test halves
inline ExperimentLog run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.dataset == "cifar10") {
        std::string dir = cfg.data_dir.empty() ? "data/cifar-10-batches-bin" : cfg.data_dir;
        auto [train, test] = load_cifar10(dir);
        return run_experiment(cfg, train, test);
    }
    Rng rng(cfg.seed, StreamPurpose::dataset, 2);
    int total = cfg.train_subset + cfg.test_subset;
    int per_class = (total + cifar::classes - 1) / cifar::classes;
    Dataset pool = synthetic_blobs(cifar::classes, per_class, cifar::image_side, cifar::channels,
                                   cfg.synth_spread, rng);
    std::vector<int> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    rng.shuffle(idx);
    Dataset train, test;
    train.name = "synthetic-train";
    test.name = "synthetic-test";
    std::vector<int> train_idx(idx.begin(), idx.begin() + cfg.train_subset);
    std::vector<int> test_idx(idx.begin() + cfg.train_subset,
                              idx.begin() + cfg.train_subset + cfg.test_subset);
    train.images = gather_batch(pool, train_idx);
    train.labels = gather_labels(pool, train_idx);
    test.images = gather_batch(pool, test_idx);
    test.labels = gather_labels(pool, test_idx);
    // the pools already have exactly the subset sizes; the dataset-stream
    // subset inside run_experiment reduces to a seeded permutation
    return run_experiment(cfg, train, test);
}

}  // namespace fedoui
