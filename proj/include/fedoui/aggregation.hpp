#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fedoui/beta_dist.hpp"
#include "fedoui/errors.hpp"
#include "fedoui/tensor.hpp"

namespace fedoui {

// one client's round output: parameter delta, sample count, OUI value
struct ClientReport {
    int client_id = 0;
    ModelParams delta;
    long n_samples = 0;
    double oui = 0.0;
};

using WeightVector = std::vector<double>;

constexpr double grad_align_eps = 1e-3;

namespace detail {

inline void check_reports(const std::vector<ClientReport>& reports) {
    if (reports.empty()) throw input_error("weights: no client reports");
    for (const auto& r : reports)
        if (r.n_samples < 1)
            throw input_error("weights: client " + std::to_string(r.client_id) +
                              " has a non-positive sample count");
}

inline WeightVector normalize(std::vector<double> raw) {
    double sum = 0.0;
    for (double w : raw) sum += w;
    if (!(sum > 0.0)) throw numeric_error("weights: normalisation over a non-positive total");
    for (double& w : raw) w /= sum;
    return raw;
}

}  // namespace detail

// w_k proportional to the client sample count
inline WeightVector fedavg_weights(const std::vector<ClientReport>& reports) {
    detail::check_reports(reports);
    std::vector<double> raw(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i)
        raw[i] = static_cast<double>(reports[i].n_samples);
    return detail::normalize(std::move(raw));
}

struct FedOuiWeights {
    WeightVector weights;
    BetaFit fit;
    std::vector<double> scores;
};

// w_k proportional to n_k (eps + s_k), normalized
inline WeightVector weights_from_scores(const std::vector<long>& n_samples,
                                        const std::vector<double>& scores, double eps) {
    if (n_samples.size() != scores.size() || n_samples.empty())
        throw input_error("weights: sample counts and scores must align");
    std::vector<double> raw(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        raw[i] = static_cast<double>(n_samples[i]) * (eps + scores[i]);
    return detail::normalize(std::move(raw));
}

// Structural reweighting: fit Beta to the round's OUI values, score each
// client by bilateral typicality under the fitted CDF, then weight by
// n_k (eps + s_k).  A degenerate fit scores every client 1, in which case
// the output is exactly the sample-size weighting.
inline FedOuiWeights fedoui_weights(const std::vector<ClientReport>& reports, double eps) {
    detail::check_reports(reports);
    if (!(eps > 0.0)) throw input_error("fedoui weights: eps must be positive");

    FedOuiWeights out;
    std::vector<double> ouis(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) ouis[i] = reports[i].oui;
    out.fit = fit_beta_moments(ouis);

    out.scores.assign(reports.size(), 1.0);
    if (!out.fit.degenerate)
        for (std::size_t i = 0; i < reports.size(); ++i)
            out.scores[i] = bilateral_score(reports[i].oui, out.fit.params);

    bool all_equal = true;
    for (double s : out.scores)
        if (s != out.scores.front()) {
            all_equal = false;
            break;
        }
    if (all_equal) {
        // the common factor (eps + s) cancels; reuse the plain path so the
        // coincidence with fedavg is bit-exact
        out.weights = fedavg_weights(reports);
        return out;
    }

    std::vector<long> ns(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) ns[i] = reports[i].n_samples;
    out.weights = weights_from_scores(ns, out.scores, eps);
    return out;
}

// Gradient-alignment surrogate: weight by n_k (eps + max(0, cos(delta_k, mu)))
// against the unweighted mean update mu.  Zero-norm deltas count as cosine 0.
inline WeightVector gradalign_weights(const std::vector<ClientReport>& reports) {
    detail::check_reports(reports);

    ModelParams mean = reports.front().delta;
    for (std::size_t i = 1; i < reports.size(); ++i) mean += reports[i].delta;
    mean *= 1.0 / static_cast<double>(reports.size());
    double mean_norm = mean.norm2();

    std::vector<double> cosines(reports.size(), 0.0);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        double dn = reports[i].delta.norm2();
        if (dn > 0.0 && mean_norm > 0.0)
            cosines[i] = reports[i].delta.dot(mean) / (dn * mean_norm);
    }

    bool all_equal = true;
    for (double c : cosines)
        if (c != cosines.front()) {
            all_equal = false;
            break;
        }
    if (all_equal) return fedavg_weights(reports);

    std::vector<double> raw(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i)
        raw[i] = static_cast<double>(reports[i].n_samples) *
                 (grad_align_eps + std::max(0.0, cosines[i]));
    return detail::normalize(std::move(raw));
}

// global + sum_k w_k delta_k
inline ModelParams aggregate(const ModelParams& global, const std::vector<ClientReport>& reports,
                             const WeightVector& weights) {
    if (reports.size() != weights.size())
        throw input_error("aggregate: weights are not aligned with reports");
    if (reports.empty()) throw input_error("aggregate: no client reports");
    ModelParams next = global;
    for (std::size_t i = 0; i < reports.size(); ++i) next.axpy(weights[i], reports[i].delta);
    return next;
}

}  // namespace fedoui
