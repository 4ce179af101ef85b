#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fedoui/errors.hpp"
#include "fedoui/rng.hpp"
#include "fedoui/tensor.hpp"

namespace fedoui {

// ---------------------------------------------------------------------------
// model description
// ---------------------------------------------------------------------------

enum class LayerKind { conv, relu, maxpool, flatten, linear };

struct LayerDesc {
    LayerKind kind;
    std::string name;
    int in_ch = 0, out_ch = 0, kernel = 0, padding = 0;  // conv
    int pool = 0, stride = 0;                            // maxpool
    int in = 0, out = 0;                                 // linear
    bool tap = false;  // marks the penultimate pre-activation
};

struct ModelSpec {
    int in_channels = 0, in_h = 0, in_w = 0;
    int n_classes = 0;
    std::vector<LayerDesc> layers;

    ModelSpec& input(int channels, int h, int w) {
        in_channels = channels;
        in_h = h;
        in_w = w;
        return *this;
    }
    ModelSpec& conv(int in_ch, int out_ch, int kernel, int padding) {
        layers.push_back({LayerKind::conv, "conv" + std::to_string(++n_conv_), in_ch, out_ch,
                          kernel, padding});
        return *this;
    }
    ModelSpec& relu() {
        LayerDesc d{LayerKind::relu, "relu" + std::to_string(++n_relu_)};
        layers.push_back(d);
        return *this;
    }
    ModelSpec& maxpool(int pool, int stride) {
        LayerDesc d{LayerKind::maxpool, "pool" + std::to_string(++n_pool_)};
        d.pool = pool;
        d.stride = stride;
        layers.push_back(d);
        return *this;
    }
    ModelSpec& flatten() {
        layers.push_back({LayerKind::flatten, "flatten"});
        return *this;
    }
    ModelSpec& linear(int in, int out, bool tap = false) {
        LayerDesc d{LayerKind::linear, "fc" + std::to_string(++n_linear_)};
        d.in = in;
        d.out = out;
        d.tap = tap;
        layers.push_back(d);
        return *this;
    }
    ModelSpec& classes(int k) {
        n_classes = k;
        return *this;
    }

  private:
    int n_conv_ = 0, n_relu_ = 0, n_pool_ = 0, n_linear_ = 0;
};

// shape of the activation between layers: spatial (c,h,w) or flat features
struct ActShape {
    int c = 0, h = 0, w = 0;
    int flat = 0;  // >0 once flattened
    std::size_t count() const {
        return flat > 0 ? static_cast<std::size_t>(flat)
                        : static_cast<std::size_t>(c) * h * w;
    }
};

// per-layer output shapes; throws config_error naming the offending layer
inline std::vector<ActShape> layer_shapes(const ModelSpec& spec) {
    if (spec.in_channels <= 0 || spec.in_h <= 0 || spec.in_w <= 0 || spec.n_classes <= 0)
        throw config_error("model spec: input shape and class count must be positive");
    std::vector<ActShape> shapes;
    ActShape cur{spec.in_channels, spec.in_h, spec.in_w, 0};
    int taps = 0;
    for (const auto& l : spec.layers) {
        switch (l.kind) {
            case LayerKind::conv: {
                if (cur.flat > 0 || l.in_ch != cur.c)
                    throw config_error("model spec: layer " + l.name + " expects " +
                                       std::to_string(l.in_ch) + " input channels");
                if (l.kernel <= 0 || l.out_ch <= 0 || l.padding < 0)
                    throw config_error("model spec: layer " + l.name + " has invalid geometry");
                int oh = cur.h + 2 * l.padding - l.kernel + 1;
                int ow = cur.w + 2 * l.padding - l.kernel + 1;
                if (oh <= 0 || ow <= 0)
                    throw config_error("model spec: layer " + l.name + " output is empty");
                cur = {l.out_ch, oh, ow, 0};
                break;
            }
            case LayerKind::relu:
                break;
            case LayerKind::maxpool: {
                if (cur.flat > 0)
                    throw config_error("model spec: layer " + l.name + " requires spatial input");
                if (l.pool <= 0 || l.stride <= 0 || cur.h < l.pool || cur.w < l.pool)
                    throw config_error("model spec: layer " + l.name + " window does not fit");
                cur.h = (cur.h - l.pool) / l.stride + 1;
                cur.w = (cur.w - l.pool) / l.stride + 1;
                break;
            }
            case LayerKind::flatten:
                cur = {0, 0, 0, static_cast<int>(cur.count())};
                break;
            case LayerKind::linear: {
                if (static_cast<std::size_t>(l.in) != cur.count())
                    throw config_error("model spec: layer " + l.name + " expects " +
                                       std::to_string(l.in) + " inputs, got " +
                                       std::to_string(cur.count()));
                if (l.tap) ++taps;
                cur = {0, 0, 0, l.out};
                break;
            }
        }
        shapes.push_back(cur);
    }
    if (spec.layers.empty() || shapes.back().flat != spec.n_classes)
        throw config_error("model spec: final layer width must equal the class count");
    if (taps != 1)
        throw config_error("model spec: exactly one linear layer must carry the pre-activation tap");
    return shapes;
}

inline int tap_index(const ModelSpec& spec) {
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].tap) return static_cast<int>(i);
    throw config_error("model spec: no tapped layer");
}

inline int penultimate_width(const ModelSpec& spec) {
    return spec.layers[tap_index(spec)].out;
}

// the experiment model: two conv blocks, a 128-wide hidden layer (tapped
// pre-activation) and a linear classifier head
inline ModelSpec experiment_cnn(int n_classes = 10) {
    ModelSpec spec;
    spec.input(3, 32, 32)
        .conv(3, 32, 3, 1)
        .relu()
        .maxpool(2, 2)
        .conv(32, 64, 3, 1)
        .relu()
        .maxpool(2, 2)
        .flatten()
        .linear(64 * 8 * 8, 128, /*tap=*/true)
        .relu()
        .linear(128, n_classes)
        .classes(n_classes);
    return spec;
}

// uniform in +-sqrt(1/fan_in) per layer, weights then bias, in layer order
inline ModelParams init_params(const ModelSpec& spec, Rng& rng) {
    layer_shapes(spec);  // validate
    ModelParams params;
    for (const auto& l : spec.layers) {
        if (l.kind == LayerKind::conv) {
            double bound = std::sqrt(1.0 / (static_cast<double>(l.in_ch) * l.kernel * l.kernel));
            Tensor w({static_cast<std::size_t>(l.out_ch), static_cast<std::size_t>(l.in_ch),
                      static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.kernel)});
            for (auto& v : w.values()) v = rng.uniform(-bound, bound);
            Tensor b({static_cast<std::size_t>(l.out_ch)});
            for (auto& v : b.values()) v = rng.uniform(-bound, bound);
            params.add_layer(l.name + ".weight", std::move(w));
            params.add_layer(l.name + ".bias", std::move(b));
        } else if (l.kind == LayerKind::linear) {
            double bound = std::sqrt(1.0 / static_cast<double>(l.in));
            Tensor w({static_cast<std::size_t>(l.out), static_cast<std::size_t>(l.in)});
            for (auto& v : w.values()) v = rng.uniform(-bound, bound);
            Tensor b({static_cast<std::size_t>(l.out)});
            for (auto& v : b.values()) v = rng.uniform(-bound, bound);
            params.add_layer(l.name + ".weight", std::move(w));
            params.add_layer(l.name + ".bias", std::move(b));
        }
    }
    return params;
}

inline ModelParams zero_params(const ModelSpec& spec) {
    Rng dummy(0, StreamPurpose::model_init);
    ModelParams p = init_params(spec, dummy);
    for (auto& e : p) e.tensor.fill(0.0);
    return p;
}

// ---------------------------------------------------------------------------
// dense kernels
// ---------------------------------------------------------------------------

namespace detail {

// C[M x N] += A[M x K] * B[K x N]
inline void gemm_ab(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const double* a_row = A + static_cast<std::size_t>(i) * K;
        double* c_row = C + static_cast<std::size_t>(i) * N;
        for (int k = 0; k < K; ++k) {
            double a = a_row[k];
            const double* b_row = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// C[K x N] += A[M x K]^T * B[M x N]
inline void gemm_atb(const double* A, const double* B, double* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const double* a_row = A + static_cast<std::size_t>(m) * K;
        const double* b_row = B + static_cast<std::size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            double a = a_row[k];
            double* c_row = C + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// eight-lane dot product; fixed association, so results do not depend on
// the optimizer's ability to reorder the reduction
inline double dot8(const double* a, const double* b, int n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    int k = 0;
    for (; k + 8 <= n; k += 8) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
        s4 += a[k + 4] * b[k + 4];
        s5 += a[k + 5] * b[k + 5];
        s6 += a[k + 6] * b[k + 6];
        s7 += a[k + 7] * b[k + 7];
    }
    double tail = 0;
    for (; k < n; ++k) tail += a[k] * b[k];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

// C[M x K] += A[M x N] * B[K x N]^T   (dot products over the shared N axis)
inline void gemm_abt(const double* A, const double* B, double* C, int M, int N, int K) {
    for (int i = 0; i < M; ++i) {
        const double* a_row = A + static_cast<std::size_t>(i) * N;
        double* c_row = C + static_cast<std::size_t>(i) * K;
        for (int j = 0; j < K; ++j)
            c_row[j] += dot8(a_row, B + static_cast<std::size_t>(j) * N, N);
    }
}

// expand one sample [C x H x W] into columns [C*k*k x OH*OW] for a
// stride-1 convolution with symmetric zero padding
inline void im2col(const double* img, int C, int H, int W, int kernel, int padding, int OH,
                   int OW, double* col) {
    int idx = 0;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const double* plane = img + static_cast<std::size_t>(c) * H * W;
                double* out_row = col + static_cast<std::size_t>(idx++) * OH * OW;
                for (int oy = 0; oy < OH; ++oy) {
                    int iy = oy - padding + ky;
                    double* out = out_row + static_cast<std::size_t>(oy) * OW;
                    if (iy < 0 || iy >= H) {
                        for (int ox = 0; ox < OW; ++ox) out[ox] = 0.0;
                        continue;
                    }
                    const double* in_row = plane + static_cast<std::size_t>(iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        int ix = ox - padding + kx;
                        out[ox] = (ix >= 0 && ix < W) ? in_row[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// scatter-add of the column gradient back onto the padded image
inline void col2im(const double* col, int C, int H, int W, int kernel, int padding, int OH,
                   int OW, double* img) {
    int idx = 0;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                double* plane = img + static_cast<std::size_t>(c) * H * W;
                const double* in_row = col + static_cast<std::size_t>(idx++) * OH * OW;
                for (int oy = 0; oy < OH; ++oy) {
                    int iy = oy - padding + ky;
                    if (iy < 0 || iy >= H) continue;
                    const double* in = in_row + static_cast<std::size_t>(oy) * OW;
                    double* out_row = plane + static_cast<std::size_t>(iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        int ix = ox - padding + kx;
                        if (ix >= 0 && ix < W) out_row[ix] += in[ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// forward / backward
// ---------------------------------------------------------------------------

struct ForwardCache {
    std::size_t batch = 0;
    std::vector<Tensor> inputs;                  // input to each layer
    std::vector<std::vector<std::int32_t>> pool_argmax;  // flat input index per pooled cell
    std::vector<Tensor> conv_cols;               // im2col buffers kept for backward
    Tensor logits;
    Tensor penultimate;                          // B x d pre-activation at the tap
};

struct ForwardResult {
    Tensor logits;
    ForwardCache cache;
};

namespace detail {

inline double* batch_ptr(Tensor& t, std::size_t s) {
    return t.data() + s * (t.size() / t.dim(0));
}
inline const double* batch_ptr(const Tensor& t, std::size_t s) {
    return t.data() + s * (t.size() / t.dim(0));
}

inline void check_params_match(const ModelSpec& spec, const ModelParams& params) {
    std::size_t idx = 0;
    for (const auto& l : spec.layers) {
        if (l.kind != LayerKind::conv && l.kind != LayerKind::linear) continue;
        if (idx + 2 > params.size()) throw config_error("params: missing tensors for layer " + l.name);
        const Tensor& w = params[idx].tensor;
        const Tensor& b = params[idx + 1].tensor;
        std::vector<std::size_t> want_w, want_b{static_cast<std::size_t>(
            l.kind == LayerKind::conv ? l.out_ch : l.out)};
        if (l.kind == LayerKind::conv)
            want_w = {static_cast<std::size_t>(l.out_ch), static_cast<std::size_t>(l.in_ch),
                      static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.kernel)};
        else
            want_w = {static_cast<std::size_t>(l.out), static_cast<std::size_t>(l.in)};
        if (w.shape() != want_w || b.shape() != want_b)
            throw config_error("params: tensor shapes do not match layer " + l.name);
        idx += 2;
    }
    if (idx != params.size()) throw config_error("params: extra tensors beyond the model spec");
}

template <bool WithCache>
inline Tensor run_forward(const ModelSpec& spec, const ModelParams& params, const Tensor& batch,
                          ForwardCache* cache) {
    auto shapes = layer_shapes(spec);
    check_params_match(spec, params);
    if (batch.shape().size() != 4 || batch.dim(1) != static_cast<std::size_t>(spec.in_channels) ||
        batch.dim(2) != static_cast<std::size_t>(spec.in_h) ||
        batch.dim(3) != static_cast<std::size_t>(spec.in_w))
        throw config_error("forward: batch shape does not match the model input");
    if (batch.dim(0) == 0) throw input_error("forward: empty batch");
    const std::size_t B = batch.dim(0);

    if constexpr (WithCache) {
        cache->batch = B;
        cache->inputs.resize(spec.layers.size());
        cache->pool_argmax.assign(spec.layers.size(), {});
        cache->conv_cols.resize(spec.layers.size());
    }

    Tensor cur = batch;
    ActShape in_shape{spec.in_channels, spec.in_h, spec.in_w, 0};
    std::size_t param_idx = 0;
    std::vector<double> col;  // scratch, reused across conv layers when not cached

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const LayerDesc& l = spec.layers[li];
        const ActShape out_shape = shapes[li];
        if constexpr (WithCache) cache->inputs[li] = cur;

        switch (l.kind) {
            case LayerKind::conv: {
                const Tensor& w = params[param_idx].tensor;
                const Tensor& b = params[param_idx + 1].tensor;
                param_idx += 2;
                int C = in_shape.c, H = in_shape.h, W = in_shape.w;
                int OH = out_shape.h, OW = out_shape.w, OC = out_shape.c;
                std::size_t K = static_cast<std::size_t>(C) * l.kernel * l.kernel;
                std::size_t N = static_cast<std::size_t>(OH) * OW;
                Tensor out({B, static_cast<std::size_t>(OC), static_cast<std::size_t>(OH),
                            static_cast<std::size_t>(OW)});
                double* col_ptr;
                if constexpr (WithCache) {
                    cache->conv_cols[li] = Tensor({B, K, N});
                    col_ptr = cache->conv_cols[li].data();
                } else {
                    col.resize(K * N);
                    col_ptr = col.data();
                }
                for (std::size_t s = 0; s < B; ++s) {
                    double* sample_col =
                        WithCache ? col_ptr + s * K * N : col_ptr;
                    detail::im2col(batch_ptr(cur, s), C, H, W, l.kernel, l.padding, OH, OW,
                                   sample_col);
                    double* o = batch_ptr(out, s);
                    for (int oc = 0; oc < OC; ++oc) {
                        double bias = b[oc];
                        double* row = o + static_cast<std::size_t>(oc) * N;
                        for (std::size_t j = 0; j < N; ++j) row[j] = bias;
                    }
                    detail::gemm_ab(w.data(), sample_col, o, OC, static_cast<int>(K),
                                    static_cast<int>(N));
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::relu: {
                Tensor out = cur;
                for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
                cur = std::move(out);
                break;
            }
            case LayerKind::maxpool: {
                int C = in_shape.c, H = in_shape.h, W = in_shape.w;
                int OH = out_shape.h, OW = out_shape.w;
                Tensor out({B, static_cast<std::size_t>(C), static_cast<std::size_t>(OH),
                            static_cast<std::size_t>(OW)});
                std::vector<std::int32_t>* argmax = nullptr;
                if constexpr (WithCache) {
                    cache->pool_argmax[li].resize(out.size());
                    argmax = &cache->pool_argmax[li];
                }
                std::size_t oi = 0;
                for (std::size_t s = 0; s < B; ++s) {
                    const double* in = batch_ptr(cur, s);
                    for (int c = 0; c < C; ++c) {
                        const double* plane = in + static_cast<std::size_t>(c) * H * W;
                        for (int oy = 0; oy < OH; ++oy) {
                            for (int ox = 0; ox < OW; ++ox) {
                                int iy0 = oy * l.stride, ix0 = ox * l.stride;
                                // first-encountered maximum in row-major order
                                double best = plane[static_cast<std::size_t>(iy0) * W + ix0];
                                int best_idx = iy0 * W + ix0;
                                for (int py = 0; py < l.pool; ++py) {
                                    for (int px = 0; px < l.pool; ++px) {
                                        int idx = (iy0 + py) * W + (ix0 + px);
                                        if (plane[idx] > best) {
                                            best = plane[idx];
                                            best_idx = idx;
                                        }
                                    }
                                }
                                out[oi] = best;
                                if (argmax) (*argmax)[oi] = c * H * W + best_idx;
                                ++oi;
                            }
                        }
                    }
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::flatten: {
                std::size_t features = cur.size() / B;
                Tensor out(std::vector<std::size_t>{B, features}, std::move(cur.values()));
                cur = std::move(out);
                break;
            }
            case LayerKind::linear: {
                const Tensor& w = params[param_idx].tensor;
                const Tensor& b = params[param_idx + 1].tensor;
                param_idx += 2;
                std::size_t in = static_cast<std::size_t>(l.in), out_n = static_cast<std::size_t>(l.out);
                Tensor out({B, out_n});
                for (std::size_t s = 0; s < B; ++s)
                    for (std::size_t o = 0; o < out_n; ++o) out.at2(s, o) = b[o];
                detail::gemm_abt(cur.data(), w.data(), out.data(), static_cast<int>(B),
                                 static_cast<int>(in), static_cast<int>(out_n));
                if (l.tap) {
                    if constexpr (WithCache) cache->penultimate = out;
                }
                cur = std::move(out);
                break;
            }
        }
        in_shape = out_shape;
    }
    if (!cur.all_finite())
        throw numeric_error("forward: non-finite activation produced");
    if constexpr (WithCache) cache->logits = cur;
    return cur;
}

}  // namespace detail

inline ForwardResult forward(const ModelSpec& spec, const ModelParams& params,
                             const Tensor& batch) {
    ForwardResult r;
    r.logits = detail::run_forward<true>(spec, params, batch, &r.cache);
    return r;
}

// cache-free forward pass for evaluation
inline Tensor forward_logits(const ModelSpec& spec, const ModelParams& params,
                             const Tensor& batch) {
    return detail::run_forward<false>(spec, params, batch, nullptr);
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

// mean cross entropy with log-sum-exp stabilisation
inline double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape().size() != 2 || logits.dim(0) != labels.size())
        throw input_error("cross entropy: logits must be batch x classes aligned with labels");
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= K)
            throw input_error("cross entropy: label " + std::to_string(labels[b]) +
                              " out of range for " + std::to_string(K) + " classes");
        double mx = logits.at2(b, 0);
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, logits.at2(b, k));
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) sum += std::exp(logits.at2(b, k) - mx);
        total += mx + std::log(sum) - logits.at2(b, static_cast<std::size_t>(labels[b]));
    }
    return total / static_cast<double>(B);
}

// gradient of mean cross entropy wrt logits: (softmax - onehot) / B
inline Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    Tensor g({B, K});
    for (std::size_t b = 0; b < B; ++b) {
        double mx = logits.at2(b, 0);
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, logits.at2(b, k));
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) sum += std::exp(logits.at2(b, k) - mx);
        for (std::size_t k = 0; k < K; ++k)
            g.at2(b, k) = std::exp(logits.at2(b, k) - mx) / sum / static_cast<double>(B);
        g.at2(b, static_cast<std::size_t>(labels[b])) -= 1.0 / static_cast<double>(B);
    }
    return g;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

inline ModelParams backward(const ModelSpec& spec, const ModelParams& params,
                            const ForwardCache& cache, const std::vector<int>& labels) {
    auto shapes = layer_shapes(spec);
    detail::check_params_match(spec, params);
    if (cache.inputs.size() != spec.layers.size() || cache.batch != labels.size())
        throw internal_error("backward: cache does not match the spec and labels");
    const std::size_t B = cache.batch;

    ModelParams grads = params.zeros_like();
    Tensor delta = cross_entropy_grad(cache.logits, labels);

    // walk parameter entries from the back
    std::size_t param_idx = params.size();
    ActShape in_shape{spec.in_channels, spec.in_h, spec.in_w, 0};

    for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
        const LayerDesc& l = spec.layers[li];
        const Tensor& x = cache.inputs[li];
        in_shape = li == 0 ? ActShape{spec.in_channels, spec.in_h, spec.in_w, 0} : shapes[li - 1];

        switch (l.kind) {
            case LayerKind::linear: {
                param_idx -= 2;
                const Tensor& w = params[param_idx].tensor;
                Tensor& dw = grads[param_idx].tensor;
                Tensor& db = grads[param_idx + 1].tensor;
                if (x.shape().size() != 2 || x.dim(1) != static_cast<std::size_t>(l.in))
                    throw internal_error("backward: stale cache at layer " + l.name);
                // dW += delta^T x ; db += column sums ; dx = delta W
                detail::gemm_atb(delta.data(), x.data(), dw.data(), static_cast<int>(B), l.out,
                                 l.in);
                for (std::size_t b = 0; b < B; ++b)
                    for (int o = 0; o < l.out; ++o) db[o] += delta.at2(b, o);
                Tensor dx({B, static_cast<std::size_t>(l.in)});
                detail::gemm_ab(delta.data(), w.data(), dx.data(), static_cast<int>(B), l.out,
                                l.in);
                delta = std::move(dx);
                break;
            }
            case LayerKind::flatten: {
                Tensor dx(x.shape(), std::move(delta.values()));
                delta = std::move(dx);
                break;
            }
            case LayerKind::maxpool: {
                Tensor dx(x.shape());
                const auto& argmax = cache.pool_argmax[li];
                if (argmax.size() != delta.size())
                    throw internal_error("backward: stale cache at layer " + l.name);
                std::size_t per_sample_in = x.size() / B;
                std::size_t per_sample_out = delta.size() / B;
                for (std::size_t s = 0; s < B; ++s) {
                    double* dst = dx.data() + s * per_sample_in;
                    const double* src = delta.data() + s * per_sample_out;
                    const std::int32_t* am = argmax.data() + s * per_sample_out;
                    for (std::size_t i = 0; i < per_sample_out; ++i) dst[am[i]] += src[i];
                }
                delta = std::move(dx);
                break;
            }
            case LayerKind::relu: {
                Tensor dx = std::move(delta);
                const auto& xin = x.values();
                auto& dv = dx.values();
                for (std::size_t i = 0; i < dv.size(); ++i)
                    if (!(xin[i] > 0.0)) dv[i] = 0.0;
                delta = std::move(dx);
                break;
            }
            case LayerKind::conv: {
                param_idx -= 2;
                const Tensor& w = params[param_idx].tensor;
                Tensor& dw = grads[param_idx].tensor;
                Tensor& db = grads[param_idx + 1].tensor;
                int C = in_shape.c, H = in_shape.h, W = in_shape.w;
                int OC = shapes[li].c, OH = shapes[li].h, OW = shapes[li].w;
                std::size_t K = static_cast<std::size_t>(C) * l.kernel * l.kernel;
                std::size_t N = static_cast<std::size_t>(OH) * OW;
                const Tensor& cols = cache.conv_cols[li];
                if (cols.size() != B * K * N)
                    throw internal_error("backward: stale cache at layer " + l.name);
                Tensor dx(x.shape());
                std::vector<double> dcol(K * N);
                for (std::size_t s = 0; s < B; ++s) {
                    const double* d_out = detail::batch_ptr(delta, s);
                    const double* sample_col = cols.data() + s * K * N;
                    // dW += dY col^T
                    detail::gemm_abt(d_out, sample_col, dw.data(), OC, static_cast<int>(N),
                                     static_cast<int>(K));
                    for (int oc = 0; oc < OC; ++oc) {
                        const double* row = d_out + static_cast<std::size_t>(oc) * N;
                        double sum = 0.0;
                        for (std::size_t j = 0; j < N; ++j) sum += row[j];
                        db[oc] += sum;
                    }
                    // dX = col2im(W^T dY)
                    std::fill(dcol.begin(), dcol.end(), 0.0);
                    detail::gemm_atb(w.data(), d_out, dcol.data(), OC, static_cast<int>(K),
                                     static_cast<int>(N));
                    detail::col2im(dcol.data(), C, H, W, l.kernel, l.padding, OH, OW,
                                   detail::batch_ptr(dx, s));
                }
                delta = std::move(dx);
                break;
            }
        }
    }
    return grads;
}

// v' = momentum * v + g ; p' = p - lr * v'
inline void sgd_momentum_step(ModelParams& params, const ModelParams& grads,
                              ModelParams& velocity, double lr, double momentum) {
    if (!params.same_shapes(grads) || !params.same_shapes(velocity))
        throw input_error("sgd step: params, grads and velocity must share shapes");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& v = velocity[i].tensor.values();
        auto& p = params[i].tensor.values();
        const auto& g = grads[i].tensor.values();
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = momentum * v[j] + g[j];
            p[j] -= lr * v[j];
        }
    }
}

}  // namespace fedoui
