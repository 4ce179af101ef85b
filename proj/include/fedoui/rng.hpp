#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fedoui/errors.hpp"

namespace fedoui {

// Counter-based random number generator: Philox-4x32 with 10 rounds.
//
// Every consumer of randomness in an experiment owns a stream derived from
// (master seed, purpose, a, b).  The seed is the Philox key; the stream id
// occupies the upper 64 bits of the 128-bit counter and the lower 64 bits
// run from zero.  Streams are therefore independent, reproducible across
// platforms and thread counts, and cheap to split.
namespace philox {

constexpr std::uint32_t M0 = 0xD2511F53u;
constexpr std::uint32_t M1 = 0xCD9E8D57u;
constexpr std::uint32_t W0 = 0x9E3779B9u;
constexpr std::uint32_t W1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        if (r != 0) {
            key[0] += W0;
            key[1] += W1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(M0, ctr[0], hi0, lo0);
        mulhilo(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

}  // namespace philox

// Stream purposes; a/b sub-ids are documented per purpose at the use site:
//   model_init       a=0, b=0
//   dataset          a=0 train subset, a=1 test subset, a=2 synthetic generation
//   partition        a=0, b=0
//   probe            a=client id
//   label_noise      a=0, b=0
//   client_sampling  a=round
//   client_train     a=round, b=client id
enum class StreamPurpose : std::uint32_t {
    model_init = 1,
    dataset = 2,
    partition = 3,
    probe = 4,
    label_noise = 5,
    client_sampling = 6,
    client_train = 7,
};

class Rng {
  public:
    Rng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t a = 0, std::uint32_t b = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_((static_cast<std::uint64_t>(purpose) << 56) ^
                  (static_cast<std::uint64_t>(a) << 28) ^ static_cast<std::uint64_t>(b)),
          counter_(0) {}

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill_();
        return buffer_[--buffered_];
    }

    std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1], safe as a log() argument
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n) via rejection, unbiased
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw input_error("rng: uniform_int bound must be positive");
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // standard normal, Box-Muller (pairs cached)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Gamma(shape, 1), Marsaglia-Tsang squeeze with the alpha<1 boost
    double gamma(double shape) {
        if (!(shape > 0.0)) throw input_error("rng: gamma shape must be positive");
        if (shape < 1.0) {
            double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // symmetric Dirichlet(concentration) over k components
    std::vector<double> dirichlet(double concentration, std::size_t k) {
        std::vector<double> p(k);
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            p[i] = gamma(concentration);
            sum += p[i];
        }
        if (sum <= 0.0) {
            // all draws underflowed; fall back to the uniform simplex point
            for (auto& v : p) v = 1.0 / static_cast<double>(k);
            return p;
        }
        for (auto& v : p) v /= sum;
        return p;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), uniform without replacement, ascending
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k > n || k < 0) throw input_error("rng: sample size exceeds population");
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<int> out(pool.begin(), pool.begin() + k);
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    void refill_() {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        auto out = philox::block(ctr, key_);
        ++counter_;
        buffer_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buffer_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        buffered_ = 2;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace fedoui
