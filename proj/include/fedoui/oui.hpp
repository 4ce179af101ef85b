#pragma once

#include <cstdint>
#include <vector>

#include "fedoui/errors.hpp"
#include "fedoui/tensor.hpp"

namespace fedoui {

// Overfitting-Underfitting Indicator over a probe batch.
//
// Given the penultimate pre-activation matrix (B samples x d units), each
// unit contributes its minority activation count min(s, B - s), where s is
// the number of samples on which the unit is strictly positive.  The OUI is
// the mean of these counts normalised by floor(B/2): 0 when every unit is
// constantly on or off, 1 when every unit splits the batch evenly.

// entry is 1 iff the pre-activation is strictly positive; exact zero is inactive
inline std::vector<std::uint8_t> activation_mask(const Tensor& preacts) {
    if (preacts.shape().size() != 2)
        throw input_error("activation mask: expected a batch x units matrix");
    std::vector<std::uint8_t> mask(preacts.size());
    const auto& v = preacts.values();
    for (std::size_t i = 0; i < v.size(); ++i) mask[i] = v[i] > 0.0 ? 1 : 0;
    return mask;
}

inline double oui(const Tensor& preacts) {
    if (preacts.shape().size() != 2)
        throw input_error("oui: expected a batch x units matrix");
    const std::size_t B = preacts.dim(0), d = preacts.dim(1);
    if (B < 2) throw input_error("oui: probe batch must contain at least 2 samples");
    if (d < 1) throw input_error("oui: layer must contain at least 1 unit");

    // integer accumulation keeps the result exactly on the attainable
    // lattice k / (d * floor(B/2))
    std::uint64_t total_minority = 0;
    for (std::size_t j = 0; j < d; ++j) {
        std::uint64_t active = 0;
        for (std::size_t b = 0; b < B; ++b)
            if (preacts.at2(b, j) > 0.0) ++active;
        total_minority += std::min<std::uint64_t>(active, B - active);
    }
    std::uint64_t denom = static_cast<std::uint64_t>(d) * (B / 2);
    return static_cast<double>(total_minority) / static_cast<double>(denom);
}

}  // namespace fedoui
