#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fedoui/errors.hpp"
#include "fedoui/rng.hpp"
#include "fedoui/tensor.hpp"

namespace fedoui {

// widely used CIFAR-10 per-channel statistics, fixed for reproducibility
namespace cifar {
constexpr std::array<double, 3> channel_mean = {0.4914, 0.4822, 0.4465};
constexpr std::array<double, 3> channel_std = {0.2470, 0.2435, 0.2616};
constexpr int image_side = 32;
constexpr int channels = 3;
constexpr int classes = 10;
constexpr int record_bytes = 1 + channels * image_side * image_side;  // 3073
}  // namespace cifar

struct Dataset {
    Tensor images;            // N x C x H x W, standardized
    std::vector<int> labels;  // in [0, classes)
    std::string name;

    std::size_t size() const { return labels.size(); }
};

inline double standardize_pixel(std::uint8_t byte, int channel) {
    return (static_cast<double>(byte) / 255.0 - cifar::channel_mean[channel]) /
           cifar::channel_std[channel];
}

inline std::uint8_t destandardize_pixel(double value, int channel) {
    double raw = (value * cifar::channel_std[channel] + cifar::channel_mean[channel]) * 255.0;
    long rounded = std::lround(raw);
    if (rounded < 0) rounded = 0;
    if (rounded > 255) rounded = 255;
    return static_cast<std::uint8_t>(rounded);
}

namespace detail {

// one CIFAR batch file: records of [label byte][3072 channel-major pixel bytes]
inline void read_cifar_file(const std::string& path, std::vector<double>& images,
                            std::vector<int>& labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cifar10: cannot open " + path);
    std::vector<char> buf(cifar::record_bytes);
    constexpr int pixels = cifar::channels * cifar::image_side * cifar::image_side;
    for (long record = 0;; ++record) {
        in.read(buf.data(), cifar::record_bytes);
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != cifar::record_bytes)
            throw io_error("cifar10: " + path + ": record at offset " +
                           std::to_string(record * static_cast<long>(cifar::record_bytes)) +
                           " is incomplete");
        auto label = static_cast<std::uint8_t>(buf[0]);
        if (label >= cifar::classes)
            throw io_error("cifar10: " + path + ": label byte " + std::to_string(int(label)) +
                           " at offset " +
                           std::to_string(record * static_cast<long>(cifar::record_bytes)) +
                           " exceeds 9");
        labels.push_back(label);
        std::size_t base = images.size();
        images.resize(base + pixels);
        for (int i = 0; i < pixels; ++i) {
            int channel = i / (cifar::image_side * cifar::image_side);
            images[base + i] =
                standardize_pixel(static_cast<std::uint8_t>(buf[1 + i]), channel);
        }
    }
}

inline Dataset make_dataset(std::vector<double> images, std::vector<int> labels,
                            std::string name) {
    Dataset d;
    std::size_t n = labels.size();
    d.images = Tensor({n, static_cast<std::size_t>(cifar::channels),
                       static_cast<std::size_t>(cifar::image_side),
                       static_cast<std::size_t>(cifar::image_side)},
                      std::move(images));
    d.labels = std::move(labels);
    d.name = std::move(name);
    return d;
}

}  // namespace detail

// Loads the CIFAR-10 binary distribution (data_batch_1..5.bin + test_batch.bin)
// from `dir`.  Pixels are scaled by 1/255 and standardized per channel.
inline std::pair<Dataset, Dataset> load_cifar10(const std::string& dir) {
    std::vector<double> train_images, test_images;
    std::vector<int> train_labels, test_labels;
    for (int i = 1; i <= 5; ++i)
        detail::read_cifar_file(dir + "/data_batch_" + std::to_string(i) + ".bin", train_images,
                                train_labels);
    detail::read_cifar_file(dir + "/test_batch.bin", test_images, test_labels);
    return {detail::make_dataset(std::move(train_images), std::move(train_labels), "cifar10-train"),
            detail::make_dataset(std::move(test_images), std::move(test_labels), "cifar10-test")};
}

// seeded uniform sample of n records without replacement; order fixed by the draw
inline Dataset subset(const Dataset& dataset, std::size_t n, Rng& rng) {
    if (n > dataset.size())
        throw input_error("subset: requested " + std::to_string(n) + " of " +
                          std::to_string(dataset.size()) + " samples");
    std::vector<int> idx =
        rng.sample_without_replacement(static_cast<int>(dataset.size()), static_cast<int>(n));
    rng.shuffle(idx);  // sample order is part of the draw, not index order

    std::size_t per_image = dataset.size() ? dataset.images.size() / dataset.size() : 0;
    Dataset out;
    out.name = dataset.name + "-subset";
    out.labels.reserve(n);
    std::vector<double> images;
    images.reserve(n * per_image);
    for (int i : idx) {
        out.labels.push_back(dataset.labels[i]);
        const double* src = dataset.images.data() + static_cast<std::size_t>(i) * per_image;
        images.insert(images.end(), src, src + per_image);
    }
    std::vector<std::size_t> shape = dataset.images.shape();
    shape[0] = n;
    out.images = Tensor(std::move(shape), std::move(images));
    return out;
}

// Synthetic stand-in for fast tests: class c's images are Gaussian noise
// (std = spread) around a fixed per-class template, then standardized with
// the CIFAR constants.  Linearly separable for small spread.
inline Dataset synthetic_blobs(int n_classes, int n_per_class, int image_side, int channels,
                               double spread, Rng& rng) {
    if (n_classes <= 0 || n_per_class <= 0 || image_side <= 0 || channels <= 0)
        throw input_error("synthetic blobs: sizes must be positive");
    std::size_t per_image = static_cast<std::size_t>(channels) * image_side * image_side;

    std::vector<std::vector<double>> templates(n_classes, std::vector<double>(per_image));
    for (auto& t : templates)
        for (auto& v : t) v = rng.uniform();

    std::size_t n = static_cast<std::size_t>(n_classes) * n_per_class;
    std::vector<double> images(n * per_image);
    std::vector<int> labels(n);
    std::size_t s = 0;
    for (int c = 0; c < n_classes; ++c) {
        for (int k = 0; k < n_per_class; ++k, ++s) {
            labels[s] = c;
            double* img = images.data() + s * per_image;
            for (std::size_t i = 0; i < per_image; ++i) {
                double raw = templates[c][i] + (spread > 0.0 ? spread * rng.normal() : 0.0);
                int channel = static_cast<int>(i / (static_cast<std::size_t>(image_side) * image_side));
                img[i] = (raw - cifar::channel_mean[channel % 3]) / cifar::channel_std[channel % 3];
            }
        }
    }
    Dataset d;
    d.images = Tensor({n, static_cast<std::size_t>(channels), static_cast<std::size_t>(image_side),
                       static_cast<std::size_t>(image_side)},
                      std::move(images));
    d.labels = std::move(labels);
    d.name = "synthetic";
    return d;
}

// gathers rows of a dataset into a batch tensor
inline Tensor gather_batch(const Dataset& d, const std::vector<int>& indices) {
    std::size_t per_image = d.size() ? d.images.size() / d.size() : 0;
    std::vector<std::size_t> shape = d.images.shape();
    shape[0] = indices.size();
    std::vector<double> out;
    out.reserve(indices.size() * per_image);
    for (int i : indices) {
        const double* src = d.images.data() + static_cast<std::size_t>(i) * per_image;
        out.insert(out.end(), src, src + per_image);
    }
    return Tensor(std::move(shape), std::move(out));
}

inline std::vector<int> gather_labels(const Dataset& d, const std::vector<int>& indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(d.labels[i]);
    return out;
}

}  // namespace fedoui
