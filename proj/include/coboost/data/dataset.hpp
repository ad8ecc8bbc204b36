#pragma once

#include <array>
#include <string>
#include <vector>

#include "coboost/tensor.hpp"

namespace coboost {

// An image-classification dataset held fully in memory. Samples are stored
// already standardized: pixel in [0,1], then (p - mean[c]) / std[c] with the
// fixed per-dataset statistics kept in norm_mean/norm_std.
struct DatasetHandle {
    std::string name;
    int num_classes = 0;
    std::array<int, 3> sample_shape{0, 0, 0};  // {c,h,w}
    std::vector<float> norm_mean;              // per channel
    std::vector<float> norm_std;

    Tensor train_samples;  // {N,c,h,w}
    std::vector<int> train_labels;
    Tensor test_samples;
    std::vector<int> test_labels;

    int64_t train_size() const { return static_cast<int64_t>(train_labels.size()); }
    int64_t test_size() const { return static_cast<int64_t>(test_labels.size()); }

    // Normalized value range of a raw pixel in [0,1], per channel.
    std::vector<float> channel_lo() const;
    std::vector<float> channel_hi() const;

    // Copies the rows at `indices` from train_samples into one batch tensor.
    Tensor gather_train(const std::vector<int>& indices) const;
};

// Supported names: synthetic_blobs, MNIST, FMNIST, SVHN, CIFAR10, CIFAR100.
// synthetic_blobs is generated in-process and ignores root.
DatasetHandle load_dataset(const std::string& name, const std::string& root);

}  // namespace coboost
