#include "coboost/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "coboost/rng.hpp"

namespace coboost {

namespace fs = std::filesystem;

std::vector<float> DatasetHandle::channel_lo() const {
    std::vector<float> lo(norm_mean.size());
    for (size_t c = 0; c < lo.size(); ++c) lo[c] = (0.0f - norm_mean[c]) / norm_std[c];
    return lo;
}

std::vector<float> DatasetHandle::channel_hi() const {
    std::vector<float> hi(norm_mean.size());
    for (size_t c = 0; c < hi.size(); ++c) hi[c] = (1.0f - norm_mean[c]) / norm_std[c];
    return hi;
}

Tensor DatasetHandle::gather_train(const std::vector<int>& indices) const {
    const int c = sample_shape[0], h = sample_shape[1], w = sample_shape[2];
    const int64_t row = static_cast<int64_t>(c) * h * w;
    Tensor out({static_cast<int>(indices.size()), c, h, w});
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= train_size())
            throw std::out_of_range("gather_train: index out of range");
        std::copy_n(train_samples.ptr() + indices[i] * row, row, out.ptr() + i * row);
    }
    return out;
}

namespace {

void standardize(Tensor& samples, const std::vector<float>& mean, const std::vector<float>& std) {
    const int n = samples.dim(0), c = samples.dim(1);
    const int64_t plane = static_cast<int64_t>(samples.dim(2)) * samples.dim(3);
    for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
            float* p = samples.ptr() + (static_cast<int64_t>(i) * c + ch) * plane;
            for (int64_t j = 0; j < plane; ++j) p[j] = (p[j] - mean[ch]) / std[ch];
        }
}

// ----- synthetic_blobs: ten Gaussian bumps on an 8x8 canvas ------------------
//
// Class centres sit on a ring plus the canvas middle, far enough apart that a
// small classifier separates them, close enough that heavy label skew hurts.
// The dataset itself is a fixed constant (internal seed), independent of any
// experiment seed.

constexpr int kBlobClasses = 10;
constexpr int kBlobSide = 8;
constexpr int kBlobTrainPerClass = 200;
constexpr int kBlobTestPerClass = 50;

void blob_center(int cls, double* cx, double* cy) {
    if (cls == 9) {
        *cx = 3.5;
        *cy = 3.5;
        return;
    }
    const double angle = 2.0 * M_PI * cls / 9.0;
    *cx = 3.5 + 2.6 * std::cos(angle);
    *cy = 3.5 + 2.6 * std::sin(angle);
}

void render_blob(float* px, int cls, Rng& rng) {
    double cx, cy;
    blob_center(cls, &cx, &cy);
    cx += 0.35 * rng.normal();
    cy += 0.35 * rng.normal();
    const double amp = rng.uniform(0.75, 1.0);
    const double inv2s2 = 1.0 / (2.0 * 0.9 * 0.9);
    for (int y = 0; y < kBlobSide; ++y)
        for (int x = 0; x < kBlobSide; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            double v = amp * std::exp(-d2 * inv2s2) + 0.08 * rng.normal();
            px[y * kBlobSide + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
}

DatasetHandle make_blobs() {
    DatasetHandle h;
    h.name = "synthetic_blobs";
    h.num_classes = kBlobClasses;
    h.sample_shape = {1, kBlobSide, kBlobSide};
    h.norm_mean = {0.10f};
    h.norm_std = {0.20f};

    Rng rng(0x5EEDB10B5ull);
    const int64_t row = kBlobSide * kBlobSide;
    auto fill = [&](Tensor& samples, std::vector<int>& labels, int per_class) {
        const int n = per_class * kBlobClasses;
        samples = Tensor({n, 1, kBlobSide, kBlobSide});
        labels.resize(n);
        // interleave classes so dataset order is not sorted by label
        for (int i = 0; i < n; ++i) {
            const int cls = i % kBlobClasses;
            labels[i] = cls;
            render_blob(samples.ptr() + i * row, cls, rng);
        }
    };
    fill(h.train_samples, h.train_labels, kBlobTrainPerClass);
    fill(h.test_samples, h.test_labels, kBlobTestPerClass);
    standardize(h.train_samples, h.norm_mean, h.norm_std);
    standardize(h.test_samples, h.norm_mean, h.norm_std);
    return h;
}

// ----- file loaders ----------------------------------------------------------

std::string find_file(const std::string& root, const std::vector<std::string>& candidates) {
    for (const auto& c : candidates) {
        fs::path p = fs::path(root) / c;
        if (fs::exists(p)) return p.string();
    }
    std::string tried;
    for (const auto& c : candidates) tried += " " + c;
    throw std::runtime_error("dataset file not found under '" + root + "', tried:" + tried);
}

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    in.seekg(0, std::ios::end);
    std::vector<unsigned char> buf(static_cast<size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("short read on " + path);
    return buf;
}

uint32_t be32(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

// IDX image/label pair (MNIST family).
void load_idx_split(const std::string& root, const std::string& images_stem,
                    const std::string& labels_stem, Tensor& samples, std::vector<int>& labels) {
    const std::string img_path =
        find_file(root, {images_stem + "-idx3-ubyte", images_stem + ".idx3-ubyte"});
    const std::string lbl_path =
        find_file(root, {labels_stem + "-idx1-ubyte", labels_stem + ".idx1-ubyte"});
    auto img = read_all(img_path);
    auto lbl = read_all(lbl_path);
    if (img.size() < 16 || be32(img.data()) != 0x00000803)
        throw std::runtime_error("corrupt IDX image file " + img_path);
    if (lbl.size() < 8 || be32(lbl.data()) != 0x00000801)
        throw std::runtime_error("corrupt IDX label file " + lbl_path);
    const int n = static_cast<int>(be32(img.data() + 4));
    const int h = static_cast<int>(be32(img.data() + 8));
    const int w = static_cast<int>(be32(img.data() + 12));
    if (img.size() != 16 + static_cast<size_t>(n) * h * w || lbl.size() != 8 + static_cast<size_t>(n))
        throw std::runtime_error("truncated IDX data under " + root);
    samples = Tensor({n, 1, h, w});
    labels.resize(n);
    for (int64_t i = 0; i < static_cast<int64_t>(n) * h * w; ++i)
        samples.data[i] = img[16 + i] / 255.0f;
    for (int i = 0; i < n; ++i) labels[i] = lbl[8 + i];
}

// CIFAR-style binary rows: [labels...][3072 bytes RGB planes].
void load_cifar_rows(const std::vector<std::string>& paths, int label_bytes, int label_offset,
                     Tensor& samples, std::vector<int>& labels) {
    const int64_t row = label_bytes + 3072;
    int64_t total = 0;
    std::vector<std::vector<unsigned char>> blobs;
    for (const auto& p : paths) {
        blobs.push_back(read_all(p));
        if (blobs.back().size() % row != 0)
            throw std::runtime_error("corrupt CIFAR-format file " + p);
        total += static_cast<int64_t>(blobs.back().size()) / row;
    }
    samples = Tensor({static_cast<int>(total), 3, 32, 32});
    labels.resize(total);
    int64_t idx = 0;
    for (const auto& blob : blobs) {
        const int64_t n = static_cast<int64_t>(blob.size()) / row;
        for (int64_t i = 0; i < n; ++i, ++idx) {
            const unsigned char* r = blob.data() + i * row;
            labels[idx] = r[label_offset];
            float* dst = samples.ptr() + idx * 3072;
            for (int j = 0; j < 3072; ++j) dst[j] = r[label_bytes + j] / 255.0f;
        }
    }
}

}  // namespace

DatasetHandle load_dataset(const std::string& name, const std::string& root) {
    if (name == "synthetic_blobs") return make_blobs();

    DatasetHandle h;
    h.name = name;
    if (name == "MNIST" || name == "FMNIST") {
        h.num_classes = 10;
        h.sample_shape = {1, 28, 28};
        if (name == "MNIST") {
            h.norm_mean = {0.1307f};
            h.norm_std = {0.3081f};
        } else {
            h.norm_mean = {0.2860f};
            h.norm_std = {0.3530f};
        }
        load_idx_split(root, "train-images", "train-labels", h.train_samples, h.train_labels);
        load_idx_split(root, "t10k-images", "t10k-labels", h.test_samples, h.test_labels);
    } else if (name == "CIFAR10") {
        h.num_classes = 10;
        h.sample_shape = {3, 32, 32};
        h.norm_mean = {0.4914f, 0.4822f, 0.4465f};
        h.norm_std = {0.2470f, 0.2435f, 0.2616f};
        std::string base = root;
        if (fs::exists(fs::path(root) / "cifar-10-batches-bin"))
            base = (fs::path(root) / "cifar-10-batches-bin").string();
        std::vector<std::string> train_paths;
        for (int i = 1; i <= 5; ++i)
            train_paths.push_back(find_file(base, {"data_batch_" + std::to_string(i) + ".bin"}));
        load_cifar_rows(train_paths, 1, 0, h.train_samples, h.train_labels);
        load_cifar_rows({find_file(base, {"test_batch.bin"})}, 1, 0, h.test_samples, h.test_labels);
    } else if (name == "CIFAR100") {
        h.num_classes = 100;
        h.sample_shape = {3, 32, 32};
        h.norm_mean = {0.5071f, 0.4865f, 0.4409f};
        h.norm_std = {0.2673f, 0.2564f, 0.2762f};
        std::string base = root;
        if (fs::exists(fs::path(root) / "cifar-100-binary"))
            base = (fs::path(root) / "cifar-100-binary").string();
        load_cifar_rows({find_file(base, {"train.bin"})}, 2, 1, h.train_samples, h.train_labels);
        load_cifar_rows({find_file(base, {"test.bin"})}, 2, 1, h.test_samples, h.test_labels);
    } else if (name == "SVHN") {
        // Expects the .mat distribution pre-converted to CIFAR-10 row format
        // (one label byte + 3072 RGB bytes); see README for the conversion.
        h.num_classes = 10;
        h.sample_shape = {3, 32, 32};
        h.norm_mean = {0.4377f, 0.4438f, 0.4728f};
        h.norm_std = {0.1980f, 0.2010f, 0.1970f};
        load_cifar_rows({find_file(root, {"svhn_train.bin"})}, 1, 0, h.train_samples, h.train_labels);
        load_cifar_rows({find_file(root, {"svhn_test.bin"})}, 1, 0, h.test_samples, h.test_labels);
    } else {
        throw std::invalid_argument("load_dataset: unknown dataset '" + name + "'");
    }

    for (int y : h.train_labels)
        if (y < 0 || y >= h.num_classes)
            throw std::runtime_error("load_dataset: label out of range in " + name);
    for (int y : h.test_labels)
        if (y < 0 || y >= h.num_classes)
            throw std::runtime_error("load_dataset: label out of range in " + name);
    standardize(h.train_samples, h.norm_mean, h.norm_std);
    standardize(h.test_samples, h.norm_mean, h.norm_std);
    return h;
}

}  // namespace coboost
