#pragma once

#include <cstdint>
#include <cstring>

#include "coboost/tensor.hpp"

namespace coboost {

// FNV-1a over raw bytes; used for parameter fingerprints in tests and logs.
inline uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = 0xCBF29CE484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

inline uint64_t checksum(const Tensor& t, uint64_t h = 0xCBF29CE484222325ull) {
    return fnv1a(t.data.data(), t.data.size() * sizeof(float), h);
}

}  // namespace coboost
