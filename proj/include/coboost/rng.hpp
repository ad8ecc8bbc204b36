#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace coboost {

// Deterministic 64-bit random stream (splitmix64 core). Produces identical
// sequences on every platform and compiler, unlike std:: distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : root_(seed), state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Derive an independent stream; does not advance this one.
    Rng fork(uint64_t tag) const {
        uint64_t z = root_ ^ (0xA0761D6478BD642Full + tag * 0xE7037ED1A0B428DBull);
        z = (z ^ (z >> 32)) * 0xD6E8FEB86659FD93ull;
        z = (z ^ (z >> 32)) * 0xD6E8FEB86659FD93ull;
        return Rng(z ^ (z >> 32));
    }

    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }  // [0,1)

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    int uniform_int(int n) {  // [0,n)
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang; alpha < 1 handled via the boost Gamma(a+1) * U^(1/a).
    double gamma(double alpha) {
        if (alpha <= 0.0) throw std::invalid_argument("Rng::gamma: alpha must be positive");
        if (alpha < 1.0) {
            double u = 1.0 - uniform();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        double d = alpha - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = 1.0 - uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    // log(Gamma(alpha) draw); stays finite even for tiny alpha where the
    // plain draw underflows to zero.
    double log_gamma_draw(double alpha) {
        if (alpha < 1.0) {
            double u = 1.0 - uniform();  // (0,1]
            return std::log(gamma(alpha + 1.0)) + std::log(u) / alpha;
        }
        return std::log(gamma(alpha));
    }

    // Symmetric Dirichlet(alpha) over n components, normalized in log space
    // so extreme alphas keep their point-mass character instead of degrading
    // into numeric noise.
    std::vector<double> dirichlet(double alpha, int n) {
        std::vector<double> lg(n);
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            lg[i] = log_gamma_draw(alpha);
            mx = std::max(mx, lg[i]);
        }
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            lg[i] = std::exp(lg[i] - mx);
            sum += lg[i];
        }
        for (auto& v : lg) v /= sum;
        return lg;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t root_;
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace coboost
