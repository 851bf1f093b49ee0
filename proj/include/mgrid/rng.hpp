#pragma once

// Deterministic random streams. Distribution transforms are written out
// explicitly (inverse CDF, Box-Muller) instead of using std:: distributions,
// whose output sequences differ between standard library implementations.
// A stream is fully defined by (root seed, stream id), so parallel workers
// can each own an independent, reproducible stream.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgrid {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent stream derived from a root seed and a stream id.
    static Rng derive(std::uint64_t root, std::uint64_t stream) {
        return Rng(splitmix64(splitmix64(root) ^ splitmix64(stream ^ 0xa5a5a5a5a5a5a5a5ULL)));
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [0, n) without modulo bias.
    std::uint64_t integer(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::integer: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller; u1 in (0, 1] so the log is finite.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    double lognormal(double mu_log, double sigma_log) { return std::exp(normal(mu_log, sigma_log)); }

    double weibull(double shape, double scale) {
        if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("Rng::weibull: shape and scale must be positive");
        const double u = uniform();  // in [0, 1); -log1p(-u) is finite
        return scale * std::pow(-std::log1p(-u), 1.0 / shape);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // In-place Fisher-Yates; pinned here so shuffles do not depend on the
    // standard library's std::shuffle implementation.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(integer(i))]);
        }
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
        if (!is) throw std::runtime_error("Rng::deserialize: malformed engine state");
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace mgrid
