#pragma once

#include <cstdint>
#include <random>

namespace tstatlab {

// splitmix64 step; used to decorrelate user seeds and block indices into
// engine seeds so that parallel sample blocks get independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xda942042e4dd58b5ULL);
    std::uint64_t b = splitmix64(s);
    return a ^ b;
}

// Deterministic uniform sampler over mt19937_64. The standard library's
// distribution adaptors are implementation-defined, so all variate
// transforms in this project are written against this class instead.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(derive_stream_seed(seed, stream)) {}

    // Uniform on the open interval (0,1); never returns an exact endpoint,
    // which keeps log/tan transforms finite.
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace tstatlab
