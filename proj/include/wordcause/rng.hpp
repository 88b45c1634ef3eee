#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace wordcause {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t acc, std::uint64_t part) {
    return splitmix64(acc ^ (part + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2)));
}

inline std::uint64_t mix_seed(std::uint64_t acc, std::string_view part) {
    return mix_seed(acc, fnv1a64(part));
}

// Derives one sub-stream seed from a root seed and a sequence of parts
// (counters, ids, labels). Used to give every (word, sentence, position)
// its own stream so results do not depend on evaluation order.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t root, Parts&&... parts) {
    std::uint64_t acc = splitmix64(root);
    ((acc = mix_seed(acc, std::forward<Parts>(parts))), ...);
    return acc;
}

// Deterministic random stream. Raw bits come from std::mt19937_64, whose
// output is pinned bit-exactly by the standard; the float/integer mappings
// live here instead of std::*_distribution, whose algorithms are
// implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0,n). Requires n > 0.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

    // Inclusive integer range.
    std::uint64_t next_in(std::uint64_t lo, std::uint64_t hi) {
        return lo + next_below(hi - lo + 1);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace wordcause
