#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace slowfast {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) {
        for (int r = 0; r < 10; ++r) {
            ctr = round(ctr, key);
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static Counter round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derives an independent stream key from a master seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(master ^ splitmix64(h));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// Standard normal variates z_0, z_1, ... for one (key, stream) pair.
///
/// z_{2k}, z_{2k+1} are a Box-Muller pair built from Philox block
/// (k, stream) under `key`, so any index can be reproduced independently
/// of how replicas are scheduled.
class NormalStream {
public:
    NormalStream(std::uint64_t key, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_(stream) {}

    void seek(std::uint64_t index) { next_ = index; }

    double next() {
        const std::uint64_t block = next_ >> 1;
        if (block != cached_block_) fill(block);
        return cache_[(next_++) & 1u];
    }

private:
    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t next_ = 0;
    std::uint64_t cached_block_ = ~0ull;
    std::array<double, 2> cache_{};

    void fill(std::uint64_t block) {
        Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
        const auto r = Philox4x32::generate(ctr, key_);
        const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
        const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
        // (0, 1] and [0, 1) with 53-bit resolution
        const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925 * u2;
        cache_[0] = radius * std::cos(angle);
        cache_[1] = radius * std::sin(angle);
        cached_block_ = block;
    }
};

}  // namespace slowfast
