#ifndef GPL_PHILOX_HPP
#define GPL_PHILOX_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace gpl {

// Philox4x32-10 counter-based generator (Salmon et al. 2011)
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Sequential draws from one counter prefix: the last counter word is the block index.
class Stream {
public:
    Stream(PhiloxKey key, std::uint32_t c0, std::uint32_t c1, std::uint32_t c2)
        : key_(key), c0_(c0), c1_(c1), c2_(c2) {}

    std::uint64_t next_u64() {
        if (pos_ == 2) refill();
        return buf_[pos_++];
    }

    // [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0,1), safe for log
    double open_uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    // Box-Muller; the sine partner is kept for the next call
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(open_uniform()));
        const double t = 6.283185307179586 * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    void refill() {
        const PhiloxCounter out = philox4x32({c0_, c1_, c2_, block_++}, key_);
        buf_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buf_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        pos_ = 0;
    }

    PhiloxKey key_;
    std::uint32_t c0_, c1_, c2_;
    std::uint32_t block_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int pos_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gpl

#endif
