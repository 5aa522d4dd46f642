#include "dreg/rng.hpp"

#include <cmath>

namespace dreg {

namespace {

// SplitMix64 finalizer; full-period mixing of a 64-bit counter.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t master, std::uint64_t stream,
                         std::uint64_t substream) {
    std::uint64_t k = mix64(master);
    k = mix64(k ^ mix64(stream + 0x632be59bd9b4e019ULL));
    k = mix64(k ^ mix64(substream + 0x9e6c63d0876a9a47ULL));
    return k;
}

} // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
                     std::uint64_t substream)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      substream_(substream),
      key_(derive_key(master_seed, stream_id, substream)) {}

RngStream RngStream::substream(std::uint64_t k) const {
    return RngStream(master_seed_, stream_id_, substream_ ^ mix64(k + 1));
}

std::uint64_t RngStream::next_u64() {
    return mix64(key_ + counter_++ * 0x9e3779b97f4a7c15ULL);
}

double RngStream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    for (;;) {
        const double v1 = 2.0 * next_uniform() - 1.0;
        const double v2 = 2.0 * next_uniform() - 1.0;
        const double s = v1 * v1 + v2 * v2;
        if (s > 0.0 && s < 1.0) {
            const double f = std::sqrt(-2.0 * std::log(s) / s);
            spare_ = v2 * f;
            have_spare_ = true;
            return v1 * f;
        }
    }
}

} // namespace dreg
