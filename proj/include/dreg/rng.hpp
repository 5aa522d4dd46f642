#ifndef DREG_RNG_HPP
#define DREG_RNG_HPP

#include <cstdint>

namespace dreg {

// Counter-based random stream. Output depends only on
// (master_seed, stream_id, substream, counter), so any worker can
// reconstruct any stream independently and draws are identical across
// platforms and degrees of parallelism.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
              std::uint64_t substream = 0);

    // Derive a sub-stream (e.g. one for Z, one for noise, one for
    // treatment uniforms) without disturbing this stream's counter.
    RngStream substream(std::uint64_t k) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1).
    double next_uniform();

    // One N(0,1) variate via the polar method (no platform RNG, so the
    // sequence is identical across OS/toolchains).
    double next_normal();

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t substream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace dreg

#endif
