#pragma once
// Counter-based random numbers (Philox 4x32-10). Streams are keyed by
// (master_seed, replication, task, draw), so replications are independent and
// any task's draws are reproducible in isolation; no sequential state is
// shared between tasks or replications.

#include <array>
#include <cstdint>

namespace renewal {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint64_t M0 = 0xD2511F53ULL;
  constexpr std::uint64_t M1 = 0xCD9E8D57ULL;
  const std::uint64_t p0 = M0 * ctr[0];
  const std::uint64_t p1 = M1 * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::uint32_t k0,
                                               std::uint32_t k1) {
  constexpr std::uint32_t W0 = 0x9E3779B9u;
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += W0;
      k1 += W1;
    }
    philox_round(ctr, k0, k1);
  }
  return ctr;
}

}  // namespace detail

// One stream per (master_seed, replication, task); each call to next_unit()
// advances the draw counter. The mapping (task, draw, replication) -> counter
// block is injective for draw and replication below 2^32.
class TaskRng {
 public:
  TaskRng(std::uint64_t master_seed, std::uint64_t replication, std::uint64_t task)
      : k0_(static_cast<std::uint32_t>(master_seed)),
        k1_(static_cast<std::uint32_t>(master_seed >> 32)),
        task_(task),
        rep_(static_cast<std::uint32_t>(replication)) {}

  std::uint64_t next_u64() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(task_), static_cast<std::uint32_t>(task_ >> 32),
        static_cast<std::uint32_t>(draw_++), rep_};
    const auto out = detail::philox4x32(ctr, k0_, k1_);
    return static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
  }

  // Uniform on [0,1): 53-bit mantissa, endpoint 1 excluded, 0 included.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi) via the standard affine transform.
  double next_uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  std::uint64_t draws() const { return draw_; }

 private:
  std::uint32_t k0_, k1_;
  std::uint64_t task_;
  std::uint32_t rep_;
  std::uint32_t draw_ = 0;
};

}  // namespace renewal
