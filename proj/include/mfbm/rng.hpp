#pragma once

#include <array>
#include <cstdint>

namespace mfbm {

// Philox4x32-10 counter-based generator. A stream is identified by (seed, stream id);
// block index advances within the stream, so draws for replicate r never depend on
// how many other replicates were generated or in what order.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(Block counter, std::array<std::uint32_t, 2> key);
};

class ReplicateStream {
 public:
  ReplicateStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53 random bits.
  double next_uniform();
  // Standard normal by inverse CDF.
  double next_normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  Philox4x32::Block buffer_{};
  int used_ = 4;  // 32-bit words consumed from buffer_
};

}  // namespace mfbm
