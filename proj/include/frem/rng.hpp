#pragma once

#include <cstdint>
#include <initializer_list>

namespace frem {

//! Source of uniforms in (0,1); lets tests script the draws.
struct UniformSource {
  virtual ~UniformSource() = default;
  virtual double uniform01() = 0;
};

namespace detail {
// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}
}  // namespace detail

//! Counter-based stream: the n-th output is a pure function of
//! (master_seed, stream_id, n), so streams can be replayed or handed to
//! parallel tasks without coordination.
class RngStream final : public UniformSource {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_(detail::combine(detail::mix64(master_seed), stream_id)) {}

  std::uint64_t next_u64() {
    return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ull);
  }

  //! Uniform in the open interval (0,1); never returns 0 or 1.
  double uniform01() override {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

//! A node in a deterministic stream tree. Children are derived by index,
//! so (chain, interval, iteration, round, path) all get independent,
//! reproducible streams from one master seed.
struct RngNode {
  std::uint64_t master_seed = 0;
  std::uint64_t id = 0;

  RngNode child(std::uint64_t k) const {
    return RngNode{master_seed, detail::combine(id, k)};
  }
  RngNode child(std::initializer_list<std::uint64_t> ks) const {
    RngNode n = *this;
    for (auto k : ks) n = n.child(k);
    return n;
  }
  RngStream stream() const { return RngStream(master_seed, id); }
};

}  // namespace frem
