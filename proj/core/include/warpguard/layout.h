#ifndef WARPGUARD_LAYOUT_H_
#define WARPGUARD_LAYOUT_H_

#include <cstdint>
#include <span>
#include <vector>

namespace warpguard {

// Launch order of threads inside each CTA. Warp k of a CTA holds positions
// [32k, 32k+32) of that CTA's list; a trailing warp may be partial. Threads
// keep their original global ids, only their warp slot changes.
class LaunchLayout {
 public:
  LaunchLayout() = default;
  explicit LaunchLayout(std::vector<std::vector<std::uint32_t>> ctas) : ctas_(std::move(ctas)) {}

  // Identity order: CTA c holds global ids c*cta_size .. (c+1)*cta_size-1.
  static LaunchLayout linear(std::uint32_t num_ctas, std::uint32_t cta_size);

  std::uint32_t num_ctas() const { return static_cast<std::uint32_t>(ctas_.size()); }
  const std::vector<std::uint32_t>& cta(std::uint32_t c) const { return ctas_.at(c); }
  const std::vector<std::vector<std::uint32_t>>& ctas() const { return ctas_; }
  std::uint32_t warps_in_cta(std::uint32_t c) const;
  std::span<const std::uint32_t> warp(std::uint32_t c, std::uint32_t w) const;
  std::uint32_t total_warps() const;

  // Throws ValidationError unless every CTA list is a permutation of its own
  // original thread ids.
  void validate_for(std::uint32_t num_ctas, std::uint32_t cta_size) const;

  friend bool operator==(const LaunchLayout&, const LaunchLayout&) = default;

 private:
  std::vector<std::vector<std::uint32_t>> ctas_;
};

}  // namespace warpguard

#endif  // WARPGUARD_LAYOUT_H_
