#include "warpguard/layout.h"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "warpguard/errors.h"
#include "warpguard/kernel_ir.h"

namespace warpguard {

LaunchLayout LaunchLayout::linear(std::uint32_t num_ctas, std::uint32_t cta_size) {
  std::vector<std::vector<std::uint32_t>> ctas(num_ctas);
  for (std::uint32_t c = 0; c < num_ctas; ++c) {
    ctas[c].resize(cta_size);
    for (std::uint32_t i = 0; i < cta_size; ++i) ctas[c][i] = c * cta_size + i;
  }
  return LaunchLayout(std::move(ctas));
}

std::uint32_t LaunchLayout::warps_in_cta(std::uint32_t c) const {
  return static_cast<std::uint32_t>((ctas_.at(c).size() + kWarpSize - 1) / kWarpSize);
}

std::span<const std::uint32_t> LaunchLayout::warp(std::uint32_t c, std::uint32_t w) const {
  const auto& list = ctas_.at(c);
  std::size_t begin = static_cast<std::size_t>(w) * kWarpSize;
  if (begin >= list.size()) throw std::out_of_range("warp index out of range");
  std::size_t len = std::min<std::size_t>(kWarpSize, list.size() - begin);
  return std::span<const std::uint32_t>(list).subspan(begin, len);
}

std::uint32_t LaunchLayout::total_warps() const {
  std::uint32_t n = 0;
  for (std::uint32_t c = 0; c < num_ctas(); ++c) n += warps_in_cta(c);
  return n;
}

void LaunchLayout::validate_for(std::uint32_t num_ctas, std::uint32_t cta_size) const {
  if (ctas_.size() != num_ctas) {
    throw ValidationError("layout has " + std::to_string(ctas_.size()) + " CTAs, kernel has " +
                          std::to_string(num_ctas));
  }
  std::vector<char> seen(cta_size);
  for (std::uint32_t c = 0; c < num_ctas; ++c) {
    const auto& list = ctas_[c];
    if (list.size() != cta_size) {
      throw ValidationError("CTA " + std::to_string(c) + " lists " + std::to_string(list.size()) +
                            " threads, expected " + std::to_string(cta_size));
    }
    std::fill(seen.begin(), seen.end(), 0);
    const std::uint64_t base = static_cast<std::uint64_t>(c) * cta_size;
    for (auto tid : list) {
      if (tid < base || tid >= base + cta_size) {
        throw ValidationError("thread " + std::to_string(tid) + " does not belong to CTA " + std::to_string(c));
      }
      if (seen[tid - base]++) {
        throw ValidationError("thread " + std::to_string(tid) + " appears twice in CTA " + std::to_string(c));
      }
    }
  }
}

}  // namespace warpguard
