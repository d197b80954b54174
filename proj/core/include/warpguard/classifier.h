#ifndef WARPGUARD_CLASSIFIER_H_
#define WARPGUARD_CLASSIFIER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "warpguard/fraction.h"
#include "warpguard/layout.h"
#include "warpguard/profiler.h"

namespace warpguard {

// reliable[tid]
using ReliabilityFlags = std::vector<bool>;

// Reliable iff sdc <= tau (inclusive). tau must lie in [0, 1].
ReliabilityFlags classify_threads(const KernelProfile& profile, Fraction tau);

enum class WarpClass : std::uint8_t { kReliable, kUnreliable, kMixed };
std::string_view warp_class_name(WarpClass c);

struct WarpClassification {
  std::uint32_t cta_id = 0;
  std::uint32_t warp_id = 0;
  WarpClass cls = WarpClass::kMixed;
  std::vector<std::uint32_t> members;
};

std::vector<WarpClassification> classify_warps(const ReliabilityFlags& flags, const LaunchLayout& layout);

struct KernelReliabilityStats {
  std::string kernel;
  Fraction tau{1, 20};
  Fraction pct_reliable_warps;
  Fraction pct_reliable_threads;
  std::uint32_t reliable_warps = 0;
  std::uint32_t unreliable_warps = 0;
  std::uint32_t mixed_warps = 0;
  std::uint32_t reliable_threads = 0;
  std::uint32_t total_threads = 0;
  friend bool operator==(const KernelReliabilityStats&, const KernelReliabilityStats&) = default;
};

KernelReliabilityStats kernel_stats(const std::vector<WarpClassification>& warps, const ReliabilityFlags& flags);

// {kernel, tau, pct_reliable_warps, pct_reliable_threads, warp_counts:{...}}
// with percentages rendered to 2 decimals.
std::string stats_to_json(const KernelReliabilityStats& stats);

// thread_index_in_launch_order,sdc_pct,warp_boundary,cta_boundary,reliable_flag
std::string scatter_csv(const KernelProfile& profile, const ReliabilityFlags& flags, const LaunchLayout& layout);

}  // namespace warpguard

#endif  // WARPGUARD_CLASSIFIER_H_
