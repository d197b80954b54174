#ifndef WARPGUARD_REMAPPER_H_
#define WARPGUARD_REMAPPER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "warpguard/classifier.h"
#include "warpguard/fraction.h"
#include "warpguard/kernel_ir.h"
#include "warpguard/layout.h"

namespace warpguard {

struct RemapPlan {
  std::string kernel;
  Fraction tau{1, 20};
  std::string profile_hash;  // empty when the flags did not come from a profile
  LaunchLayout layout;       // per-CTA new launch order of original thread ids
  friend bool operator==(const RemapPlan&, const RemapPlan&) = default;
};

// Per CTA, scan threads in launch order into a reliable and an unreliable
// buffer, emitting each buffer as a warp whenever it holds 32 threads. The
// partial reliable buffer followed by the partial unreliable buffer forms the
// trailing (mixed) remainder.
RemapPlan build_plan(const ReliabilityFlags& flags, std::uint32_t num_ctas, std::uint32_t cta_size);

struct LaidOutKernel {
  KernelProgram program;
  LaunchLayout layout;
};

// Threads keep their original tid; only warp slots move.
LaidOutKernel apply_plan(const KernelProgram& program, const RemapPlan& plan);

KernelReliabilityStats remapped_stats(const RemapPlan& plan, const ReliabilityFlags& flags);

// {kernel, tau, profile_hash, ctas: [{cta_id, new_order: [...]}]}
std::string plan_to_json(const RemapPlan& plan);
RemapPlan plan_from_json(std::string_view text);
void save_plan(const RemapPlan& plan, const std::filesystem::path& path);
RemapPlan load_plan(const std::filesystem::path& path);

}  // namespace warpguard

#endif  // WARPGUARD_REMAPPER_H_
