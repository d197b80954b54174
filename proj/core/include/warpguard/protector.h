#ifndef WARPGUARD_PROTECTOR_H_
#define WARPGUARD_PROTECTOR_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "warpguard/classifier.h"
#include "warpguard/interpreter.h"

namespace warpguard {

enum class ProtectionMode : std::uint8_t { kDetect, kCorrect };
std::string_view protection_mode_name(ProtectionMode m);

struct ProtectionPlan {
  ProtectionMode mode = ProtectionMode::kDetect;
  std::vector<std::vector<std::uint32_t>> factors;  // [cta][warp]: 1, 2 or 3

  std::uint32_t protected_warps() const;
};

// Reliable warps run once; Unreliable and Mixed warps run twice (detect) or
// three times (correct).
ProtectionPlan build_protection_plan(const std::vector<WarpClassification>& warps, ProtectionMode mode);

struct Location {
  std::uint32_t buffer = 0;
  std::uint32_t index = 0;
  friend auto operator<=>(const Location&, const Location&) = default;
};

struct WarpEvent {
  std::uint32_t cta = 0;
  std::uint32_t warp = 0;
  std::vector<Location> locations;
};

struct ProtectedRunResult {
  std::vector<Buffer> final_outputs;
  std::vector<WarpEvent> detections;
  std::vector<WarpEvent> corrections;
  std::vector<WarpEvent> uncorrectable;  // correct mode: no majority
  std::uint64_t cycles = 0;
  // Crash/hang of an unreplicated warp; protected warps never report one.
  Termination termination = Termination::kCompleted;
};

// Every warp runs in isolation; the fault (if any) goes to the primary copy
// only. Final outputs start from zero and receive each warp's effective
// writes in layout order.
ProtectedRunResult run_protected(const Interpreter& interp, const std::vector<Buffer>& inputs,
                                 const LaunchLayout& layout, const ProtectionPlan& plan,
                                 const std::optional<FaultSite>& fault, std::uint64_t budget = kDefaultBudget);

// {mode, protected_warps, detections:[{cta,warp,locations}], corrected:[...], cycles}
// Locations render as "buffer[index]".
std::string protection_report_json(const KernelProgram& program, const ProtectionPlan& plan,
                                   const ProtectedRunResult& result);

}  // namespace warpguard

#endif  // WARPGUARD_PROTECTOR_H_
