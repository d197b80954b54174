#ifndef WARPGUARD_INTERPRETER_H_
#define WARPGUARD_INTERPRETER_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "warpguard/kernel_ir.h"
#include "warpguard/layout.h"

namespace warpguard {

using Buffer = std::vector<std::uint32_t>;

inline constexpr std::uint64_t kDefaultBudget = 1'000'000;

enum class Termination : std::uint8_t { kCompleted, kCrashed, kHung };
std::string_view termination_name(Termination t);

// One single-bit flip: after `thread_id` executes its `dyn_instr`-th dynamic
// instruction (1-based) and writes the destination register, `bit` of the
// written value is inverted.
struct FaultSite {
  std::uint32_t thread_id = 0;
  std::uint32_t dyn_instr = 0;
  std::uint32_t bit = 0;

  friend auto operator<=>(const FaultSite&, const FaultSite&) = default;
};

struct StoreRecord {
  std::uint32_t buffer = 0;
  std::uint32_t index = 0;
  std::uint32_t value = 0;
  std::uint32_t thread_id = 0;
  friend bool operator==(const StoreRecord&, const StoreRecord&) = default;
};

struct WarpStats {
  std::uint64_t cycles = 0;
  std::uint64_t stores = 0;  // lane-level store operations
  friend bool operator==(const WarpStats&, const WarpStats&) = default;
};

struct ExecOptions {
  const LaunchLayout* layout = nullptr;  // null: linear launch order
  std::optional<FaultSite> fault;
  std::uint64_t budget = kDefaultBudget;  // dynamic instructions per thread
  // Threads whose register-writing dynamic ordinals are recorded.
  std::vector<std::uint32_t> trace_threads;
  bool log_stores = false;
};

struct ExecutionResult {
  std::vector<Buffer> outputs;
  std::vector<std::uint32_t> icnt;  // indexed by global thread id
  std::uint64_t cycles = 0;
  Termination termination = Termination::kCompleted;
  bool fault_applied = false;
  std::vector<std::vector<WarpStats>> warps;  // [cta][warp] in layout order
  std::map<std::uint32_t, std::vector<std::uint32_t>> write_ordinals;
  std::vector<StoreRecord> stores;  // in execution order, when log_stores

  bool completed() const { return termination == Termination::kCompleted; }
  friend bool operator==(const ExecutionResult&, const ExecutionResult&) = default;
};

// One warp run on its own, with barrier arrivals counted over the warp only.
// Used for replica execution; valid because threads share no data.
struct WarpRun {
  Termination termination = Termination::kCompleted;
  std::uint64_t cycles = 0;
  bool fault_applied = false;
  std::vector<StoreRecord> stores;
  std::vector<std::uint32_t> icnt;  // per lane
};

// Lock-step SIMT interpreter. Warps execute one instruction at a time for all
// active lanes; divergent branches push entries on a per-warp reconvergence
// stack and rejoin at the branch's immediate post-dominator. CTAs run one
// after another; inside a CTA each warp runs until it blocks on `bar` or
// finishes, and the barrier opens once every live thread of the CTA arrived.
//
// Immutable after construction; const members may be called concurrently.
class Interpreter {
 public:
  explicit Interpreter(KernelProgram program, CostTable costs = CostTable::defaults());

  const KernelProgram& program() const { return program_; }
  const CostTable& costs() const { return costs_; }

  ExecutionResult execute(const std::vector<Buffer>& inputs, const ExecOptions& options = {}) const;

  // Runs CTA `cta` against `outputs` in place. Result holds icnt/warps for
  // that CTA only; outputs in the result are left empty.
  ExecutionResult run_cta(std::uint32_t cta, const std::vector<Buffer>& inputs, std::vector<Buffer>& outputs,
                          const ExecOptions& options) const;

  WarpRun run_warp(std::uint32_t cta, std::span<const std::uint32_t> lanes, const std::vector<Buffer>& inputs,
                   const std::optional<FaultSite>& fault, std::uint64_t budget) const;

  // Throws ValidationError if buffer counts or sizes differ from the program.
  void check_inputs(const std::vector<Buffer>& inputs) const;
  std::vector<Buffer> zero_outputs() const;

 private:
  KernelProgram program_;
  CostTable costs_;
  std::vector<std::uint32_t> ipdom_;
};

ExecutionResult execute(const KernelProgram& program, const std::vector<Buffer>& inputs,
                        const ExecOptions& options = {}, const CostTable& costs = CostTable::defaults());

}  // namespace warpguard

#endif  // WARPGUARD_INTERPRETER_H_
