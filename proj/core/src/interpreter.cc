#include "warpguard/interpreter.h"

#include <algorithm>
#include <array>
#include <bit>
#include <string>

#include "warpguard/errors.h"

namespace warpguard {
namespace {

struct Lane {
  std::array<std::uint32_t, kNumRegisters> regs{};
  std::uint32_t tid = 0;
  std::uint32_t icnt = 0;
  bool exited = false;
  std::vector<std::uint32_t>* trace = nullptr;
};

struct StackEntry {
  std::uint32_t pc;
  std::uint32_t rpc;  // reconvergence pc; size() for the outermost entry
  std::uint32_t mask;
};

struct WarpCtx {
  std::vector<Lane> lanes;
  std::vector<StackEntry> stack;
  bool at_barrier = false;
  bool done = false;
  WarpStats stats;
};

float as_float(std::uint32_t bits) { return std::bit_cast<float>(bits); }
std::uint32_t as_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

bool compare(Compare cmp, std::int32_t a, std::int32_t b) {
  switch (cmp) {
    case Compare::kEq: return a == b;
    case Compare::kNe: return a != b;
    case Compare::kLt: return a < b;
    case Compare::kLe: return a <= b;
    case Compare::kGt: return a > b;
    case Compare::kGe: return a >= b;
  }
  return false;
}

// Executes a group of warps that share one barrier scope.
class Engine {
 public:
  Engine(const KernelProgram& program, const CostTable& costs, const std::vector<std::uint32_t>& ipdom,
         const std::vector<Buffer>& inputs, std::vector<Buffer>& outputs, const std::optional<FaultSite>& fault,
         std::uint64_t budget, std::vector<StoreRecord>* store_log)
      : program_(program),
        costs_(costs),
        ipdom_(ipdom),
        inputs_(inputs),
        outputs_(outputs),
        fault_(fault),
        budget_(budget),
        store_log_(store_log) {}

  void add_warp(std::uint32_t cta, std::span<const std::uint32_t> tids,
                std::map<std::uint32_t, std::vector<std::uint32_t>>* traces) {
    WarpCtx w;
    w.lanes.resize(tids.size());
    for (std::size_t i = 0; i < tids.size(); ++i) {
      Lane& lane = w.lanes[i];
      lane.tid = tids[i];
      lane.regs[kTidRegister] = tids[i];
      lane.regs[kCtaidRegister] = cta;
      if (traces) {
        auto it = traces->find(tids[i]);
        if (it != traces->end()) lane.trace = &it->second;
      }
    }
    const std::uint32_t mask =
        tids.size() >= 32 ? 0xffffffffu : static_cast<std::uint32_t>((1ULL << tids.size()) - 1);
    w.stack.push_back({0, static_cast<std::uint32_t>(program_.instructions.size()), mask});
    w.done = mask == 0;
    warps_.push_back(std::move(w));
  }

  Termination run() {
    while (true) {
      for (auto& w : warps_) {
        if (w.done || w.at_barrier) continue;
        Termination t = run_until_blocked(w);
        if (t != Termination::kCompleted) return t;
      }
      if (std::all_of(warps_.begin(), warps_.end(), [](const WarpCtx& w) { return w.done; })) {
        return Termination::kCompleted;
      }
      std::uint64_t live = 0;
      for (const auto& w : warps_) {
        for (const auto& lane : w.lanes) live += lane.exited ? 0 : 1;
      }
      if (arrivals_ != live) return Termination::kHung;  // barrier deadlock
      arrivals_ = 0;
      for (auto& w : warps_) w.at_barrier = false;
    }
  }

  bool fault_applied() const { return fault_applied_; }
  const std::vector<WarpCtx>& warps() const { return warps_; }

 private:
  Termination run_until_blocked(WarpCtx& w) {
    const auto& code = program_.instructions;
    while (true) {
      while (!w.stack.empty() && (w.stack.back().mask == 0 || w.stack.back().pc == w.stack.back().rpc)) {
        w.stack.pop_back();
      }
      if (w.stack.empty()) {
        w.done = true;
        return Termination::kCompleted;
      }
      StackEntry& top = w.stack.back();
      const std::uint32_t pc = top.pc;
      const std::uint32_t active = top.mask;
      const Instruction& in = code[pc];
      w.stats.cycles += costs_.cycles(in.op);

      for (std::uint32_t m = active; m != 0; m &= m - 1) {
        Lane& lane = w.lanes[static_cast<std::size_t>(std::countr_zero(m))];
        if (++lane.icnt > budget_) return Termination::kHung;
      }

      switch (in.op) {
        case Opcode::kBra: {
          std::uint32_t taken = 0;
          for (std::uint32_t m = active; m != 0; m &= m - 1) {
            int i = std::countr_zero(m);
            bool t = !in.predicated || ((w.lanes[static_cast<std::size_t>(i)].regs[in.src[0].value] != 0) != in.negate);
            if (t) taken |= 1u << i;
          }
          const std::uint32_t not_taken = active & ~taken;
          if (not_taken == 0) {
            top.pc = in.target;
          } else if (taken == 0) {
            top.pc = pc + 1;
          } else {
            const std::uint32_t reconv = ipdom_[pc];
            top.pc = reconv;
            if (pc + 1 != reconv) w.stack.push_back({pc + 1, reconv, not_taken});
            if (in.target != reconv) w.stack.push_back({in.target, reconv, taken});
          }
          continue;
        }
        case Opcode::kBar:
          top.pc = pc + 1;
          arrivals_ += static_cast<std::uint64_t>(std::popcount(active));
          w.at_barrier = true;
          return Termination::kCompleted;
        case Opcode::kExit:
          for (std::uint32_t m = active; m != 0; m &= m - 1) {
            w.lanes[static_cast<std::size_t>(std::countr_zero(m))].exited = true;
          }
          for (auto& e : w.stack) e.mask &= ~active;
          continue;
        default:
          break;
      }

      for (std::uint32_t m = active; m != 0; m &= m - 1) {
        Lane& lane = w.lanes[static_cast<std::size_t>(std::countr_zero(m))];
        auto& r = lane.regs;
        auto operand = [&](const Operand& o) { return o.immediate ? o.value : r[o.value]; };
        switch (in.op) {
          case Opcode::kIAdd: r[in.dest] = r[in.src[0].value] + operand(in.src[1]); break;
          case Opcode::kISub: r[in.dest] = r[in.src[0].value] - operand(in.src[1]); break;
          case Opcode::kIMul: r[in.dest] = r[in.src[0].value] * operand(in.src[1]); break;
          case Opcode::kFAdd:
            r[in.dest] = as_bits(as_float(r[in.src[0].value]) + as_float(operand(in.src[1])));
            break;
          case Opcode::kFMul:
            r[in.dest] = as_bits(as_float(r[in.src[0].value]) * as_float(operand(in.src[1])));
            break;
          case Opcode::kMov: r[in.dest] = r[in.src[0].value]; break;
          case Opcode::kMovI: r[in.dest] = in.src[0].value; break;
          case Opcode::kSetP:
            r[in.dest] = compare(in.cmp, static_cast<std::int32_t>(r[in.src[0].value]),
                                 static_cast<std::int32_t>(operand(in.src[1])))
                             ? 1u
                             : 0u;
            break;
          case Opcode::kLd: {
            const Buffer& buf = inputs_[static_cast<std::size_t>(in.buffer)];
            const std::uint32_t addr = r[in.src[0].value];
            if (addr >= buf.size()) return Termination::kCrashed;
            r[in.dest] = buf[addr];
            break;
          }
          case Opcode::kSt: {
            Buffer& buf = outputs_[static_cast<std::size_t>(in.buffer)];
            const std::uint32_t addr = r[in.src[0].value];
            if (addr >= buf.size()) return Termination::kCrashed;
            buf[addr] = r[in.src[1].value];
            ++w.stats.stores;
            if (store_log_) {
              store_log_->push_back({static_cast<std::uint32_t>(in.buffer), addr, r[in.src[1].value], lane.tid});
            }
            break;
          }
          default:
            break;
        }
        if (writes_register(in.op)) {
          if (lane.trace) lane.trace->push_back(lane.icnt);
          if (fault_ && fault_->thread_id == lane.tid && fault_->dyn_instr == lane.icnt) {
            r[in.dest] ^= 1u << (fault_->bit & 31u);
            fault_applied_ = true;
          }
        }
      }
      top.pc = pc + 1;
    }
  }

  const KernelProgram& program_;
  const CostTable& costs_;
  const std::vector<std::uint32_t>& ipdom_;
  const std::vector<Buffer>& inputs_;
  std::vector<Buffer>& outputs_;
  const std::optional<FaultSite>& fault_;
  std::uint64_t budget_;
  std::vector<StoreRecord>* store_log_;
  std::vector<WarpCtx> warps_;
  std::uint64_t arrivals_ = 0;
  bool fault_applied_ = false;
};

}  // namespace

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kCompleted: return "completed";
    case Termination::kCrashed: return "crashed";
    case Termination::kHung: return "hung";
  }
  return "?";
}

Interpreter::Interpreter(KernelProgram program, CostTable costs)
    : program_(std::move(program)), costs_(costs) {
  validate(program_);
  ipdom_ = immediate_post_dominators(program_);
}

void Interpreter::check_inputs(const std::vector<Buffer>& inputs) const {
  if (inputs.size() != program_.inputs.size()) {
    throw ValidationError("kernel declares " + std::to_string(program_.inputs.size()) + " input buffers, got " +
                          std::to_string(inputs.size()));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != program_.inputs[i].size) {
      throw ValidationError("input buffer '" + program_.inputs[i].name + "' expects " +
                            std::to_string(program_.inputs[i].size) + " words, got " +
                            std::to_string(inputs[i].size()));
    }
  }
}

std::vector<Buffer> Interpreter::zero_outputs() const {
  std::vector<Buffer> out;
  out.reserve(program_.outputs.size());
  for (const auto& b : program_.outputs) out.emplace_back(b.size, 0u);
  return out;
}

ExecutionResult Interpreter::run_cta(std::uint32_t cta, const std::vector<Buffer>& inputs,
                                     std::vector<Buffer>& outputs, const ExecOptions& options) const {
  if (options.budget == 0) throw ValidationError("instruction budget must be positive");
  const LaunchLayout linear =
      options.layout ? LaunchLayout() : LaunchLayout({[&] {
        std::vector<std::uint32_t> ids(program_.cta_size);
        for (std::uint32_t i = 0; i < program_.cta_size; ++i) ids[i] = cta * program_.cta_size + i;
        return ids;
      }()});
  const LaunchLayout& layout = options.layout ? *options.layout : linear;
  const std::uint32_t layout_cta = options.layout ? cta : 0;

  ExecutionResult result;
  for (auto tid : options.trace_threads) {
    if (tid / program_.cta_size == cta) result.write_ordinals[tid];
  }
  Engine engine(program_, costs_, ipdom_, inputs, outputs, options.fault, options.budget,
                options.log_stores ? &result.stores : nullptr);
  const std::uint32_t nwarps = layout.warps_in_cta(layout_cta);
  for (std::uint32_t w = 0; w < nwarps; ++w) engine.add_warp(cta, layout.warp(layout_cta, w), &result.write_ordinals);
  result.termination = engine.run();
  result.fault_applied = engine.fault_applied();
  result.warps.emplace_back();
  for (const auto& w : engine.warps()) {
    result.warps.back().push_back(w.stats);
    result.cycles += w.stats.cycles;
  }
  result.icnt.assign(program_.cta_size, 0);
  for (const auto& w : engine.warps()) {
    for (const auto& lane : w.lanes) result.icnt[lane.tid - cta * program_.cta_size] = lane.icnt;
  }
  return result;
}

ExecutionResult Interpreter::execute(const std::vector<Buffer>& inputs, const ExecOptions& options) const {
  check_inputs(inputs);
  if (options.layout) options.layout->validate_for(program_.num_ctas, program_.cta_size);
  ExecutionResult result;
  result.outputs = zero_outputs();
  result.icnt.assign(program_.total_threads(), 0);
  for (auto tid : options.trace_threads) {
    if (tid >= program_.total_threads()) throw ValidationError("traced thread out of range");
  }
  for (std::uint32_t c = 0; c < program_.num_ctas; ++c) {
    ExecutionResult part = run_cta(c, inputs, result.outputs, options);
    std::copy(part.icnt.begin(), part.icnt.end(), result.icnt.begin() + static_cast<std::ptrdiff_t>(c) * program_.cta_size);
    result.cycles += part.cycles;
    result.fault_applied = result.fault_applied || part.fault_applied;
    result.warps.push_back(std::move(part.warps.front()));
    result.write_ordinals.merge(part.write_ordinals);
    result.stores.insert(result.stores.end(), part.stores.begin(), part.stores.end());
    if (part.termination != Termination::kCompleted) {
      result.termination = part.termination;
      break;
    }
  }
  return result;
}

WarpRun Interpreter::run_warp(std::uint32_t cta, std::span<const std::uint32_t> lanes,
                              const std::vector<Buffer>& inputs, const std::optional<FaultSite>& fault,
                              std::uint64_t budget) const {
  if (budget == 0) throw ValidationError("instruction budget must be positive");
  if (lanes.size() > kWarpSize) throw ValidationError("a warp holds at most 32 threads");
  std::vector<Buffer> scratch = zero_outputs();
  WarpRun run;
  Engine engine(program_, costs_, ipdom_, inputs, scratch, fault, budget, &run.stores);
  engine.add_warp(cta, lanes, nullptr);
  run.termination = engine.run();
  run.fault_applied = engine.fault_applied();
  run.cycles = engine.warps().front().stats.cycles;
  for (const auto& lane : engine.warps().front().lanes) run.icnt.push_back(lane.icnt);
  return run;
}

ExecutionResult execute(const KernelProgram& program, const std::vector<Buffer>& inputs, const ExecOptions& options,
                        const CostTable& costs) {
  return Interpreter(program, costs).execute(inputs, options);
}

}  // namespace warpguard
