#ifndef WARPGUARD_KERNEL_IR_H_
#define WARPGUARD_KERNEL_IR_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace warpguard {

inline constexpr std::uint32_t kWarpSize = 32;
inline constexpr std::uint32_t kNumRegisters = 64;
inline constexpr std::uint32_t kTidRegister = 62;    // global thread id, read-only
inline constexpr std::uint32_t kCtaidRegister = 63;  // CTA index, read-only

enum class Opcode : std::uint8_t {
  kIAdd,
  kISub,
  kIMul,
  kFAdd,
  kFMul,
  kMov,
  kMovI,
  kLd,
  kSt,
  kSetP,
  kBra,
  kBar,
  kExit,
};
inline constexpr std::size_t kNumOpcodes = 13;

enum class Compare : std::uint8_t { kEq, kNe, kLt, kLe, kGt, kGe };

std::string_view opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);
std::string_view compare_name(Compare cmp);

// True exactly for the opcodes that produce a destination register value,
// i.e. the opcodes that can host a fault site.
constexpr bool writes_register(Opcode op) {
  switch (op) {
    case Opcode::kSt:
    case Opcode::kBra:
    case Opcode::kBar:
    case Opcode::kExit:
      return false;
    default:
      return true;
  }
}

struct Operand {
  bool immediate = false;
  std::uint32_t value = 0;  // register index, or raw 32-bit immediate bits

  static Operand reg(std::uint32_t index) { return {false, index}; }
  static Operand imm(std::uint32_t bits) { return {true, bits}; }
  friend bool operator==(const Operand&, const Operand&) = default;
};

// Operand usage by opcode:
//   iadd/isub/imul/fadd/fmul/setp  dest, src[0]=reg, src[1]=reg|imm
//   mov                            dest, src[0]=reg
//   movi                           dest, src[0]=imm
//   ld                             dest, buffer (input), src[0]=address reg
//   st                             buffer (output), src[0]=address reg, src[1]=value reg
//   bra                            target, optional predicate in src[0]
struct Instruction {
  Opcode op = Opcode::kExit;
  std::uint8_t dest = 0;
  std::array<Operand, 2> src{};
  std::int32_t buffer = -1;
  Compare cmp = Compare::kEq;
  bool predicated = false;
  bool negate = false;
  std::uint32_t target = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct BufferDecl {
  std::string name;
  std::uint32_t size = 0;
  friend bool operator==(const BufferDecl&, const BufferDecl&) = default;
};

struct Label {
  std::string name;
  std::uint32_t pc = 0;
  friend bool operator==(const Label&, const Label&) = default;
};

struct KernelProgram {
  std::string name = "kernel";
  std::uint32_t num_ctas = 1;
  std::uint32_t cta_size = kWarpSize;
  std::vector<BufferDecl> inputs;
  std::vector<BufferDecl> outputs;
  std::vector<Instruction> instructions;
  std::vector<Label> labels;  // in definition order

  std::uint32_t total_threads() const { return num_ctas * cta_size; }
  std::optional<std::size_t> input_index(std::string_view buffer) const;
  std::optional<std::size_t> output_index(std::string_view buffer) const;

  friend bool operator==(const KernelProgram&, const KernelProgram&) = default;
};

// Parses the line-oriented IR text. Throws ParseError (with line number) on
// syntax errors, undefined labels/buffers and register indices >= 64, and
// ValidationError when the control-flow checks of validate() fail.
KernelProgram parse_kernel(std::string_view text);
KernelProgram load_kernel(const std::filesystem::path& path);

// Renders a program back to IR text; parse_kernel(to_text(p)) == p.
std::string to_text(const KernelProgram& program);

// Structural checks shared by the parser and KernelBuilder: geometry, buffer
// declarations, register bounds, read-only tid/ctaid, branch targets, and that
// every instruction reachable from entry can reach an `exit` without falling
// off the end of the program.
void validate(const KernelProgram& program);

// Successor pcs of each instruction; the value instructions.size() stands for
// the virtual exit node.
std::vector<std::vector<std::uint32_t>> control_flow_successors(const KernelProgram& program);

// Immediate post-dominator of every instruction (virtual exit = size()).
// Divergent branches reconverge there.
std::vector<std::uint32_t> immediate_post_dominators(const KernelProgram& program);

// Programmatic construction, resolving labels on build().
class KernelBuilder {
 public:
  explicit KernelBuilder(std::string name);

  KernelBuilder& ctas(std::uint32_t n);
  KernelBuilder& cta_size(std::uint32_t n);
  KernelBuilder& input(std::string name, std::uint32_t size);
  KernelBuilder& output(std::string name, std::uint32_t size);

  KernelBuilder& label(std::string name);
  KernelBuilder& arith(Opcode op, std::uint32_t dest, std::uint32_t a, Operand b);
  KernelBuilder& setp(Compare cmp, std::uint32_t dest, std::uint32_t a, Operand b);
  KernelBuilder& mov(std::uint32_t dest, std::uint32_t src);
  KernelBuilder& movi(std::uint32_t dest, std::uint32_t bits);
  KernelBuilder& ld(std::uint32_t dest, std::string_view buffer, std::uint32_t addr);
  KernelBuilder& st(std::string_view buffer, std::uint32_t addr, std::uint32_t value);
  KernelBuilder& bra(std::string target);
  KernelBuilder& bra_if(std::uint32_t pred, std::string target, bool negate = false);
  KernelBuilder& bar();
  KernelBuilder& exit();

  KernelProgram build() const;

 private:
  KernelProgram program_;
  std::vector<std::pair<std::size_t, std::string>> pending_targets_;
};

// Cycles charged per issued warp-instruction, plus the per-store constants used
// when replica outputs are compared (DMR) or voted (TMR).
struct CostTable {
  std::array<std::uint32_t, kNumOpcodes> opcode_cycles{};
  std::uint32_t compare_per_store = 1;
  std::uint32_t vote_per_store = 2;

  static CostTable defaults();
  // {"opcodes": {"ld": 4, ...}, "compare_per_store": 1, "vote_per_store": 2};
  // keys not present keep their default values.
  static CostTable from_json(std::string_view text);
  static CostTable load(const std::filesystem::path& path);

  std::uint32_t cycles(Opcode op) const { return opcode_cycles[static_cast<std::size_t>(op)]; }
  friend bool operator==(const CostTable&, const CostTable&) = default;
};

}  // namespace warpguard

#endif  // WARPGUARD_KERNEL_IR_H_
