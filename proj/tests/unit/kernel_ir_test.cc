#include "warpguard/kernel_ir.h"

#include <gtest/gtest.h>

#include <string>

#include "test_support.h"
#include "warpguard/benchgen.h"
#include "warpguard/errors.h"

namespace warpguard {
namespace {

std::size_t parse_error_line(const std::string& text) {
  try {
    parse_kernel(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ParseError for:\n" << text;
  return 0;
}

TEST(KernelIr, MinimalProgram) {
  const KernelProgram p = parse_kernel(".out out 32\nmovi r0, 1; st out[tid], r0; exit\n");
  ASSERT_EQ(p.instructions.size(), 3u);
  EXPECT_EQ(p.instructions[0].op, Opcode::kMovI);
  EXPECT_EQ(p.instructions[1].op, Opcode::kSt);
  EXPECT_EQ(p.instructions[1].src[0], Operand::reg(kTidRegister));
  EXPECT_EQ(p.instructions[2].op, Opcode::kExit);
  EXPECT_EQ(p.num_ctas, 1u);
  EXPECT_EQ(p.cta_size, 32u);
}

TEST(KernelIr, RegisterOutOfRange) {
  EXPECT_EQ(parse_error_line(".out out 32\nmovi r64, 1\nexit\n"), 2u);
  EXPECT_NO_THROW(parse_kernel(".out out 32\nmovi r61, 1\nexit\n"));
}

TEST(KernelIr, ReadOnlyRegisters) {
  EXPECT_EQ(parse_error_line(".out out 32\nmovi r62, 1\nexit\n"), 2u);
  EXPECT_EQ(parse_error_line(".out out 32\nexit\nmovi ctaid, 1\nexit\n"), 3u);
}

TEST(KernelIr, AddOneSourceMatchesBuilder) {
  EXPECT_EQ(parse_kernel(add_one_source()), add_one_kernel());
  EXPECT_EQ(parse_kernel(add_one_source(3, 64)), add_one_kernel(3, 64));
}

TEST(KernelIr, CommentsLabelsAndImmediates) {
  const KernelProgram p = parse_kernel(
      "# header comment\n"
      ".kernel k\n.ctas 2\n.ctasize 64\n.in a 128\n.out b 128\n"
      "  ld r0, a[tid]   # trailing comment\n"
      "  movi r1, -1; movi r2, 0x10; movi r3, 1.5\n"
      "top: again: setp.lt r4, r0, 7\n"
      "  bra !r4, done\n"
      "  iadd r0, r0, 1\n"
      "  bra top\n"
      "done:\n"
      "  st b[tid], r0\n"
      "  exit\n");
  EXPECT_EQ(p.name, "k");
  EXPECT_EQ(p.total_threads(), 128u);
  EXPECT_EQ(p.instructions[1].src[0], Operand::imm(0xffffffffu));
  EXPECT_EQ(p.instructions[2].src[0], Operand::imm(16));
  EXPECT_EQ(p.instructions[3].src[0], Operand::imm(0x3fc00000u));
  EXPECT_TRUE(p.instructions[5].predicated);
  EXPECT_TRUE(p.instructions[5].negate);
  EXPECT_EQ(p.instructions[5].target, 8u);
  EXPECT_EQ(p.instructions[7].target, 4u);
  EXPECT_EQ(parse_kernel(to_text(p)), p);
}

TEST(KernelIr, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line(".out out 32\nbra nowhere\nexit\n"), 2u);
  EXPECT_EQ(parse_error_line(".in a 32\n.out b 32\nst a[tid], r0\nexit\n"), 3u);
  EXPECT_EQ(parse_error_line(".in a 32\n.out b 32\nld r0, b[tid]\nexit\n"), 3u);
  EXPECT_EQ(parse_error_line(".out out 32\nfrob r0, r1\nexit\n"), 2u);
  EXPECT_EQ(parse_error_line(".out out 32\n.out out 32\nexit\n"), 2u);
  EXPECT_EQ(parse_error_line(".out out 32\nsetp r0, r1, r2\nexit\n"), 2u);
  EXPECT_EQ(parse_error_line(".out out 32\nx: x: exit\n"), 2u);
  EXPECT_EQ(parse_error_line(".ctas 0\nexit\n"), 1u);
}

TEST(KernelIr, ValidationRejectsFallingOffTheEnd) {
  EXPECT_THROW(parse_kernel(".out out 32\nmovi r0, 1\n"), ValidationError);
  // A loop with no way out.
  EXPECT_THROW(parse_kernel(".out out 32\nl: bra l\nexit\n"), ValidationError);
  EXPECT_THROW(parse_kernel(""), ValidationError);
}

TEST(KernelIr, ImmediatePostDominatorsOfADiamond) {
  const KernelProgram p = parse_kernel(
      ".in a 32\n.out b 32\n"
      "ld r0, a[tid]\n"         // 0
      "setp.eq r1, r0, 0\n"     // 1
      "bra r1, else\n"          // 2
      "iadd r0, r0, 1\n"        // 3
      "bra join\n"              // 4
      "else: isub r0, r0, 1\n"  // 5
      "join: st b[tid], r0\n"   // 6
      "exit\n");                // 7
  const auto ipdom = immediate_post_dominators(p);
  EXPECT_EQ(ipdom[2], 6u);
  EXPECT_EQ(ipdom[3], 4u);
  EXPECT_EQ(ipdom[4], 6u);
  EXPECT_EQ(ipdom[5], 6u);
  EXPECT_EQ(ipdom[7], 8u);  // the virtual exit node
  const auto succ = control_flow_successors(p);
  EXPECT_EQ(succ[2], (std::vector<std::uint32_t>{5, 3}));
}

TEST(KernelIr, BuilderRejectsUnknownBuffers) {
  KernelBuilder b("k");
  b.output("out", 32);
  EXPECT_THROW(b.ld(0, "missing", kTidRegister), ValidationError);
  EXPECT_THROW(b.st("missing", kTidRegister, 0), ValidationError);
  EXPECT_THROW(KernelBuilder("k").output("out", 32).bra("nowhere").exit().build(), ValidationError);
}

TEST(CostTable, DefaultsAndJson) {
  const CostTable d = CostTable::defaults();
  EXPECT_EQ(d.cycles(Opcode::kIAdd), 1u);
  EXPECT_EQ(d.cycles(Opcode::kBra), 1u);
  EXPECT_EQ(d.cycles(Opcode::kLd), 4u);
  EXPECT_EQ(d.cycles(Opcode::kSt), 4u);
  EXPECT_EQ(d.cycles(Opcode::kBar), 2u);
  EXPECT_EQ(d.compare_per_store, 1u);
  EXPECT_EQ(d.vote_per_store, 2u);

  const CostTable t = CostTable::from_json(R"({"opcodes": {"imul": 3}, "compare_per_store": 0})");
  EXPECT_EQ(t.cycles(Opcode::kIMul), 3u);
  EXPECT_EQ(t.cycles(Opcode::kLd), 4u);
  EXPECT_EQ(t.compare_per_store, 0u);
  EXPECT_EQ(t.vote_per_store, 2u);
  EXPECT_THROW(CostTable::from_json(R"({"opcodes": {"frob": 1}})"), ValidationError);
  EXPECT_THROW(CostTable::from_json(R"({"compare": 1})"), ValidationError);
  EXPECT_THROW(CostTable::from_json(R"({"vote_per_store": -1})"), ValidationError);
  EXPECT_THROW(CostTable::from_json("[1]"), ValidationError);
}

// Random structured programs: straight-line arithmetic with forward branches
// and a few backward loops over a counter.
KernelProgram random_program(testing::Gen& gen) {
  const std::uint32_t n = 32 * static_cast<std::uint32_t>(gen.range(1, 4));
  KernelBuilder b("rnd");
  b.ctas(static_cast<std::uint32_t>(gen.range(1, 3))).cta_size(n).input("a", 4096).output("b", 4096);
  b.ld(0, "a", kTidRegister);
  const int blocks = static_cast<int>(gen.range(1, 5));
  for (int k = 0; k < blocks; ++k) {
    const std::string skip = "skip" + std::to_string(k);
    const bool branch = gen.coin();
    if (branch) {
      b.setp(static_cast<Compare>(gen.below(6)), 20, static_cast<std::uint32_t>(gen.below(8)), Operand::imm(gen.word()));
      b.bra_if(20, skip, gen.coin());
    }
    const int len = static_cast<int>(gen.range(1, 6));
    for (int i = 0; i < len; ++i) {
      const auto dest = static_cast<std::uint32_t>(gen.below(8));
      const auto a = static_cast<std::uint32_t>(gen.below(8));
      const Operand rhs = gen.coin() ? Operand::imm(gen.word()) : Operand::reg(static_cast<std::uint32_t>(gen.below(8)));
      switch (gen.below(5)) {
        case 0: b.arith(Opcode::kIAdd, dest, a, rhs); break;
        case 1: b.arith(Opcode::kIMul, dest, a, rhs); break;
        case 2: b.arith(Opcode::kFMul, dest, a, rhs); break;
        case 3: b.movi(dest, gen.word()); break;
        default: b.mov(dest, a); break;
      }
    }
    if (branch) b.label(skip);
  }
  b.st("b", kTidRegister, static_cast<std::uint32_t>(gen.below(8)));
  b.exit();
  return b.build();
}

TEST(KernelIrProperty, TextRoundTrip) {
  testing::Gen gen(21);
  for (int i = 0; i < 300; ++i) {
    const KernelProgram p = random_program(gen);
    const std::string text = to_text(p);
    EXPECT_EQ(parse_kernel(text), p) << text;
    EXPECT_EQ(to_text(parse_kernel(text)), text);
  }
}

}  // namespace
}  // namespace warpguard
