#ifndef WARPGUARD_BENCHGEN_H_
#define WARPGUARD_BENCHGEN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "warpguard/classifier.h"
#include "warpguard/fraction.h"
#include "warpguard/interpreter.h"
#include "warpguard/profiler.h"

namespace warpguard {

// Declared resilience of a set of threads. count == 0 shares out whatever the
// explicit counts leave over.
struct SdcLevel {
  Fraction sdc;
  Fraction other{0};
  std::uint32_t count = 0;
};

struct Block {
  bool reliable = false;
  std::uint32_t count = 0;
};

// Per CTA: total reliable threads, how many warps are entirely reliable or
// entirely unreliable. Remaining warps are mixed and each holds 1..31
// reliable threads.
struct ScatterCta {
  std::uint32_t reliable_threads = 0;
  std::uint32_t pure_reliable_warps = 0;
  std::uint32_t pure_unreliable_warps = 0;
};

enum class PatternKind : std::uint8_t {
  kAllReliable,
  kAllUnreliable,
  kPrefixUnreliable,
  kAlternating,
  kPerCtaBlocks,
  kScattered,
};

struct Pattern {
  PatternKind kind = PatternKind::kAllReliable;
  std::uint32_t prefix = 0;                // kPrefixUnreliable: first k global threads
  std::vector<std::vector<Block>> blocks;  // kPerCtaBlocks, one list per CTA
  std::vector<ScatterCta> scattered;       // kScattered, one entry per CTA

  std::string describe() const;
};

struct FixtureSpec {
  std::string name;   // kernel identifier
  std::string label;  // benchmark and kernel as printed in reports
  std::string category;
  bool remappable = false;
  std::uint32_t num_ctas = 1;
  std::uint32_t cta_size = 32;
  Pattern pattern;
  std::vector<SdcLevel> reliable_levels;
  std::vector<SdcLevel> unreliable_levels;
  std::optional<Fraction> pure_level;  // reliable threads sitting in all-reliable warps
  Fraction tau{1, 20};
  // Two-decimal percentages (reliable warps, reliable threads) the generated
  // fixture must reproduce.
  std::optional<std::pair<std::string, std::string>> target;
  std::string note;
};

struct Fixture {
  FixtureSpec spec;
  KernelProgram program;
  std::vector<Buffer> inputs;
  KernelProfile profile;
  ReliabilityFlags flags;  // at spec.tau
};

// Reliable flags realising the pattern; deterministic per seed.
ReliabilityFlags pattern_flags(const FixtureSpec& spec, std::uint64_t seed);

// Kernel, inputs and declared profile. The kernel sends reliable threads
// through a loop whose results are dead and unreliable threads through a loop
// that folds every value into the output; each resilience class gets its own
// trip count and therefore its own iCnt. Throws ValidationError when the
// result misses spec.target.
Fixture generate_fixture(const FixtureSpec& spec, std::uint64_t seed = 1);

// One fixture per benchmark kernel of the characterization table.
std::vector<FixtureSpec> fixture_suite();
// Extra patterns outside the table, e.g. "alternating" (1 x 64, even threads
// reliable).
std::vector<FixtureSpec> auxiliary_fixtures();
// Searches the suite, then the auxiliary fixtures.
std::optional<FixtureSpec> find_fixture(std::string_view name);

std::string fixture_manifest_json(const std::vector<FixtureSpec>& specs, std::uint64_t seed = 1);

// Small kernels used by tests, examples and the acceptance suite.

// out[tid] = in[tid] + 1
std::string add_one_source(std::uint32_t ctas = 2, std::uint32_t cta_size = 32);
KernelProgram add_one_kernel(std::uint32_t ctas = 2, std::uint32_t cta_size = 32);
// in[i] = 5 + i
std::vector<Buffer> add_one_inputs(const KernelProgram& program);

// The load address is computed by an iadd, so flipping its high bit crashes.
KernelProgram address_kernel(std::uint32_t ctas = 1, std::uint32_t cta_size = 32);

// Branches on sel[tid] = tid & 1: even threads run 8 instructions, odd 12.
KernelProgram parity_kernel(std::uint32_t ctas = 2, std::uint32_t cta_size = 32);
std::vector<Buffer> parity_inputs(const KernelProgram& program);

// Contains a register write that is overwritten before any read.
KernelProgram dead_write_kernel(std::uint32_t ctas = 1, std::uint32_t cta_size = 32);

// Inputs for any kernel: input buffer b, word i holds seeded pseudo-random
// data, or i itself when seed is absent.
std::vector<Buffer> default_inputs(const KernelProgram& program, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace warpguard

#endif  // WARPGUARD_BENCHGEN_H_
