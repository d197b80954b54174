#include "warpguard/remapper.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_support.h"
#include "warpguard/benchgen.h"
#include "warpguard/errors.h"
#include "warpguard/fault_engine.h"

namespace warpguard {
namespace {

std::vector<std::uint32_t> iota_ids(std::uint32_t from, std::uint32_t to) {
  std::vector<std::uint32_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

// Independent formulation of the buffer scan: the k-th full warp of a kind is
// emitted when the scan reaches that kind's (32k+31)-th thread, so full chunks
// sort by the position of their last member; the two tails follow.
std::vector<std::uint32_t> oracle_order(const ReliabilityFlags& flags, std::uint32_t c, std::uint32_t size) {
  std::vector<std::uint32_t> rel, unrel;
  for (std::uint32_t i = 0; i < size; ++i) (flags[c * size + i] ? rel : unrel).push_back(c * size + i);
  std::vector<std::vector<std::uint32_t>> chunks;
  for (const auto* list : {&rel, &unrel}) {
    for (std::size_t k = 0; k + 32 <= list->size(); k += 32) chunks.emplace_back(list->begin() + k, list->begin() + k + 32);
  }
  std::sort(chunks.begin(), chunks.end(), [](const auto& a, const auto& b) { return a.back() < b.back(); });
  std::vector<std::uint32_t> out;
  for (const auto& ch : chunks) out.insert(out.end(), ch.begin(), ch.end());
  out.insert(out.end(), rel.begin() + static_cast<std::ptrdiff_t>(rel.size() / 32 * 32), rel.end());
  out.insert(out.end(), unrel.begin() + static_cast<std::ptrdiff_t>(unrel.size() / 32 * 32), unrel.end());
  return out;
}

TEST(Remapper, AlternatingCta) {
  ReliabilityFlags f(64);
  for (std::size_t i = 0; i < 64; i += 2) f[i] = true;
  const RemapPlan plan = build_plan(f, 1, 64);
  std::vector<std::uint32_t> expect;
  for (std::uint32_t i = 0; i < 64; i += 2) expect.push_back(i);
  for (std::uint32_t i = 1; i < 64; i += 2) expect.push_back(i);
  EXPECT_EQ(plan.layout.cta(0), expect);
  const auto before = classify_warps(f, LaunchLayout::linear(1, 64));
  const auto after = classify_warps(f, plan.layout);
  EXPECT_EQ(before[0].cls, WarpClass::kMixed);
  EXPECT_EQ(before[1].cls, WarpClass::kMixed);
  EXPECT_EQ(after[0].cls, WarpClass::kReliable);
  EXPECT_EQ(after[1].cls, WarpClass::kUnreliable);
}

TEST(Remapper, AllReliableIsIdentity) {
  const RemapPlan plan = build_plan(ReliabilityFlags(128, true), 2, 64);
  EXPECT_EQ(plan.layout, LaunchLayout::linear(2, 64));
  EXPECT_EQ(build_plan(ReliabilityFlags(128, false), 2, 64).layout, LaunchLayout::linear(2, 64));
}

TEST(Remapper, PartialBuffersMerge) {
  ReliabilityFlags f(64, false);
  for (std::size_t i = 0; i < 40; ++i) f[i] = true;
  const RemapPlan plan = build_plan(f, 1, 64);
  EXPECT_EQ(plan.layout, LaunchLayout::linear(1, 64));
  const auto warps = classify_warps(f, plan.layout);
  EXPECT_EQ(warps[0].cls, WarpClass::kReliable);
  EXPECT_EQ(warps[0].members, iota_ids(0, 32));
  EXPECT_EQ(warps[1].cls, WarpClass::kMixed);
  EXPECT_EQ(warps[1].members, iota_ids(32, 64));
}

TEST(Remapper, OddCtaSizeSpillsIntoTwoMixedWarps) {
  ReliabilityFlags f(48, false);
  for (std::size_t i = 0; i < 48; i += 2) f[i] = true;  // 24 + 24
  const auto warps = classify_warps(f, build_plan(f, 1, 48).layout);
  ASSERT_EQ(warps.size(), 2u);
  EXPECT_EQ(warps[0].cls, WarpClass::kMixed);
  EXPECT_EQ(warps[1].cls, WarpClass::kUnreliable);
}

TEST(Remapper, GeometryMismatch) {
  EXPECT_THROW(build_plan(ReliabilityFlags(63), 1, 64), ValidationError);
}

TEST(Remapper, ApplyPlanValidates) {
  const KernelProgram p = add_one_kernel(2, 32);
  RemapPlan plan;
  plan.kernel = p.name;
  plan.layout = LaunchLayout({iota_ids(0, 32), iota_ids(32, 64)});
  EXPECT_NO_THROW(apply_plan(p, plan));

  auto cross = plan;
  std::vector<std::uint32_t> c0 = iota_ids(0, 32), c1 = iota_ids(32, 64);
  std::swap(c0[0], c1[0]);
  cross.layout = LaunchLayout({c0, c1});
  EXPECT_THROW(apply_plan(p, cross), ValidationError);

  auto dup = plan;
  c0 = iota_ids(0, 32);
  c0[1] = 0;
  dup.layout = LaunchLayout({c0, iota_ids(32, 64)});
  EXPECT_THROW(apply_plan(p, dup), ValidationError);

  auto other = plan;
  other.kernel = "something_else";
  EXPECT_THROW(apply_plan(p, other), ValidationError);
}

TEST(Remapper, OutputsUnchangedAfterRemap) {
  const KernelProgram p = parity_kernel(2, 64);
  const auto in = parity_inputs(p);
  ReliabilityFlags f(128);
  for (std::size_t i = 0; i < 128; ++i) f[i] = i % 2 == 0;
  RemapPlan plan = build_plan(f, 2, 64);
  plan.kernel = p.name;
  const LaidOutKernel laid = apply_plan(p, plan);
  const Interpreter interp(laid.program);
  ExecOptions o;
  o.layout = &laid.layout;
  const ExecutionResult a = interp.execute(in);
  const ExecutionResult b = interp.execute(in, o);
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_EQ(a.icnt, b.icnt);
  // Divergent warps become uniform, so the remapped run is cheaper.
  EXPECT_LT(b.cycles, a.cycles);

  RemapPlan identity;
  identity.layout = LaunchLayout::linear(2, 64);
  const LaidOutKernel same = apply_plan(p, identity);
  o.layout = &same.layout;
  EXPECT_EQ(interp.execute(in, o), a);
}

TEST(Remapper, JmeintReaches52Percent) {
  const Fixture fx = generate_fixture(*find_fixture("jmeint"));
  RemapPlan plan = build_plan(fx.flags, fx.spec.num_ctas, fx.spec.cta_size);
  const auto before = kernel_stats(classify_warps(fx.flags, LaunchLayout::linear(25, 160)), fx.flags);
  const auto after = remapped_stats(plan, fx.flags);
  EXPECT_EQ(before.pct_reliable_warps.to_percent(), "0.00");
  EXPECT_EQ(before.pct_reliable_threads.to_percent(), "55.15");
  EXPECT_EQ(after.pct_reliable_warps.to_percent(0), "52");
  EXPECT_EQ(after.pct_reliable_threads, before.pct_reliable_threads);
}

TEST(Remapper, HotSpotFirstCtaUsesFirstAndLastWarp) {
  const Fixture fx = generate_fixture(*find_fixture("hotspot"));
  const RemapPlan plan = build_plan(fx.flags, fx.spec.num_ctas, fx.spec.cta_size);
  const LaunchLayout& l = plan.layout;
  const std::uint32_t last = l.warps_in_cta(0) - 1;
  for (std::uint32_t w = 0; w <= last; ++w) {
    const auto warp = l.warp(0, w);
    const bool any = std::any_of(warp.begin(), warp.end(), [&](std::uint32_t t) { return fx.flags[t]; });
    EXPECT_EQ(any, w == 0 || w == last) << "warp " << w;
  }
}

TEST(Remapper, AllUnreliableStaysAtZero) {
  const Fixture fx = generate_fixture(*find_fixture("nearestneighbor"));
  ReliabilityFlags none(fx.flags.size(), false);
  const RemapPlan plan = build_plan(none, fx.spec.num_ctas, fx.spec.cta_size);
  EXPECT_EQ(remapped_stats(plan, none).pct_reliable_warps, Fraction(0));
}

TEST(Remapper, JsonRoundTrip) {
  testing::Gen gen(71);
  RemapPlan plan = build_plan(gen.flags(192), 3, 64);
  plan.kernel = "k";
  plan.tau = Fraction(9, 250);
  plan.profile_hash = "00ff00ff00ff00ff";
  const std::string j = plan_to_json(plan);
  EXPECT_EQ(plan_from_json(j), plan);
  EXPECT_THROW(plan_from_json("{\"kernel\": 3}"), ValidationError);
  EXPECT_THROW(plan_from_json("not json"), ValidationError);
  EXPECT_THROW(plan_from_json(R"({"kernel":"k","tau":"0.05","ctas":[{"cta_id":1,"new_order":[0]}]})"),
               ValidationError);
}

TEST(RemapperProperty, MatchesOracleAndKeepsInvariants) {
  testing::Gen gen(72);
  for (int k = 0; k < 1000; ++k) {
    const auto ctas = static_cast<std::uint32_t>(gen.range(1, 3));
    const auto size = static_cast<std::uint32_t>(32 * gen.range(1, 6));
    const ReliabilityFlags f = gen.flags(std::size_t{ctas} * size);
    const RemapPlan plan = build_plan(f, ctas, size);
    ASSERT_NO_THROW(plan.layout.validate_for(ctas, size));
    for (std::uint32_t c = 0; c < ctas; ++c) {
      EXPECT_EQ(plan.layout.cta(c), oracle_order(f, c, size));
      auto sorted = plan.layout.cta(c);
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(sorted, iota_ids(c * size, (c + 1) * size));
    }
    const auto before = classify_warps(f, LaunchLayout::linear(ctas, size));
    const auto after = classify_warps(f, plan.layout);
    std::vector<int> mixed(ctas, 0);
    for (const auto& w : after) mixed[w.cta_id] += w.cls == WarpClass::kMixed ? 1 : 0;
    for (int m : mixed) EXPECT_LE(m, 1);
    EXPECT_GE(kernel_stats(after, f).reliable_warps, kernel_stats(before, f).reliable_warps);
  }
}

TEST(RemapperProperty, MixedBoundForRaggedCtas) {
  testing::Gen gen(73);
  for (int k = 0; k < 500; ++k) {
    const auto size = static_cast<std::uint32_t>(gen.range(1, 200));
    const ReliabilityFlags f = gen.flags(size);
    int mixed = 0;
    for (const auto& w : classify_warps(f, build_plan(f, 1, size).layout)) mixed += w.cls == WarpClass::kMixed;
    EXPECT_LE(mixed, 2);
  }
}

TEST(RemapperProperty, ImprovementOverWarpLocalCounts) {
  // Two-warp CTA: every pair of per-warp reliable counts, placements sampled.
  testing::Gen gen(74);
  for (std::uint32_t r0 = 0; r0 <= 32; ++r0) {
    for (std::uint32_t r1 = 0; r1 <= 32; ++r1) {
      for (int rep = 0; rep < 4; ++rep) {
        ReliabilityFlags f(64, false);
        for (std::uint32_t w = 0; w < 2; ++w) {
          std::vector<std::uint32_t> lanes = iota_ids(0, 32);
          std::shuffle(lanes.begin(), lanes.end(), gen.engine());
          for (std::uint32_t i = 0; i < (w ? r1 : r0); ++i) f[w * 32 + lanes[i]] = true;
        }
        const auto before = kernel_stats(classify_warps(f, LaunchLayout::linear(1, 64)), f);
        const auto after = remapped_stats(build_plan(f, 1, 64), f);
        EXPECT_GE(after.reliable_warps, before.reliable_warps);
        EXPECT_EQ(after.reliable_warps, (r0 + r1) / 32);
      }
    }
  }
}

TEST(RemapperProperty, ProfilePreservedUnderRemap) {
  // Exhaustive campaign on every thread under both layouts.
  const KernelProgram p = parity_kernel(2, 32);
  const Interpreter interp(p);
  const auto in = parity_inputs(p);
  std::vector<std::uint32_t> threads = iota_ids(0, 64);
  const auto sites = enumerate_fault_space(interp, in, threads);
  testing::Gen gen(75);
  const RemapPlan plan = build_plan(gen.flags(64), 2, 32);
  const GoldenRun g0 = golden_run(interp, in);
  const GoldenRun g1 = golden_run(interp, in, &plan.layout);
  CampaignOptions base;
  base.workers = 1;
  CampaignOptions remapped = base;
  remapped.injection.layout = &plan.layout;
  EXPECT_EQ(run_campaign(interp, in, g0, sites, base), run_campaign(interp, in, g1, sites, remapped));
}

}  // namespace
}  // namespace warpguard
