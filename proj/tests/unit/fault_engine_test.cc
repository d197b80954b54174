#include "warpguard/fault_engine.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "test_support.h"
#include "warpguard/benchgen.h"
#include "warpguard/errors.h"

namespace warpguard {
namespace {

std::vector<std::uint32_t> all_threads(const KernelProgram& p) {
  std::vector<std::uint32_t> t(p.total_threads());
  std::iota(t.begin(), t.end(), 0u);
  return t;
}

// Two loops of data-dependent length; flipping the trip count can hang.
KernelProgram counted_kernel(std::uint32_t ctas, std::uint32_t cta_size) {
  const std::uint32_t n = ctas * cta_size;
  return KernelBuilder("counted")
      .ctas(ctas)
      .cta_size(cta_size)
      .input("x", n)
      .input("trips", n)
      .output("out", n)
      .ld(0, "x", kTidRegister)
      .ld(1, "trips", kTidRegister)
      .movi(2, 0)
      .label("head")
      .setp(Compare::kGe, 4, 2, Operand::reg(1))
      .bra_if(4, "done")
      .arith(Opcode::kIMul, 0, 0, Operand::imm(5))
      .arith(Opcode::kIAdd, 2, 2, Operand::imm(1))
      .bra("head")
      .label("done")
      .st("out", kTidRegister, 0)
      .exit()
      .build();
}

std::vector<Buffer> counted_inputs(const KernelProgram& p, std::uint32_t max_trips) {
  std::vector<Buffer> in = default_inputs(p, 5);
  for (auto& v : in[1]) v %= max_trips + 1;
  return in;
}

TEST(FaultSpace, AddOneThreadHas96Sites) {
  const KernelProgram p = add_one_kernel();
  const Interpreter interp(p);
  const std::vector<std::uint32_t> t3{3};
  const auto sites = enumerate_fault_space(interp, add_one_inputs(p), t3);
  ASSERT_EQ(sites.size(), 96u);
  for (const auto& s : sites) EXPECT_EQ(s.thread_id, 3u);
  EXPECT_TRUE(std::is_sorted(sites.begin(), sites.end()));
}

TEST(FaultSpace, EmptyAndStoreOnlyThreads) {
  const KernelProgram p = add_one_kernel();
  const Interpreter interp(p);
  EXPECT_TRUE(enumerate_fault_space(interp, add_one_inputs(p), {}).empty());

  const KernelProgram st_only = parse_kernel(".out b 32\nst b[tid], tid\nexit\n");
  const Interpreter i2(st_only);
  const std::vector<std::uint32_t> t0{0};
  EXPECT_TRUE(enumerate_fault_space(i2, {}, t0).empty());

  const std::vector<std::uint32_t> bad{64};
  EXPECT_THROW(enumerate_fault_space(interp, add_one_inputs(p), bad), ValidationError);
}

TEST(FaultEngine, AddOneThreadSitesAllCorrupt) {
  // Every register written by add-one feeds the stored value.
  const KernelProgram p = add_one_kernel();
  const Interpreter interp(p);
  const auto in = add_one_inputs(p);
  const std::vector<std::uint32_t> t3{3};
  const auto sites = enumerate_fault_space(interp, in, t3);
  const CampaignResult r = run_campaign(interp, in, sites);
  ASSERT_EQ(r.per_site.size(), 96u);
  for (const auto& [site, outcome] : r.per_site) EXPECT_EQ(outcome.cls, OutcomeClass::kSdc);
  EXPECT_EQ(r.per_thread.at(3), (ThreadCounts{96, 0, 96, 0}));
}

TEST(FaultEngine, DeadWriteIsMasked) {
  const KernelProgram p = dead_write_kernel();
  const Interpreter interp(p);
  const auto in = default_inputs(p);
  const GoldenRun golden = golden_run(interp, in, nullptr, {4});
  const auto& ord = golden.result.write_ordinals.at(4);
  ASSERT_EQ(ord.size(), 4u);  // ld, movi, movi, iadd
  for (std::uint32_t bit = 0; bit < 32; ++bit) {
    EXPECT_EQ(inject(interp, in, golden, {4, ord[1], bit}), (Outcome{OutcomeClass::kMasked, OutcomeDetail::kNone}));
    EXPECT_EQ(inject(interp, in, golden, {4, ord[2], bit}).cls, OutcomeClass::kSdc);
  }
}

TEST(FaultEngine, EmptyCampaign) {
  const KernelProgram p = add_one_kernel();
  const Interpreter interp(p);
  const CampaignResult r = run_campaign(interp, add_one_inputs(p), {});
  EXPECT_TRUE(r.per_site.empty());
  EXPECT_TRUE(r.per_thread.empty());
}

TEST(FaultEngine, AddressCorruptionCrashes) {
  const KernelProgram p = address_kernel();
  const Interpreter interp(p);
  const auto in = default_inputs(p);
  const GoldenRun golden = golden_run(interp, in, nullptr, {9});
  const FaultSite site{9, golden.result.write_ordinals.at(9).at(1), 31};
  EXPECT_EQ(inject(interp, in, golden, site), (Outcome{OutcomeClass::kOther, OutcomeDetail::kCrashed}));
  InjectionOptions full;
  full.full_replay = true;
  EXPECT_EQ(inject(interp, in, golden, site, full), (Outcome{OutcomeClass::kOther, OutcomeDetail::kCrashed}));
}

TEST(FaultEngine, TripCountFlipHangs) {
  const KernelProgram p = counted_kernel(1, 32);
  const Interpreter interp(p);
  const auto in = counted_inputs(p, 3);
  const GoldenRun golden = golden_run(interp, in, nullptr, {2});
  EXPECT_EQ(golden.hang_budget, 10000u);
  const FaultSite site{2, golden.result.write_ordinals.at(2).at(1), 30};  // the trips load
  EXPECT_EQ(inject(interp, in, golden, site), (Outcome{OutcomeClass::kOther, OutcomeDetail::kHung}));
}

TEST(FaultEngine, HangBudgetScalesWithGoldenIcnt) {
  ExecutionResult r;
  r.icnt = {5, 2000, 7};
  EXPECT_EQ(default_hang_budget(r), 20000u);
  r.icnt = {5};
  EXPECT_EQ(default_hang_budget(r), 10000u);
}

TEST(FaultEngine, UnexecutedSiteIsMaskedNotExecuted) {
  const KernelProgram p = add_one_kernel();
  const Interpreter interp(p);
  const auto in = add_one_inputs(p);
  const GoldenRun golden = golden_run(interp, in);
  const Outcome expect{OutcomeClass::kMasked, OutcomeDetail::kNotExecuted};
  EXPECT_EQ(inject(interp, in, golden, {3, 99, 0}), expect);
  EXPECT_EQ(inject(interp, in, golden, {3, 4, 0}), expect);  // the st: no destination register
  EXPECT_EQ(inject(interp, in, golden, {1000, 1, 0}), expect);
}

TEST(FaultEngine, RefusesFailingGoldenRun) {
  const KernelProgram p = parse_kernel(".in a 32\n.out b 32\niadd r0, tid, 40\nld r1, a[r0]\nst b[tid], r1\nexit\n");
  const Interpreter interp(p);
  EXPECT_THROW(golden_run(interp, default_inputs(p)), GoldenRunError);
  EXPECT_THROW(run_campaign(interp, default_inputs(p), {}), GoldenRunError);
}

TEST(FaultEngine, CtaOwnershipDetectsSharedWords) {
  const KernelProgram shared = parse_kernel(".ctas 2\n.ctasize 32\n.out b 32\nmovi r0, 1\nst b[r0], ctaid\nexit\n");
  const Interpreter interp(shared);
  const GoldenRun g = golden_run(interp, {});
  EXPECT_FALSE(g.cta_disjoint);
  const KernelProgram p = add_one_kernel();
  EXPECT_TRUE(golden_run(Interpreter(p), add_one_inputs(p)).cta_disjoint);
}

// The CTA-replay fast path against whole-kernel replay, site by site.
void expect_routes_agree(const KernelProgram& p, const std::vector<Buffer>& in, std::vector<std::uint32_t> threads,
                         double fraction = 1.0) {
  const Interpreter interp(p);
  auto sites = enumerate_fault_space(interp, in, threads);
  if (fraction < 1.0) sites = sample_sites(sites, fraction, 77);
  const GoldenRun golden = golden_run(interp, in);
  CampaignOptions fast;
  fast.workers = 1;
  CampaignOptions slow = fast;
  slow.injection.full_replay = true;
  const CampaignResult a = run_campaign(interp, in, golden, sites, fast);
  const CampaignResult b = run_campaign(interp, in, golden, sites, slow);
  ASSERT_EQ(a.per_site.size(), sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    EXPECT_EQ(a.per_site[i], b.per_site[i]) << p.name << " site " << sites[i].thread_id << ":" << sites[i].dyn_instr
                                            << ":" << sites[i].bit;
  }
}

TEST(FaultEngineDualRoute, AddOne) {
  const KernelProgram p = add_one_kernel(3, 32);
  expect_routes_agree(p, add_one_inputs(p), {0, 33, 95});
}

TEST(FaultEngineDualRoute, CountedLoopAcrossCtas) {
  const KernelProgram p = counted_kernel(3, 64);
  expect_routes_agree(p, counted_inputs(p, 3), {0, 65, 130, 191});
}

TEST(FaultEngineDualRoute, AddressKernelCrashes) {
  const KernelProgram p = address_kernel(2, 32);
  expect_routes_agree(p, default_inputs(p), {1, 40});
}

TEST(FaultEngineDualRoute, FixtureKernel) {
  const Fixture fx = generate_fixture(*find_fixture("pathfinder"));
  expect_routes_agree(fx.program, fx.inputs, {0, 300, 767}, 0.1);
}

TEST(FaultEngineDualRoute, SharedOutputsFallBackToFullReplay) {
  const KernelProgram p =
      parse_kernel(".ctas 2\n.ctasize 32\n.in a 64\n.out b 32\nld r0, a[tid]\nimul r1, r0, 3\nst b[r0], r1\nexit\n");
  std::vector<Buffer> in{Buffer(64)};
  for (std::uint32_t i = 0; i < 64; ++i) in[0][i] = i % 32;
  expect_routes_agree(p, in, {2, 34});
}

TEST(Sampling, IdentityAndCounts) {
  std::vector<FaultSite> sites;
  for (std::uint32_t d = 1; d <= 3; ++d) {
    for (std::uint32_t b = 0; b < 32; ++b) sites.push_back({3, d, b});
  }
  EXPECT_EQ(sample_sites(sites, 1.0, 5), sites);
  const auto a = sample_sites(sites, 0.25, 5);
  EXPECT_EQ(a.size(), 24u);
  EXPECT_EQ(sample_sites(sites, 0.25, 5), a);
  EXPECT_NE(sample_sites(sites, 0.25, 6), a);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(sample_sites(sites, 0.001, 5).size(), 1u);
  EXPECT_THROW(sample_sites(sites, 0.0, 5), std::invalid_argument);
  EXPECT_THROW(sample_sites(sites, 1.5, 5), std::invalid_argument);
}

TEST(SamplingProperty, OrderedSubsetOfTheRightSize) {
  testing::Gen gen(41);
  for (int k = 0; k < 500; ++k) {
    const auto n = static_cast<std::uint32_t>(gen.range(1, 400));
    std::vector<FaultSite> sites;
    for (std::uint32_t i = 0; i < n; ++i) sites.push_back({i / 32, i % 7, i % 32});
    std::sort(sites.begin(), sites.end());
    const double f = static_cast<double>(gen.range(1, 1000)) / 1000.0;
    const auto out = sample_sites(sites, f, gen.word());
    const auto expect = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(f * n)), 1, n);
    EXPECT_EQ(out.size(), expect);
    EXPECT_TRUE(std::includes(sites.begin(), sites.end(), out.begin(), out.end()));
  }
}

TEST(SamplingProperty, RoughlyUniformInclusion) {
  // Each of 40 positions should be picked about k/n of the time.
  std::vector<FaultSite> sites;
  for (std::uint32_t i = 0; i < 40; ++i) sites.push_back({0, i, 0});
  std::vector<int> hits(40, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    for (const auto& s : sample_sites(sites, 0.25, seed)) ++hits[s.dyn_instr];
  }
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(CampaignProperty, PartitionAndDeterminism) {
  const KernelProgram p = counted_kernel(2, 32);
  const Interpreter interp(p);
  const auto in = counted_inputs(p, 2);
  const auto sites = enumerate_fault_space(interp, in, all_threads(p));
  CampaignOptions one;
  one.workers = 1;
  CampaignOptions many;
  many.workers = 4;
  const CampaignResult a = run_campaign(interp, in, sites, one);
  const CampaignResult b = run_campaign(interp, in, sites, many);
  EXPECT_EQ(a, b);
  std::map<std::uint32_t, std::uint64_t> per_thread_sites;
  for (const auto& s : sites) ++per_thread_sites[s.thread_id];
  for (const auto& [t, c] : a.per_thread) {
    EXPECT_EQ(c.masked + c.sdc + c.other, c.sites);
    EXPECT_EQ(c.sites, per_thread_sites.at(t));
  }
}

TEST(Campaign, CsvWriters) {
  CampaignResult r;
  r.per_site = {{{1, 2, 3}, {OutcomeClass::kSdc, OutcomeDetail::kNone}},
                {{1, 2, 4}, {OutcomeClass::kOther, OutcomeDetail::kHung}}};
  r.per_thread[1] = {2, 0, 1, 1};
  std::ostringstream a, b;
  write_campaign_csv(a, r);
  write_aggregate_csv(b, r);
  EXPECT_EQ(a.str(), "thread_id,dyn_instr,bit,outcome,detail\n1,2,3,sdc,\n1,2,4,other,hung\n");
  EXPECT_EQ(b.str(), "thread_id,sites,masked,sdc,other\n1,2,0,1,1\n");
}

}  // namespace
}  // namespace warpguard
