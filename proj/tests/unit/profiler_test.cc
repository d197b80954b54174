#include "warpguard/profiler.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "test_support.h"
#include "warpguard/benchgen.h"
#include "warpguard/errors.h"

namespace warpguard {
namespace {

// Independent oracle: whole-kernel reruns through the interpreter, counting
// outcomes by comparing output buffers directly.
ThreadCounts oracle_counts(const Interpreter& interp, const std::vector<Buffer>& in, std::uint32_t tid) {
  ExecOptions trace;
  trace.trace_threads = {tid};
  const ExecutionResult golden = interp.execute(in, trace);
  ThreadCounts c;
  for (auto d : golden.write_ordinals.at(tid)) {
    for (std::uint32_t bit = 0; bit < 32; ++bit) {
      ExecOptions o;
      o.fault = FaultSite{tid, d, bit};
      o.budget = 10000;
      const ExecutionResult r = interp.execute(in, o);
      ++c.sites;
      if (!r.completed()) {
        ++c.other;
      } else if (r.outputs != golden.outputs) {
        ++c.sdc;
      } else {
        ++c.masked;
      }
    }
  }
  return c;
}

void expect_matches_oracle(const ThreadProfile& t, const ThreadCounts& c) {
  EXPECT_EQ(t.sdc, Fraction(static_cast<std::int64_t>(c.sdc), static_cast<std::int64_t>(c.sites))) << t.thread_id;
  EXPECT_EQ(t.other, Fraction(static_cast<std::int64_t>(c.other), static_cast<std::int64_t>(c.sites)));
  EXPECT_EQ(t.masked, Fraction(static_cast<std::int64_t>(c.masked), static_cast<std::int64_t>(c.sites)));
}

TEST(Profiler, UniformKernelIsOneGroup) {
  const KernelProgram p = add_one_kernel();
  const Interpreter interp(p);
  const ProfileRun run = profile_kernel(interp, add_one_inputs(p));
  ASSERT_EQ(run.profile.threads.size(), 64u);
  EXPECT_EQ(run.campaign.per_thread.size(), 1u);
  for (const auto& t : run.profile.threads) {
    EXPECT_EQ(t.group_id, 0u);
    EXPECT_EQ(t.icnt, 5u);
    EXPECT_EQ(t.sdc, Fraction(1));
    EXPECT_EQ(t.provenance, t.thread_id == 0 ? Provenance::kMeasured : Provenance::kExtrapolated);
  }
  EXPECT_NO_THROW(run.profile.validate());
}

TEST(Profiler, ParityKernelMatchesOracle) {
  const KernelProgram p = parity_kernel();
  const Interpreter interp(p);
  const auto in = parity_inputs(p);
  const ProfileRun run = profile_kernel(interp, in);
  std::set<std::uint32_t> groups;
  for (const auto& t : run.profile.threads) {
    groups.insert(t.group_id);
    EXPECT_EQ(t.group_id, t.thread_id % 2);
    EXPECT_EQ(t.icnt, t.thread_id % 2 ? 12u : 8u);
  }
  EXPECT_EQ(groups.size(), 2u);
  expect_matches_oracle(run.profile.threads[0], oracle_counts(interp, in, 0));
  expect_matches_oracle(run.profile.threads[1], oracle_counts(interp, in, 1));
}

TEST(Profiler, PrunedAgreesWithExhaustiveOnParity) {
  const KernelProgram p = parity_kernel(1, 64);
  const Interpreter interp(p);
  const auto in = parity_inputs(p);
  ProfileOptions ex;
  ex.mode = ProfileMode::kExhaustive;
  const ProfileRun pruned = profile_kernel(interp, in);
  const ProfileRun full = profile_kernel(interp, in, ex);
  EXPECT_TRUE(same_resilience(pruned.profile, full.profile));
  for (const auto& t : full.profile.threads) EXPECT_EQ(t.provenance, Provenance::kMeasured);
}

TEST(Profiler, FixtureGroupsFollowTripCounts) {
  const Fixture fx = generate_fixture(*find_fixture("gaussian_k1"));
  const Interpreter interp(fx.program);
  const auto groups = group_by_icnt(interp.execute(fx.inputs));
  // One reliable level and two unreliable levels sharing the first 48 threads.
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups.at(0).size(), 464u);
  EXPECT_EQ(groups.at(1).size() + groups.at(2).size(), 48u);
  for (auto tid : groups.at(0)) EXPECT_GE(tid, 48u);
}

TEST(Profiler, MeasuredFixtureMatchesDeclaredClassification) {
  // The sparse loop leaves 3 of its 5 + 5t live writes corrupting output.
  const Fixture fx = generate_fixture(*find_fixture("gaussian_k1"));
  const Interpreter interp(fx.program);
  ProfileOptions o;
  o.sample_fraction = 0.5;
  o.seed = 3;
  const ProfileRun run = profile_kernel(interp, fx.inputs, o);
  EXPECT_EQ(run.campaign.seed, 3u);
  for (std::size_t i = 0; i < fx.profile.threads.size(); ++i) {
    EXPECT_EQ(run.profile.threads[i].icnt, fx.profile.threads[i].icnt);
    EXPECT_EQ(run.profile.threads[i].sdc <= fx.spec.tau, static_cast<bool>(fx.flags[i])) << i;
  }
}

TEST(Profiler, SamplingIsReproducible) {
  const KernelProgram p = parity_kernel();
  const Interpreter interp(p);
  ProfileOptions o;
  o.sample_fraction = 0.3;
  o.seed = 9;
  const ProfileRun a = profile_kernel(interp, parity_inputs(p), o);
  const ProfileRun b = profile_kernel(interp, parity_inputs(p), o);
  EXPECT_EQ(a.profile, b.profile);
  EXPECT_EQ(a.campaign, b.campaign);
  EXPECT_LT(a.campaign.per_site.size(), 2u * 12u * 32u);
}

TEST(ProfileCsv, RoundTripAndHash) {
  const KernelProgram p = parity_kernel();
  const Interpreter interp(p);
  const KernelProfile prof = profile_kernel(interp, parity_inputs(p)).profile;
  const std::string csv = profile_to_csv(prof);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "kernel,cta_id,thread_id,icnt,group_id,masked_pct,sdc_pct,other_pct,provenance");
  const KernelProfile back = profile_from_csv(csv);
  EXPECT_EQ(back, prof);
  EXPECT_EQ(profile_hash(back), profile_hash(prof));
  EXPECT_EQ(profile_hash(prof).size(), 16u);

  KernelProfile changed = prof;
  changed.threads[5].provenance = Provenance::kMeasured;
  EXPECT_NE(profile_hash(changed), profile_hash(prof));

  const auto path = std::filesystem::temp_directory_path() / "warpguard_profile_test.csv";
  save_profile(prof, path);
  EXPECT_EQ(load_profile(path), prof);
  std::filesystem::remove(path);
}

TEST(ProfileCsv, RejectsBadInput) {
  const std::string h = "kernel,cta_id,thread_id,icnt,group_id,masked_pct,sdc_pct,other_pct,provenance\n";
  EXPECT_NO_THROW(profile_from_csv(h + "k,0,0,5,0,0.5,0.5,0,measured\n"));
  EXPECT_THROW(profile_from_csv(h + "k,0,0,5,0,-0.2,1.2,0,measured\n"), ValidationError);
  EXPECT_THROW(profile_from_csv(h + "k,0,0,5,0,0.5,0.4,0,measured\n"), ValidationError);
  EXPECT_THROW(profile_from_csv(h + "k,0,1,5,0,0.5,0.5,0,measured\n"), ValidationError);
  EXPECT_THROW(profile_from_csv(h + "k,0,0,5,0,0.5,0.5,0,measured\nk,0,0,5,0,0.5,0.5,0,measured\n"),
               ValidationError);
  EXPECT_THROW(profile_from_csv(h + "k,0,0,5,0,0.5,0.5,0,measured\nk,0,1,5,0,1,0,0,measured\n"), ValidationError);
  EXPECT_THROW(profile_from_csv(h + "k,0,0,5,0,0.5,0.5,0,guessed\n"), ValidationError);
  EXPECT_THROW(profile_from_csv(h + "k,0,0,5,0,0.5,0.5\n"), ValidationError);
  EXPECT_THROW(profile_from_csv("a,b\n"), ValidationError);
  EXPECT_THROW(profile_from_csv(h), ValidationError);
}

TEST(ProfileCsvProperty, RandomProfilesRoundTrip) {
  testing::Gen gen(51);
  for (int k = 0; k < 200; ++k) {
    KernelProfile prof;
    prof.kernel = "k" + std::to_string(k);
    const auto n = static_cast<std::uint32_t>(gen.range(1, 100));
    const auto groups = static_cast<std::uint32_t>(gen.range(1, 5));
    std::vector<ThreadProfile> per_group(groups);
    for (auto& g : per_group) {
      const auto den = gen.range(1, 5000);
      const auto s = gen.range(0, den);
      const auto o = gen.range(0, den - s);
      g.sdc = Fraction(s, den);
      g.other = Fraction(o, den);
      g.masked = Fraction(1) - g.sdc - g.other;
      g.icnt = static_cast<std::uint32_t>(gen.range(1, 1000));
    }
    for (std::uint32_t t = 0; t < n; ++t) {
      const auto g = static_cast<std::uint32_t>(gen.below(groups));
      ThreadProfile tp = per_group[g];
      tp.thread_id = t;
      tp.cta_id = t / 32;
      tp.group_id = g;
      tp.provenance = gen.coin() ? Provenance::kMeasured : Provenance::kExtrapolated;
      prof.threads.push_back(tp);
    }
    EXPECT_EQ(profile_from_csv(profile_to_csv(prof)), prof);
  }
}

}  // namespace
}  // namespace warpguard
