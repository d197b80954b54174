#ifndef WARPGUARD_FAULT_ENGINE_H_
#define WARPGUARD_FAULT_ENGINE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "warpguard/interpreter.h"

namespace warpguard {

enum class OutcomeClass : std::uint8_t { kMasked, kSdc, kOther };
enum class OutcomeDetail : std::uint8_t { kNone, kCrashed, kHung, kNotExecuted };

struct Outcome {
  OutcomeClass cls = OutcomeClass::kMasked;
  OutcomeDetail detail = OutcomeDetail::kNone;
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

std::string_view outcome_name(OutcomeClass c);
std::string_view detail_name(OutcomeDetail d);

// Fault-free reference run plus the bookkeeping injections compare against.
struct GoldenRun {
  ExecutionResult result;
  std::uint64_t hang_budget = 0;
  // Per output word: the only CTA that stored to it, -1 if none, -2 if several.
  std::vector<std::vector<std::int32_t>> owner;
  bool cta_disjoint = true;
};

// max(10 x largest golden iCnt, 10000)
std::uint64_t default_hang_budget(const ExecutionResult& golden);

// Throws GoldenRunError unless the fault-free run completes.
GoldenRun golden_run(const Interpreter& interp, const std::vector<Buffer>& inputs,
                     const LaunchLayout* layout = nullptr, std::vector<std::uint32_t> trace_threads = {});

// Every (thread, dyn_instr, bit) whose dynamic instruction writes a register,
// ordered lexicographically. Duplicate thread ids are ignored.
std::vector<FaultSite> enumerate_fault_space(const Interpreter& interp, const std::vector<Buffer>& inputs,
                                             std::span<const std::uint32_t> threads);

Outcome classify(const GoldenRun& golden, const ExecutionResult& faulty);

struct InjectionOptions {
  const LaunchLayout* layout = nullptr;
  std::uint64_t budget = 0;  // 0: golden.hang_budget
  // Re-run the whole kernel for every site instead of replaying only the
  // faulty thread's CTA. Both give identical outcomes.
  bool full_replay = false;
};

Outcome inject(const Interpreter& interp, const std::vector<Buffer>& inputs, const GoldenRun& golden,
               const FaultSite& site, const InjectionOptions& options = {});

struct ThreadCounts {
  std::uint64_t sites = 0;
  std::uint64_t masked = 0;
  std::uint64_t sdc = 0;
  std::uint64_t other = 0;
  friend bool operator==(const ThreadCounts&, const ThreadCounts&) = default;
};

struct CampaignResult {
  std::vector<std::pair<FaultSite, Outcome>> per_site;  // in input order
  std::map<std::uint32_t, ThreadCounts> per_thread;
  std::optional<std::uint64_t> seed;
  friend bool operator==(const CampaignResult&, const CampaignResult&) = default;
};

struct CampaignOptions {
  InjectionOptions injection;
  unsigned workers = 0;  // 0: hardware concurrency
};

// One injection per site, spread over worker threads; results are stored by
// site index so the schedule never changes the result.
CampaignResult run_campaign(const Interpreter& interp, const std::vector<Buffer>& inputs, const GoldenRun& golden,
                            std::span<const FaultSite> sites, const CampaignOptions& options = {});
CampaignResult run_campaign(const Interpreter& interp, const std::vector<Buffer>& inputs,
                            std::span<const FaultSite> sites, const CampaignOptions& options = {});

// Uniform sample of round(fraction * n) sites (at least one) without
// replacement, in input order. fraction == 1 returns the input unchanged.
std::vector<FaultSite> sample_sites(std::span<const FaultSite> sites, double fraction, std::uint64_t seed);

void write_campaign_csv(std::ostream& out, const CampaignResult& result);
void write_aggregate_csv(std::ostream& out, const CampaignResult& result);

}  // namespace warpguard

#endif  // WARPGUARD_FAULT_ENGINE_H_
