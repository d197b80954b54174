#include "warpguard/fault_engine.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "warpguard/errors.h"

namespace warpguard {
namespace {

// Uniform integer in [0, n) by rejection; std::uniform_int_distribution is
// implementation-defined and would make samples differ across toolchains.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  while (true) {
    std::uint64_t v = rng();
    if (v < limit) return v % n;
  }
}

Outcome from_termination(Termination t) {
  return {OutcomeClass::kOther, t == Termination::kCrashed ? OutcomeDetail::kCrashed : OutcomeDetail::kHung};
}

Outcome compare_outputs(const std::vector<Buffer>& golden, const std::vector<Buffer>& faulty) {
  return {golden == faulty ? OutcomeClass::kMasked : OutcomeClass::kSdc, OutcomeDetail::kNone};
}

}  // namespace

std::string_view outcome_name(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::kMasked: return "masked";
    case OutcomeClass::kSdc: return "sdc";
    case OutcomeClass::kOther: return "other";
  }
  return "?";
}

std::string_view detail_name(OutcomeDetail d) {
  switch (d) {
    case OutcomeDetail::kNone: return "";
    case OutcomeDetail::kCrashed: return "crashed";
    case OutcomeDetail::kHung: return "hung";
    case OutcomeDetail::kNotExecuted: return "not-executed";
  }
  return "?";
}

std::uint64_t default_hang_budget(const ExecutionResult& golden) {
  std::uint64_t max_icnt = 0;
  for (auto c : golden.icnt) max_icnt = std::max<std::uint64_t>(max_icnt, c);
  return std::max<std::uint64_t>(10 * max_icnt, 10000);
}

GoldenRun golden_run(const Interpreter& interp, const std::vector<Buffer>& inputs, const LaunchLayout* layout,
                     std::vector<std::uint32_t> trace_threads) {
  ExecOptions opts;
  opts.layout = layout;
  opts.trace_threads = std::move(trace_threads);
  opts.log_stores = true;
  GoldenRun g;
  g.result = interp.execute(inputs, opts);
  if (!g.result.completed()) {
    throw GoldenRunError("fault-free run of '" + interp.program().name + "' " +
                         std::string(termination_name(g.result.termination)) + "; campaign refused");
  }
  g.hang_budget = default_hang_budget(g.result);

  const std::uint32_t cta_size = interp.program().cta_size;
  for (const auto& b : g.result.outputs) g.owner.emplace_back(b.size(), -1);
  for (const auto& s : g.result.stores) {
    auto& o = g.owner[s.buffer][s.index];
    const auto cta = static_cast<std::int32_t>(s.thread_id / cta_size);
    if (o == -1) {
      o = cta;
    } else if (o != cta) {
      o = -2;
      g.cta_disjoint = false;
    }
  }
  g.result.stores.clear();
  g.result.stores.shrink_to_fit();
  return g;
}

std::vector<FaultSite> enumerate_fault_space(const Interpreter& interp, const std::vector<Buffer>& inputs,
                                             std::span<const std::uint32_t> threads) {
  std::vector<std::uint32_t> sorted(threads.begin(), threads.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (auto t : sorted) {
    if (t >= interp.program().total_threads()) {
      throw ValidationError("thread " + std::to_string(t) + " is not launched by the kernel");
    }
  }
  std::vector<FaultSite> sites;
  if (sorted.empty()) {
    golden_run(interp, inputs);  // still refuse kernels whose golden run fails
    return sites;
  }
  GoldenRun g = golden_run(interp, inputs, nullptr, sorted);
  for (auto t : sorted) {
    for (auto d : g.result.write_ordinals.at(t)) {
      for (std::uint32_t bit = 0; bit < 32; ++bit) sites.push_back({t, d, bit});
    }
  }
  return sites;
}

Outcome classify(const GoldenRun& golden, const ExecutionResult& faulty) {
  if (!faulty.completed()) return from_termination(faulty.termination);
  if (!faulty.fault_applied) return {OutcomeClass::kMasked, OutcomeDetail::kNotExecuted};
  return compare_outputs(golden.result.outputs, faulty.outputs);
}

Outcome inject(const Interpreter& interp, const std::vector<Buffer>& inputs, const GoldenRun& golden,
               const FaultSite& site, const InjectionOptions& options) {
  const KernelProgram& p = interp.program();
  if (site.thread_id >= p.total_threads()) return {OutcomeClass::kMasked, OutcomeDetail::kNotExecuted};
  ExecOptions opts;
  opts.layout = options.layout;
  opts.fault = site;
  opts.budget = options.budget ? options.budget : golden.hang_budget;

  if (options.full_replay || !golden.cta_disjoint) return classify(golden, interp.execute(inputs, opts));

  // Threads share no data and every output word has at most one writing CTA,
  // so only the faulty thread's CTA can behave differently. Start from the
  // golden image with that CTA's words cleared, replay it, then put back words
  // that a later CTA overwrites anyway.
  const auto cta = static_cast<std::int32_t>(site.thread_id / p.cta_size);
  std::vector<Buffer> outputs = golden.result.outputs;
  for (std::size_t b = 0; b < outputs.size(); ++b) {
    for (std::size_t i = 0; i < outputs[b].size(); ++i) {
      if (golden.owner[b][i] == cta) outputs[b][i] = 0;
    }
  }
  opts.log_stores = true;
  ExecutionResult part = interp.run_cta(static_cast<std::uint32_t>(cta), inputs, outputs, opts);
  if (!part.completed()) return from_termination(part.termination);
  if (!part.fault_applied) return {OutcomeClass::kMasked, OutcomeDetail::kNotExecuted};
  for (const auto& s : part.stores) {
    if (golden.owner[s.buffer][s.index] > cta) outputs[s.buffer][s.index] = golden.result.outputs[s.buffer][s.index];
  }
  return compare_outputs(golden.result.outputs, outputs);
}

CampaignResult run_campaign(const Interpreter& interp, const std::vector<Buffer>& inputs, const GoldenRun& golden,
                            std::span<const FaultSite> sites, const CampaignOptions& options) {
  CampaignResult result;
  std::vector<Outcome> outcomes(sites.size());
  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(sites.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t i = next++; i < sites.size() && !failed; i = next++) {
        outcomes[i] = inject(interp, inputs, golden, sites[i], options.injection);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  result.per_site.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    result.per_site.emplace_back(sites[i], outcomes[i]);
    ThreadCounts& c = result.per_thread[sites[i].thread_id];
    ++c.sites;
    switch (outcomes[i].cls) {
      case OutcomeClass::kMasked: ++c.masked; break;
      case OutcomeClass::kSdc: ++c.sdc; break;
      case OutcomeClass::kOther: ++c.other; break;
    }
  }
  return result;
}

CampaignResult run_campaign(const Interpreter& interp, const std::vector<Buffer>& inputs,
                            std::span<const FaultSite> sites, const CampaignOptions& options) {
  return run_campaign(interp, inputs, golden_run(interp, inputs, options.injection.layout), sites, options);
}

std::vector<FaultSite> sample_sites(std::span<const FaultSite> sites, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("sample fraction must lie in (0, 1]");
  if (fraction == 1.0 || sites.empty()) return {sites.begin(), sites.end()};
  const std::uint64_t n = sites.size();
  auto k = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(n)));
  k = std::clamp<std::uint64_t>(k, 1, n);

  // Selection sampling (Knuth, Algorithm S): keeps the input order.
  std::mt19937_64 rng(seed);
  std::vector<FaultSite> out;
  out.reserve(k);
  for (std::uint64_t i = 0; i < n && out.size() < k; ++i) {
    if (uniform_below(rng, n - i) < k - out.size()) out.push_back(sites[i]);
  }
  return out;
}

void write_campaign_csv(std::ostream& out, const CampaignResult& result) {
  out << "thread_id,dyn_instr,bit,outcome,detail\n";
  for (const auto& [site, outcome] : result.per_site) {
    out << site.thread_id << ',' << site.dyn_instr << ',' << site.bit << ',' << outcome_name(outcome.cls) << ','
        << detail_name(outcome.detail) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const CampaignResult& result) {
  out << "thread_id,sites,masked,sdc,other\n";
  for (const auto& [tid, c] : result.per_thread) {
    out << tid << ',' << c.sites << ',' << c.masked << ',' << c.sdc << ',' << c.other << '\n';
  }
}

}  // namespace warpguard
