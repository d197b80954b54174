#include "warpguard/protector.h"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "warpguard/errors.h"

namespace warpguard {
namespace {

using Writes = std::map<Location, std::uint32_t>;
using History = std::map<Location, std::vector<std::uint32_t>>;

Writes last_writes(const std::vector<StoreRecord>& stores) {
  Writes w;
  for (const auto& s : stores) w[{s.buffer, s.index}] = s.value;
  return w;
}

History history(const std::vector<StoreRecord>& stores) {
  History h;
  for (const auto& s : stores) h[{s.buffer, s.index}].push_back(s.value);
  return h;
}

bool same_stream(const std::vector<StoreRecord>& a, const std::vector<StoreRecord>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const StoreRecord& x, const StoreRecord& y) {
    return x.buffer == y.buffer && x.index == y.index && x.value == y.value;
  });
}

std::vector<Location> mismatches(const WarpRun& primary, const WarpRun& replica) {
  const History a = history(primary.stores);
  const History b = history(replica.stores);
  std::set<Location> out;
  for (const auto& [loc, values] : a) {
    auto it = b.find(loc);
    if (it == b.end() || it->second != values) out.insert(loc);
  }
  for (const auto& [loc, values] : b) {
    if (!a.contains(loc)) out.insert(loc);
  }
  if (out.empty()) {
    // Same per-location values in a different order: blame positions that differ.
    const std::size_t n = std::max(primary.stores.size(), replica.stores.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i < primary.stores.size()) out.insert({primary.stores[i].buffer, primary.stores[i].index});
      if (i < replica.stores.size()) out.insert({replica.stores[i].buffer, replica.stores[i].index});
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace

std::string_view protection_mode_name(ProtectionMode m) { return m == ProtectionMode::kDetect ? "detect" : "correct"; }

std::uint32_t ProtectionPlan::protected_warps() const {
  std::uint32_t n = 0;
  for (const auto& cta : factors) {
    for (auto f : cta) n += f > 1 ? 1 : 0;
  }
  return n;
}

ProtectionPlan build_protection_plan(const std::vector<WarpClassification>& warps, ProtectionMode mode) {
  ProtectionPlan plan;
  plan.mode = mode;
  const std::uint32_t replicated = mode == ProtectionMode::kDetect ? 2 : 3;
  for (const auto& w : warps) {
    if (plan.factors.size() <= w.cta_id) plan.factors.resize(w.cta_id + 1);
    auto& cta = plan.factors[w.cta_id];
    if (cta.size() <= w.warp_id) cta.resize(w.warp_id + 1, 0);
    cta[w.warp_id] = w.cls == WarpClass::kReliable ? 1 : replicated;
  }
  for (const auto& cta : plan.factors) {
    if (std::find(cta.begin(), cta.end(), 0u) != cta.end()) {
      throw ValidationError("warp classification does not cover every warp");
    }
  }
  return plan;
}

ProtectedRunResult run_protected(const Interpreter& interp, const std::vector<Buffer>& inputs,
                                 const LaunchLayout& layout, const ProtectionPlan& plan,
                                 const std::optional<FaultSite>& fault, std::uint64_t budget) {
  const KernelProgram& program = interp.program();
  interp.check_inputs(inputs);
  layout.validate_for(program.num_ctas, program.cta_size);
  if (plan.factors.size() != layout.num_ctas()) throw ValidationError("protection plan does not match the layout");
  for (std::uint32_t c = 0; c < layout.num_ctas(); ++c) {
    if (plan.factors[c].size() != layout.warps_in_cta(c)) {
      throw ValidationError("protection plan does not match the layout");
    }
  }

  const CostTable& costs = interp.costs();
  ProtectedRunResult result;
  result.final_outputs = interp.zero_outputs();
  auto apply = [&](const Writes& w) {
    for (const auto& [loc, value] : w) result.final_outputs[loc.buffer][loc.index] = value;
  };

  for (std::uint32_t c = 0; c < layout.num_ctas(); ++c) {
    for (std::uint32_t w = 0; w < layout.warps_in_cta(c); ++w) {
      const auto lanes = layout.warp(c, w);
      const std::uint32_t factor = plan.factors[c][w];
      std::optional<FaultSite> here;
      if (fault && std::find(lanes.begin(), lanes.end(), fault->thread_id) != lanes.end()) here = fault;

      WarpRun primary = interp.run_warp(c, lanes, inputs, here, budget);
      result.cycles += primary.cycles;
      if (factor == 1) {
        if (primary.termination != Termination::kCompleted) {
          result.termination = primary.termination;
          return result;
        }
        for (const auto& s : primary.stores) result.final_outputs[s.buffer][s.index] = s.value;
        continue;
      }

      std::vector<WarpRun> replicas;
      for (std::uint32_t k = 1; k < factor; ++k) {
        replicas.push_back(interp.run_warp(c, lanes, inputs, std::nullopt, budget));
        result.cycles += replicas.back().cycles;
      }
      const std::uint64_t stores = replicas.front().stores.size();

      if (plan.mode == ProtectionMode::kDetect) {
        result.cycles += static_cast<std::uint64_t>(costs.compare_per_store) * stores;
        const WarpRun& shadow = replicas.front();
        if (primary.termination != shadow.termination || !same_stream(primary.stores, shadow.stores)) {
          result.detections.push_back({c, w, mismatches(primary, shadow)});
        }
        for (const auto& s : primary.stores) result.final_outputs[s.buffer][s.index] = s.value;
        continue;
      }

      result.cycles += static_cast<std::uint64_t>(costs.vote_per_store) * stores;
      std::vector<Writes> survivors;
      std::set<Location> touched;
      for (const WarpRun* r : {&primary, &replicas[0], &replicas[1]}) {
        for (const auto& s : r->stores) touched.insert({s.buffer, s.index});
        if (r->termination == Termination::kCompleted) survivors.push_back(last_writes(r->stores));
      }
      if (survivors.size() < 2) {
        result.uncorrectable.push_back({c, w, {touched.begin(), touched.end()}});
        continue;
      }

      Writes voted;
      WarpEvent corrected{c, w, {}};
      WarpEvent failed{c, w, {}};
      for (const auto& loc : touched) {
        // An absent write is a candidate like any value.
        std::vector<std::optional<std::uint32_t>> votes;
        for (const auto& s : survivors) {
          auto it = s.find(loc);
          votes.push_back(it == s.end() ? std::nullopt : std::optional<std::uint32_t>(it->second));
        }
        std::optional<std::optional<std::uint32_t>> winner;
        for (const auto& v : votes) {
          if (std::count(votes.begin(), votes.end(), v) * 2 > static_cast<std::ptrdiff_t>(votes.size())) {
            winner = v;
            break;
          }
        }
        if (!winner) {
          failed.locations.push_back(loc);
          continue;
        }
        if (std::count(votes.begin(), votes.end(), *winner) != static_cast<std::ptrdiff_t>(votes.size()) ||
            survivors.size() < 3) {
          corrected.locations.push_back(loc);
        }
        if (*winner) voted[loc] = **winner;
      }
      if (!corrected.locations.empty() || survivors.size() < 3) result.corrections.push_back(std::move(corrected));
      if (!failed.locations.empty()) result.uncorrectable.push_back(std::move(failed));
      apply(voted);
    }
  }
  return result;
}

std::string protection_report_json(const KernelProgram& program, const ProtectionPlan& plan,
                                   const ProtectedRunResult& result) {
  auto events = [&](const std::vector<WarpEvent>& list) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : list) {
      auto locs = nlohmann::ordered_json::array();
      for (const auto& l : e.locations) {
        locs.push_back(program.outputs.at(l.buffer).name + "[" + std::to_string(l.index) + "]");
      }
      arr.push_back({{"cta", e.cta}, {"warp", e.warp}, {"locations", std::move(locs)}});
    }
    return arr;
  };
  nlohmann::ordered_json j;
  j["mode"] = std::string(protection_mode_name(plan.mode));
  j["protected_warps"] = plan.protected_warps();
  j["detections"] = events(result.detections);
  j["corrected"] = events(result.corrections);
  j["uncorrectable"] = events(result.uncorrectable);
  j["termination"] = std::string(termination_name(result.termination));
  j["cycles"] = result.cycles;
  return j.dump(2) + "\n";
}

}  // namespace warpguard
