#include "warpguard/cost_model.h"

#include <nlohmann/json.hpp>

#include "warpguard/errors.h"

namespace warpguard {
namespace {

Fraction ratio(const Fraction& num, const Fraction& den) { return den == Fraction(0) ? Fraction(0) : num / den; }

Fraction as_fraction(std::uint64_t v) { return Fraction(static_cast<std::int64_t>(v)); }

}  // namespace

CostReport account(const std::string& kernel, const std::vector<std::vector<WarpStats>>& base_warps,
                   const std::vector<std::vector<WarpStats>>& remapped_warps,
                   const std::vector<WarpClassification>& remapped_classes, const CostTable& costs,
                   Fraction overhead_knob, bool with_protection) {
  if (overhead_knob <= Fraction(-1)) throw ValidationError("remap overhead must be greater than -1");
  std::uint64_t base_cycles = 0;
  std::uint64_t base_stores = 0;
  for (const auto& cta : base_warps) {
    for (const auto& w : cta) {
      base_cycles += w.cycles;
      base_stores += w.stores;
    }
  }

  std::uint64_t remapped = 0;
  std::uint64_t detect = 0;
  std::uint64_t correct = 0;
  std::size_t k = 0;
  for (std::size_t c = 0; c < remapped_warps.size(); ++c) {
    for (std::size_t w = 0; w < remapped_warps[c].size(); ++w, ++k) {
      if (k >= remapped_classes.size() || remapped_classes[k].cta_id != c || remapped_classes[k].warp_id != w) {
        throw ValidationError("warp classes do not line up with the measured warps");
      }
      const WarpStats& s = remapped_warps[c][w];
      remapped += s.cycles;
      if (remapped_classes[k].cls == WarpClass::kReliable) {
        detect += s.cycles;
        correct += s.cycles;
      } else {
        detect += 2 * s.cycles + costs.compare_per_store * s.stores;
        correct += 3 * s.cycles + costs.vote_per_store * s.stores;
      }
    }
  }
  if (k != remapped_classes.size()) throw ValidationError("warp classes do not line up with the measured warps");

  const Fraction scale = Fraction(1) + overhead_knob;
  CostReport r;
  r.kernel = kernel;
  r.with_protection = with_protection;
  r.overhead_knob = overhead_knob;
  r.cycles_base = as_fraction(base_cycles);
  r.cycles_remapped = as_fraction(remapped) * scale;
  r.remap_overhead = ratio(r.cycles_remapped - r.cycles_base, r.cycles_base);
  if (with_protection) {
    r.cycles_partial_detect = as_fraction(detect) * scale;
    r.cycles_partial_correct = as_fraction(correct) * scale;
    r.cycles_full_rmt = as_fraction(2 * base_cycles + costs.compare_per_store * base_stores);
    r.cycles_full_tmr = as_fraction(3 * base_cycles + costs.vote_per_store * base_stores);
    r.savings_detect = ratio(r.cycles_full_rmt - r.cycles_partial_detect, r.cycles_full_rmt);
    r.savings_correct = ratio(r.cycles_full_tmr - r.cycles_partial_correct, r.cycles_full_tmr);
  }
  return r;
}

CostReport account(const Interpreter& interp, const std::vector<Buffer>& inputs, const LaunchLayout& base,
                   const LaunchLayout& remapped, const ReliabilityFlags& flags, Fraction overhead_knob,
                   bool with_protection) {
  ExecOptions opts;
  opts.layout = &base;
  ExecutionResult b = interp.execute(inputs, opts);
  opts.layout = &remapped;
  ExecutionResult r = interp.execute(inputs, opts);
  if (!b.completed() || !r.completed()) throw GoldenRunError("fault-free run did not complete; nothing to account");
  return account(interp.program().name, b.warps, r.warps, classify_warps(flags, remapped), interp.costs(),
                 overhead_knob, with_protection);
}

bool CostDiff::zero() const {
  for (const Fraction* f : {&cycles_base, &cycles_remapped, &cycles_partial_detect, &cycles_partial_correct,
                            &cycles_full_rmt, &cycles_full_tmr, &savings_detect, &savings_correct, &remap_overhead}) {
    if (*f != Fraction(0)) return false;
  }
  return true;
}

CostDiff compare_reports(const CostReport& a, const CostReport& b) {
  return {b.cycles_base - a.cycles_base,
          b.cycles_remapped - a.cycles_remapped,
          b.cycles_partial_detect - a.cycles_partial_detect,
          b.cycles_partial_correct - a.cycles_partial_correct,
          b.cycles_full_rmt - a.cycles_full_rmt,
          b.cycles_full_tmr - a.cycles_full_tmr,
          b.savings_detect - a.savings_detect,
          b.savings_correct - a.savings_correct,
          b.remap_overhead - a.remap_overhead};
}

std::string cost_report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["kernel"] = r.kernel;
  j["remap_overhead_knob"] = r.overhead_knob.to_decimal();
  j["cycles_base"] = r.cycles_base.to_decimal();
  j["cycles_remapped"] = r.cycles_remapped.to_decimal();
  j["remap_overhead"] = r.remap_overhead.to_decimal();
  j["remap_overhead_pct"] = r.remap_overhead.to_percent(2);
  if (r.with_protection) {
    j["cycles_partial_detect"] = r.cycles_partial_detect.to_decimal();
    j["cycles_partial_correct"] = r.cycles_partial_correct.to_decimal();
    j["cycles_full_rmt"] = r.cycles_full_rmt.to_decimal();
    j["cycles_full_tmr"] = r.cycles_full_tmr.to_decimal();
    j["savings_detect"] = r.savings_detect.to_decimal();
    j["savings_correct"] = r.savings_correct.to_decimal();
    j["savings_detect_pct"] = r.savings_detect.to_percent(2);
    j["savings_correct_pct"] = r.savings_correct.to_percent(2);
  }
  return j.dump(2) + "\n";
}

std::string cost_diff_json(const CostDiff& d) {
  nlohmann::ordered_json j;
  j["cycles_base"] = d.cycles_base.to_decimal();
  j["cycles_remapped"] = d.cycles_remapped.to_decimal();
  j["cycles_partial_detect"] = d.cycles_partial_detect.to_decimal();
  j["cycles_partial_correct"] = d.cycles_partial_correct.to_decimal();
  j["cycles_full_rmt"] = d.cycles_full_rmt.to_decimal();
  j["cycles_full_tmr"] = d.cycles_full_tmr.to_decimal();
  j["savings_detect"] = d.savings_detect.to_decimal();
  j["savings_correct"] = d.savings_correct.to_decimal();
  j["remap_overhead"] = d.remap_overhead.to_decimal();
  return j.dump(2) + "\n";
}

std::string cost_csv_header() {
  return "kernel,cycles_base,cycles_remapped,cycles_partial_detect,cycles_partial_correct,cycles_full_rmt,"
         "cycles_full_tmr,savings_detect,savings_correct,remap_overhead\n";
}

std::string cost_csv_row(const CostReport& r) {
  auto f = [&](const Fraction& v) { return r.with_protection ? v.to_decimal() : std::string(); };
  return r.kernel + ',' + r.cycles_base.to_decimal() + ',' + r.cycles_remapped.to_decimal() + ',' +
         f(r.cycles_partial_detect) + ',' + f(r.cycles_partial_correct) + ',' + f(r.cycles_full_rmt) + ',' +
         f(r.cycles_full_tmr) + ',' + f(r.savings_detect) + ',' + f(r.savings_correct) + ',' +
         r.remap_overhead.to_decimal() + '\n';
}

}  // namespace warpguard
