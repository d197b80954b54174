#ifndef WARPGUARD_COST_MODEL_H_
#define WARPGUARD_COST_MODEL_H_

#include <string>
#include <vector>

#include "warpguard/classifier.h"
#include "warpguard/fraction.h"
#include "warpguard/interpreter.h"

namespace warpguard {

struct CostReport {
  std::string kernel;
  bool with_protection = true;  // false: only base and remapped cycles are meaningful
  Fraction overhead_knob;       // multiplies every remapped-layout total by (1 + knob)
  Fraction cycles_base;
  Fraction cycles_remapped;
  Fraction cycles_partial_detect;
  Fraction cycles_partial_correct;
  Fraction cycles_full_rmt;
  Fraction cycles_full_tmr;
  Fraction savings_detect;   // (full_rmt - partial_detect) / full_rmt
  Fraction savings_correct;  // (full_tmr - partial_correct) / full_tmr
  Fraction remap_overhead;   // (remapped - base) / base
  friend bool operator==(const CostReport&, const CostReport&) = default;
};

// Totals from per-warp cycle/store counts of the fault-free run under the
// original layout (base_warps) and the remapped layout, whose warps are
// classified by remapped_classes in the same [cta][warp] order.
CostReport account(const std::string& kernel, const std::vector<std::vector<WarpStats>>& base_warps,
                   const std::vector<std::vector<WarpStats>>& remapped_warps,
                   const std::vector<WarpClassification>& remapped_classes, const CostTable& costs,
                   Fraction overhead_knob = Fraction(0), bool with_protection = true);

// Runs the fault-free kernel under both layouts and accounts the result.
CostReport account(const Interpreter& interp, const std::vector<Buffer>& inputs, const LaunchLayout& base,
                   const LaunchLayout& remapped, const ReliabilityFlags& flags, Fraction overhead_knob = Fraction(0),
                   bool with_protection = true);

struct CostDiff {
  Fraction cycles_base;
  Fraction cycles_remapped;
  Fraction cycles_partial_detect;
  Fraction cycles_partial_correct;
  Fraction cycles_full_rmt;
  Fraction cycles_full_tmr;
  Fraction savings_detect;
  Fraction savings_correct;
  Fraction remap_overhead;
  bool zero() const;
};

// b - a, field by field.
CostDiff compare_reports(const CostReport& a, const CostReport& b);

std::string cost_report_json(const CostReport& report);
std::string cost_diff_json(const CostDiff& diff);
std::string cost_csv_header();
std::string cost_csv_row(const CostReport& report);

}  // namespace warpguard

#endif  // WARPGUARD_COST_MODEL_H_
