#include "warpguard/classifier.h"

#include <nlohmann/json.hpp>

#include "warpguard/errors.h"
#include "warpguard/kernel_ir.h"

namespace warpguard {

ReliabilityFlags classify_threads(const KernelProfile& profile, Fraction tau) {
  if (tau < Fraction(0) || tau > Fraction(1)) throw ValidationError("SDC threshold must lie in [0, 1]");
  ReliabilityFlags flags(profile.threads.size());
  for (std::size_t i = 0; i < profile.threads.size(); ++i) flags[i] = profile.threads[i].sdc <= tau;
  return flags;
}

std::string_view warp_class_name(WarpClass c) {
  switch (c) {
    case WarpClass::kReliable: return "reliable";
    case WarpClass::kUnreliable: return "unreliable";
    case WarpClass::kMixed: return "mixed";
  }
  return "?";
}

std::vector<WarpClassification> classify_warps(const ReliabilityFlags& flags, const LaunchLayout& layout) {
  std::size_t covered = 0;
  for (const auto& cta : layout.ctas()) covered += cta.size();
  if (covered != flags.size()) {
    throw ValidationError("layout covers " + std::to_string(covered) + " threads, flags cover " +
                          std::to_string(flags.size()));
  }
  std::vector<WarpClassification> out;
  for (std::uint32_t c = 0; c < layout.num_ctas(); ++c) {
    for (std::uint32_t w = 0; w < layout.warps_in_cta(c); ++w) {
      WarpClassification wc;
      wc.cta_id = c;
      wc.warp_id = w;
      std::size_t reliable = 0;
      for (auto tid : layout.warp(c, w)) {
        if (tid >= flags.size()) throw ValidationError("layout names thread " + std::to_string(tid) + " without a flag");
        wc.members.push_back(tid);
        reliable += flags[tid] ? 1 : 0;
      }
      wc.cls = reliable == wc.members.size() ? WarpClass::kReliable
               : reliable == 0               ? WarpClass::kUnreliable
                                             : WarpClass::kMixed;
      out.push_back(std::move(wc));
    }
  }
  return out;
}

KernelReliabilityStats kernel_stats(const std::vector<WarpClassification>& warps, const ReliabilityFlags& flags) {
  KernelReliabilityStats s;
  for (const auto& w : warps) {
    switch (w.cls) {
      case WarpClass::kReliable: ++s.reliable_warps; break;
      case WarpClass::kUnreliable: ++s.unreliable_warps; break;
      case WarpClass::kMixed: ++s.mixed_warps; break;
    }
  }
  s.total_threads = static_cast<std::uint32_t>(flags.size());
  for (bool f : flags) s.reliable_threads += f ? 1 : 0;
  if (!warps.empty()) s.pct_reliable_warps = Fraction(s.reliable_warps, static_cast<std::int64_t>(warps.size()));
  if (!flags.empty()) s.pct_reliable_threads = Fraction(s.reliable_threads, s.total_threads);
  return s;
}

std::string stats_to_json(const KernelReliabilityStats& s) {
  nlohmann::ordered_json j;
  j["kernel"] = s.kernel;
  j["tau"] = s.tau.to_decimal();
  j["pct_reliable_warps"] = s.pct_reliable_warps.to_percent(2);
  j["pct_reliable_threads"] = s.pct_reliable_threads.to_percent(2);
  j["warp_counts"] = {{"reliable", s.reliable_warps}, {"unreliable", s.unreliable_warps}, {"mixed", s.mixed_warps}};
  j["thread_counts"] = {{"reliable", s.reliable_threads}, {"total", s.total_threads}};
  return j.dump(2) + "\n";
}

std::string scatter_csv(const KernelProfile& profile, const ReliabilityFlags& flags, const LaunchLayout& layout) {
  std::string out = "thread_index_in_launch_order,sdc_pct,warp_boundary,cta_boundary,reliable_flag\n";
  std::size_t index = 0;
  for (std::uint32_t c = 0; c < layout.num_ctas(); ++c) {
    const auto& list = layout.cta(c);
    for (std::size_t i = 0; i < list.size(); ++i, ++index) {
      const auto tid = list[i];
      out += std::to_string(index) + ',' + profile.threads.at(tid).sdc.to_decimal() + ',' +
             (i % kWarpSize == 0 ? "1" : "0") + ',' + (i == 0 ? "1" : "0") + ',' + (flags.at(tid) ? "1" : "0") + '\n';
    }
  }
  return out;
}

}  // namespace warpguard
