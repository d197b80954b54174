#include "warpguard/benchgen.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "warpguard/errors.h"
#include "warpguard/remapper.h"

namespace warpguard {
namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // Rejection sampling keeps sequences identical across standard libraries.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    while (true) {
      std::uint64_t v = gen_();
      if (v < limit) return v % n;
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

std::uint64_t name_seed(std::string_view name, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint32_t kBaseTrips = 12;

void scatter_cta(const FixtureSpec& spec, std::uint32_t cta, const ScatterCta& sc, Rng& rng,
                 ReliabilityFlags& flags) {
  if (spec.cta_size % kWarpSize != 0) throw ValidationError("scattered pattern needs CTA size in whole warps");
  const std::uint32_t warps = spec.cta_size / kWarpSize;
  const std::uint32_t p = sc.pure_reliable_warps;
  const std::uint32_t q = sc.pure_unreliable_warps;
  const std::string where = spec.name + " CTA " + std::to_string(cta);
  if (p + q > warps) throw ValidationError(where + ": more pure warps than warps");
  if (sc.reliable_threads < p * kWarpSize) throw ValidationError(where + ": fewer reliable threads than pure warps hold");
  const std::uint32_t s = sc.reliable_threads - p * kWarpSize;
  const std::uint32_t m = warps - p - q;
  if ((m == 0 && s != 0) || (m > 0 && (s < m || s > (kWarpSize - 1) * m))) {
    throw ValidationError(where + ": reliable threads cannot fill the mixed warps");
  }
  std::vector<std::uint32_t> order(warps);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(order);
  std::vector<std::uint32_t> per_warp(warps, 0);
  for (std::uint32_t i = 0; i < p; ++i) per_warp[order[i]] = kWarpSize;
  std::vector<std::uint32_t> mixed(order.begin() + p + q, order.end());
  std::sort(mixed.begin(), mixed.end());
  for (auto w : mixed) per_warp[w] = 1;
  for (std::uint32_t left = s - m; left > 0;) {
    auto w = mixed[rng.below(mixed.size())];
    if (per_warp[w] < kWarpSize - 1) {
      ++per_warp[w];
      --left;
    }
  }
  const std::uint32_t base = cta * spec.cta_size;
  for (std::uint32_t w = 0; w < warps; ++w) {
    std::vector<std::uint32_t> lanes(kWarpSize);
    std::iota(lanes.begin(), lanes.end(), 0u);
    if (per_warp[w] != 0 && per_warp[w] != kWarpSize) rng.shuffle(lanes);
    for (std::uint32_t k = 0; k < per_warp[w]; ++k) flags[base + w * kWarpSize + lanes[k]] = true;
  }
}

// Hands out levels to `threads` (already in a seeded order): explicit counts
// first, then the remainder round-robin over count == 0 levels.
void assign_levels(const std::vector<std::uint32_t>& threads, const std::vector<SdcLevel>& levels,
                   const std::string& what, std::vector<const SdcLevel*>& out) {
  if (threads.empty()) return;
  if (levels.empty()) throw ValidationError(what + ": no SDC level for " + std::to_string(threads.size()) + " threads");
  std::size_t next = 0;
  std::vector<const SdcLevel*> rest;
  for (const auto& l : levels) {
    if (l.count == 0) {
      rest.push_back(&l);
      continue;
    }
    if (next + l.count > threads.size()) throw ValidationError(what + ": level counts exceed the thread count");
    for (std::uint32_t i = 0; i < l.count; ++i) out[threads[next++]] = &l;
  }
  if (next < threads.size() && rest.empty()) throw ValidationError(what + ": level counts leave threads unassigned");
  for (std::size_t i = 0; next < threads.size(); ++next, ++i) out[threads[next]] = rest[i % rest.size()];
}

std::vector<std::vector<Block>> repeat(std::vector<Block> warp, std::uint32_t times) {
  std::vector<Block> out;
  for (std::uint32_t i = 0; i < times; ++i) out.insert(out.end(), warp.begin(), warp.end());
  return {out};
}

std::vector<SdcLevel> levels(std::initializer_list<std::string_view> sdcs) {
  std::vector<SdcLevel> out;
  for (auto s : sdcs) out.push_back({Fraction::parse_decimal(s)});
  return out;
}

}  // namespace

std::string Pattern::describe() const {
  switch (kind) {
    case PatternKind::kAllReliable: return "all_reliable";
    case PatternKind::kAllUnreliable: return "all_unreliable";
    case PatternKind::kPrefixUnreliable: return "prefix_unreliable(" + std::to_string(prefix) + ")";
    case PatternKind::kAlternating: return "alternating";
    case PatternKind::kPerCtaBlocks: return "per_cta_blocks";
    case PatternKind::kScattered: return "scattered";
  }
  return "?";
}

ReliabilityFlags pattern_flags(const FixtureSpec& spec, std::uint64_t seed) {
  const std::uint64_t total = static_cast<std::uint64_t>(spec.num_ctas) * spec.cta_size;
  if (spec.num_ctas == 0 || spec.cta_size == 0) throw ValidationError(spec.name + ": empty geometry");
  ReliabilityFlags flags(total, false);
  const Pattern& pat = spec.pattern;
  switch (pat.kind) {
    case PatternKind::kAllReliable:
      flags.assign(total, true);
      break;
    case PatternKind::kAllUnreliable:
      break;
    case PatternKind::kPrefixUnreliable:
      if (pat.prefix > total) throw ValidationError(spec.name + ": prefix longer than the launch");
      for (std::uint64_t t = pat.prefix; t < total; ++t) flags[t] = true;
      break;
    case PatternKind::kAlternating:
      for (std::uint64_t t = 0; t < total; t += 2) flags[t] = true;
      break;
    case PatternKind::kPerCtaBlocks: {
      if (pat.blocks.size() != spec.num_ctas) throw ValidationError(spec.name + ": need one block list per CTA");
      for (std::uint32_t c = 0; c < spec.num_ctas; ++c) {
        std::uint64_t t = static_cast<std::uint64_t>(c) * spec.cta_size;
        const std::uint64_t end = t + spec.cta_size;
        for (const auto& b : pat.blocks[c]) {
          if (t + b.count > end) throw ValidationError(spec.name + ": blocks overflow CTA " + std::to_string(c));
          for (std::uint32_t i = 0; i < b.count; ++i) flags[t++] = b.reliable;
        }
        if (t != end) throw ValidationError(spec.name + ": blocks do not fill CTA " + std::to_string(c));
      }
      break;
    }
    case PatternKind::kScattered: {
      if (pat.scattered.size() != spec.num_ctas) throw ValidationError(spec.name + ": need one scatter entry per CTA");
      Rng rng(name_seed(spec.name, seed));
      for (std::uint32_t c = 0; c < spec.num_ctas; ++c) scatter_cta(spec, c, pat.scattered[c], rng, flags);
      break;
    }
  }
  return flags;
}

Fixture generate_fixture(const FixtureSpec& spec, std::uint64_t seed) {
  Fixture fx;
  fx.spec = spec;
  fx.flags = pattern_flags(spec, seed);
  const auto total = static_cast<std::uint32_t>(fx.flags.size());
  const LaunchLayout linear = LaunchLayout::linear(spec.num_ctas, spec.cta_size);

  for (const auto& l : spec.reliable_levels) {
    if (l.sdc > spec.tau) throw ValidationError(spec.name + ": reliable level above the threshold");
  }
  for (const auto& l : spec.unreliable_levels) {
    if (l.sdc <= spec.tau) throw ValidationError(spec.name + ": unreliable level at or below the threshold");
  }
  if (spec.pure_level && *spec.pure_level > spec.tau) {
    throw ValidationError(spec.name + ": pure-warp level above the threshold");
  }

  // Which reliable threads sit in all-reliable warps of the original layout.
  std::vector<bool> pure(total, false);
  if (spec.pure_level) {
    for (const auto& w : classify_warps(fx.flags, linear)) {
      if (w.cls == WarpClass::kReliable) {
        for (auto t : w.members) pure[t] = true;
      }
    }
  }
  const SdcLevel pure_level{spec.pure_level.value_or(Fraction(0))};
  std::vector<std::uint32_t> rel;
  std::vector<std::uint32_t> unrel;
  std::vector<const SdcLevel*> level(total, nullptr);
  for (std::uint32_t t = 0; t < total; ++t) {
    if (!fx.flags[t]) {
      unrel.push_back(t);
    } else if (pure[t]) {
      level[t] = &pure_level;
    } else {
      rel.push_back(t);
    }
  }
  Rng rng(name_seed(spec.name, seed ^ 0x5eed));
  rng.shuffle(rel);
  rng.shuffle(unrel);
  assign_levels(rel, spec.reliable_levels, spec.name, level);
  assign_levels(unrel, spec.unreliable_levels, spec.name, level);

  // One resilience class per distinct used level, ordered by SDC.
  std::map<std::pair<Fraction, Fraction>, std::uint32_t> classes;
  for (auto* l : level) classes.emplace(std::make_pair(l->sdc, l->other), 0);
  std::uint32_t next_class = 0;
  for (auto& [key, id] : classes) id = next_class++;

  const std::uint32_t tpc = spec.cta_size;
  KernelBuilder kb(spec.name);
  kb.ctas(spec.num_ctas).cta_size(tpc).input("kind", total).input("trips", total).input("data", total).output("out",
                                                                                                               total);
  kb.ld(0, "kind", kTidRegister)
      .ld(1, "trips", kTidRegister)
      .ld(2, "data", kTidRegister)
      .movi(3, 0)
      .setp(Compare::kNe, 4, 0, Operand::imm(0))
      .bra_if(4, "dense")
      // Reliable path: loop results are never read, only the counter matters.
      .label("sparse")
      .arith(Opcode::kIMul, 5, 2, Operand::reg(2))
      .arith(Opcode::kIMul, 6, 5, Operand::reg(5))
      .arith(Opcode::kIMul, 7, 6, Operand::reg(2))
      .arith(Opcode::kIAdd, 3, 3, Operand::imm(1))
      .setp(Compare::kLt, 8, 3, Operand::reg(1))
      .bra_if(8, "sparse")
      .st("out", kTidRegister, 2)
      .exit()
      // Unreliable path: every iteration folds into the stored value.
      .label("dense")
      .arith(Opcode::kIMul, 2, 2, Operand::imm(3))
      .arith(Opcode::kIAdd, 2, 2, Operand::reg(3))
      .arith(Opcode::kIAdd, 2, 2, Operand::imm(7))
      .arith(Opcode::kIAdd, 3, 3, Operand::imm(1))
      .setp(Compare::kLt, 8, 3, Operand::reg(1))
      .bra_if(8, "dense")
      .st("out", kTidRegister, 2)
      .exit();
  fx.program = kb.build();

  Buffer kind(total), trips(total), data(total);
  Rng data_rng(name_seed(spec.name, seed ^ 0xda7a));
  fx.profile.kernel = spec.name;
  fx.profile.tau = spec.tau;
  fx.profile.threads.resize(total);
  std::vector<bool> seen_class(classes.size(), false);
  for (std::uint32_t t = 0; t < total; ++t) {
    const SdcLevel& l = *level[t];
    const std::uint32_t cls = classes.at({l.sdc, l.other});
    kind[t] = fx.flags[t] ? 0 : 1;
    trips[t] = kBaseTrips + cls;
    data[t] = static_cast<std::uint32_t>(data_rng.next()) | 1u;
    ThreadProfile& p = fx.profile.threads[t];
    p.thread_id = t;
    p.cta_id = t / tpc;
    p.icnt = 8 + 6 * trips[t];
    p.group_id = cls;
    p.sdc = l.sdc;
    p.other = l.other;
    p.masked = Fraction(1) - l.sdc - l.other;
    p.provenance = seen_class[cls] ? Provenance::kExtrapolated : Provenance::kMeasured;
    seen_class[cls] = true;
  }
  fx.inputs = {std::move(kind), std::move(trips), std::move(data)};
  fx.profile.validate();

  if (classify_threads(fx.profile, spec.tau) != fx.flags) {
    throw ValidationError(spec.name + ": declared profile disagrees with the pattern");
  }
  if (spec.target) {
    const auto stats = kernel_stats(classify_warps(fx.flags, linear), fx.flags);
    const std::string warps = stats.pct_reliable_warps.to_percent(2);
    const std::string threads = stats.pct_reliable_threads.to_percent(2);
    if (warps != spec.target->first || threads != spec.target->second) {
      throw ValidationError(spec.name + ": generated " + warps + "% / " + threads + "%, target " +
                            spec.target->first + "% / " + spec.target->second + "%");
    }
  }
  return fx;
}

std::vector<FixtureSpec> fixture_suite() {
  const std::string kAllReliable = "all threads reliable";
  const std::string kAllUnreliable = "all threads unreliable";
  const std::string kWellOrganized = "mixed warps, well-organized";
  const std::string kNeedsRemap = "mixed warps, need remapping";
  std::vector<FixtureSpec> suite;

  auto base = [](std::string name, std::string label, std::string category, std::uint32_t ctas,
                 std::uint32_t cta_size, std::string warps, std::string threads) {
    FixtureSpec s;
    s.name = std::move(name);
    s.label = std::move(label);
    s.category = std::move(category);
    s.num_ctas = ctas;
    s.cta_size = cta_size;
    s.target = std::make_pair(std::move(warps), std::move(threads));
    return s;
  };

  {
    // 25 x 160 threads: 5 warps per CTA so 65 reliable warps after remapping
    // are 52% of 125.
    FixtureSpec s = base("jmeint", "Jmeint K1", kNeedsRemap, 25, 160, "0.00", "55.15");
    s.remappable = true;
    s.pattern.kind = PatternKind::kScattered;
    for (std::uint32_t c = 0; c < 25; ++c) {
      const bool three = c % 5 < 3;  // 15 CTAs end up with 3 reliable warps, 10 with 2
      s.pattern.scattered.push_back({(three ? 101u : 69u) + (c == 0 ? 1u : 0u), 0, 0});
    }
    s.reliable_levels = levels({"0.015", "0.03", "0.045"});
    s.unreliable_levels = levels({"0.08", "0.15"});
    s.note = "every warp mixed; 2206 of 4000 threads reliable";
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("laplacian", "Laplacian K1", kNeedsRemap, 20, 256, "49.38", "54.08");
    s.remappable = true;
    s.pattern.kind = PatternKind::kScattered;
    for (std::uint32_t c = 0; c < 20; ++c) {
      if (c < 6) {
        s.pattern.scattered.push_back({160, 4, 0});
      } else if (c < 10) {
        s.pattern.scattered.push_back({132, 4, 0});
      } else if (c == 10) {
        s.pattern.scattered.push_back({129, 4, 3});
      } else if (c < 19) {
        s.pattern.scattered.push_back({128, 4, 4});
      } else {
        s.pattern.scattered.push_back({128, 3, 0});
      }
    }
    s.reliable_levels = levels({"0", "0.04"});
    s.unreliable_levels = levels({"0.12", "0.35"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("meanfilter", "MeanFilter K1", kNeedsRemap, 40, 256, "17.19", "26.55");
    s.remappable = true;
    s.pattern.kind = PatternKind::kScattered;
    for (std::uint32_t c = 0; c < 40; ++c) {
      const std::uint32_t p = c < 15 ? 2 : 1;
      const std::uint32_t extra = c < 22 ? 40 : (c < 39 ? 4 : 11);
      const std::uint32_t mixed = std::min(8 - p, extra);
      s.pattern.scattered.push_back({32 * p + extra, p, 8 - p - mixed});
    }
    s.reliable_levels = levels({"0", "0.02"});
    s.unreliable_levels = {{Fraction(1), Fraction(0), 1536}};
    auto rest = levels({"0.25", "0.6"});
    s.unreliable_levels.insert(s.unreliable_levels.end(), rest.begin(), rest.end());
    s.note = "1536 threads (15%) always produce SDC";
    suite.push_back(std::move(s));
  }
  const std::pair<const char*, std::uint32_t> nn[] = {{"nn_k1", 2}, {"nn_k2", 2}, {"nn_k3", 1}, {"nn_k4", 1}};
  const std::uint32_t nn_size[] = {256, 128, 128, 64};
  for (int i = 0; i < 4; ++i) {
    FixtureSpec s = base(nn[i].first, "NN K" + std::to_string(i + 1), kAllReliable, nn[i].second, nn_size[i],
                         "100.00", "100.00");
    s.pattern.kind = PatternKind::kAllReliable;
    s.reliable_levels = levels({"0", "0.01"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("scp", "SCP K1", kAllUnreliable, 128, 256, "0.00", "0.00");
    s.pattern.kind = PatternKind::kAllUnreliable;
    s.unreliable_levels = levels({"0.42", "0.55", "0.7"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("conv2d", "2DCONV K1", kNeedsRemap, 8, 256, "0.00", "12.11");
    s.remappable = true;
    s.pattern.kind = PatternKind::kScattered;
    for (std::uint32_t r : {64u, 64u, 64u, 56u, 0u, 0u, 0u, 0u}) {
      s.pattern.scattered.push_back({r, 0, r == 0 ? 8u : 0u});
    }
    s.reliable_levels = levels({"0.01", "0.04"});
    s.unreliable_levels = levels({"0.3", "0.8"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("mvt", "MVT K1", kAllUnreliable, 16, 256, "0.00", "0.00");
    s.pattern.kind = PatternKind::kAllUnreliable;
    s.unreliable_levels = levels({"0.6382"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("gaussian_k1", "Gaussian K1", kWellOrganized, 1, 512, "87.50", "90.62");
    s.pattern.kind = PatternKind::kPrefixUnreliable;
    s.pattern.prefix = 48;
    s.reliable_levels = levels({"0"});
    s.unreliable_levels = levels({"0.3", "0.6"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("gaussian_k2", "Gaussian K2", kNeedsRemap, 36, 256, "63.89", "95.87");
    s.remappable = true;
    s.pattern.kind = PatternKind::kScattered;
    for (std::uint32_t c = 0; c < 36; ++c) {
      if (c < 23) {
        s.pattern.scattered.push_back({256, 8, 0});
      } else {
        s.pattern.scattered.push_back({c < 27 ? 226u : 227u, 0, 0});
      }
    }
    s.pure_level = Fraction(36, 1000);
    s.reliable_levels = levels({"0.02"});
    s.unreliable_levels = levels({"0.2", "0.45"});
    s.note = "the dominant thread group sits at 3.6% SDC";
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("hotspot", "HotSpot K1", kNeedsRemap, 8, 256, "25.00", "43.75");
    s.remappable = true;
    s.pattern.kind = PatternKind::kPerCtaBlocks;
    auto R = [](std::uint32_t n) { return Block{true, n}; };
    auto U = [](std::uint32_t n) { return Block{false, n}; };
    std::vector<Block> cta0 = {R(24), U(8), R(8), U(24)};
    for (int i = 0; i < 5; ++i) cta0.insert(cta0.end(), {R(5), U(27)});
    cta0.insert(cta0.end(), {U(25), R(7)});
    std::vector<Block> cta2 = repeat({R(21), U(11)}, 6)[0];
    cta2.insert(cta2.end(), {R(22), U(10), R(22), U(10)});
    std::vector<Block> cta5 = {R(96)};
    for (int i = 0; i < 4; ++i) cta5.insert(cta5.end(), {R(13), U(19)});
    cta5.insert(cta5.end(), {R(12), U(20)});
    std::vector<Block> cta7 = {R(160), R(8), U(24), R(7), U(25), R(7), U(25)};
    s.pattern.blocks = {cta0,
                        repeat({R(4), U(28)}, 8)[0],
                        cta2,
                        repeat({R(4), U(28)}, 8)[0],
                        {U(256)},
                        cta5,
                        {R(256)},
                        cta7};
    s.pure_level = Fraction(0);
    s.reliable_levels = levels({"0.02", "0.045"});
    s.unreliable_levels = levels({"0.15", "0.3", "0.5"});
    s.note = "CTA 0 remaps its 64 reliable threads into its first and last warp";
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("nearestneighbor", "NearestNeighbor K1", kWellOrganized, 168, 512, "0.56", "0.57");
    s.pattern.kind = PatternKind::kPrefixUnreliable;
    s.pattern.prefix = 168 * 512 - 490;
    s.reliable_levels = levels({"0", "0.02"});
    s.unreliable_levels = levels({"0.25", "0.5"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("pathfinder", "PathFinder K1", kNeedsRemap, 3, 256, "8.33", "19.79");
    s.remappable = true;
    s.pattern.kind = PatternKind::kScattered;
    s.pattern.scattered = {{64, 1, 0}, {56, 0, 0}, {32, 1, 7}};
    s.reliable_levels = levels({"0", "0.03"});
    s.unreliable_levels = levels({"0.1", "0.18"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("srad_k3", "SRAD K3", kAllReliable, 8, 256, "100.00", "100.00");
    s.pattern.kind = PatternKind::kAllReliable;
    s.reliable_levels = levels({"0", "0.01"});
    suite.push_back(std::move(s));
  }
  {
    FixtureSpec s = base("srad_k4", "SRAD K4", kAllReliable, 4, 256, "100.00", "100.00");
    s.pattern.kind = PatternKind::kAllReliable;
    s.reliable_levels = levels({"0", "0.01"});
    suite.push_back(std::move(s));
  }
  return suite;
}

std::vector<FixtureSpec> auxiliary_fixtures() {
  FixtureSpec s;
  s.name = "alternating";
  s.label = "Alternating";
  s.category = "mixed warps, need remapping";
  s.remappable = true;
  s.num_ctas = 1;
  s.cta_size = 64;
  s.pattern.kind = PatternKind::kAlternating;
  s.reliable_levels = levels({"0"});
  s.unreliable_levels = levels({"0.5"});
  s.target = std::make_pair(std::string("0.00"), std::string("50.00"));
  return {s};
}

std::optional<FixtureSpec> find_fixture(std::string_view name) {
  for (auto& s : fixture_suite()) {
    if (s.name == name) return s;
  }
  for (auto& s : auxiliary_fixtures()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

std::string fixture_manifest_json(const std::vector<FixtureSpec>& specs, std::uint64_t seed) {
  auto list = nlohmann::ordered_json::array();
  for (const auto& spec : specs) {
    const Fixture fx = generate_fixture(spec, seed);
    const auto linear = LaunchLayout::linear(spec.num_ctas, spec.cta_size);
    const auto before = kernel_stats(classify_warps(fx.flags, linear), fx.flags);
    const auto after = remapped_stats(build_plan(fx.flags, spec.num_ctas, spec.cta_size), fx.flags);
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["label"] = spec.label;
    j["category"] = spec.category;
    j["remappable"] = spec.remappable;
    j["num_ctas"] = spec.num_ctas;
    j["cta_size"] = spec.cta_size;
    j["pattern"] = spec.pattern.describe();
    j["tau"] = spec.tau.to_decimal();
    if (spec.target) {
      j["expected"] = {{"pct_reliable_warps", spec.target->first}, {"pct_reliable_threads", spec.target->second}};
    }
    j["generated"] = {{"pct_reliable_warps", before.pct_reliable_warps.to_percent(2)},
                      {"pct_reliable_threads", before.pct_reliable_threads.to_percent(2)},
                      {"pct_reliable_warps_after_remap", after.pct_reliable_warps.to_percent(2)}};
    if (!spec.note.empty()) j["note"] = spec.note;
    list.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["seed"] = seed;
  root["fixtures"] = std::move(list);
  return root.dump(2) + "\n";
}

std::string add_one_source(std::uint32_t ctas, std::uint32_t cta_size) {
  const std::string n = std::to_string(ctas * cta_size);
  return ".kernel add_one\n.ctas " + std::to_string(ctas) + "\n.ctasize " + std::to_string(cta_size) +
         "\n.in in " + n + "\n.out out " + n +
         "\n"
         "  ld r0, in[tid]\n"
         "  movi r1, 1\n"
         "  iadd r2, r0, r1\n"
         "  st out[tid], r2\n"
         "  exit\n";
}

KernelProgram add_one_kernel(std::uint32_t ctas, std::uint32_t cta_size) {
  const std::uint32_t n = ctas * cta_size;
  return KernelBuilder("add_one")
      .ctas(ctas)
      .cta_size(cta_size)
      .input("in", n)
      .output("out", n)
      .ld(0, "in", kTidRegister)
      .movi(1, 1)
      .arith(Opcode::kIAdd, 2, 0, Operand::reg(1))
      .st("out", kTidRegister, 2)
      .exit()
      .build();
}

std::vector<Buffer> add_one_inputs(const KernelProgram& program) {
  Buffer in(program.inputs.at(0).size);
  for (std::uint32_t i = 0; i < in.size(); ++i) in[i] = 5 + i;
  return {in};
}

KernelProgram address_kernel(std::uint32_t ctas, std::uint32_t cta_size) {
  const std::uint32_t n = ctas * cta_size;
  return KernelBuilder("address")
      .ctas(ctas)
      .cta_size(cta_size)
      .input("in", n)
      .output("out", n)
      .movi(1, 0)
      .arith(Opcode::kIAdd, 2, kTidRegister, Operand::reg(1))
      .ld(3, "in", 2)
      .st("out", kTidRegister, 3)
      .exit()
      .build();
}

KernelProgram parity_kernel(std::uint32_t ctas, std::uint32_t cta_size) {
  const std::uint32_t n = ctas * cta_size;
  return KernelBuilder("parity")
      .ctas(ctas)
      .cta_size(cta_size)
      .input("sel", n)
      .input("in", n)
      .output("out", n)
      .ld(0, "sel", kTidRegister)
      .ld(1, "in", kTidRegister)
      .setp(Compare::kNe, 2, 0, Operand::imm(0))
      .bra_if(2, "odd")
      .arith(Opcode::kIMul, 3, 1, Operand::imm(3))
      .arith(Opcode::kIAdd, 3, 3, Operand::imm(1))
      .st("out", kTidRegister, 3)
      .exit()
      .label("odd")
      .arith(Opcode::kIMul, 3, 1, Operand::imm(5))
      .arith(Opcode::kIAdd, 3, 3, Operand::imm(2))
      .arith(Opcode::kIMul, 3, 3, Operand::imm(7))
      .arith(Opcode::kIAdd, 3, 3, Operand::imm(9))
      .arith(Opcode::kISub, 3, 3, Operand::reg(0))
      .arith(Opcode::kIAdd, 3, 3, Operand::imm(11))
      .st("out", kTidRegister, 3)
      .exit()
      .build();
}

std::vector<Buffer> parity_inputs(const KernelProgram& program) {
  const std::uint32_t n = program.total_threads();
  Buffer sel(n), in(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    sel[i] = i & 1u;
    in[i] = 100 + 3 * i;
  }
  return {sel, in};
}

KernelProgram dead_write_kernel(std::uint32_t ctas, std::uint32_t cta_size) {
  const std::uint32_t n = ctas * cta_size;
  return KernelBuilder("dead_write")
      .ctas(ctas)
      .cta_size(cta_size)
      .input("in", n)
      .output("out", n)
      .ld(0, "in", kTidRegister)
      .movi(1, 7)  // overwritten below before any read
      .movi(1, 9)
      .arith(Opcode::kIAdd, 2, 0, Operand::reg(1))
      .st("out", kTidRegister, 2)
      .exit()
      .build();
}

std::vector<Buffer> default_inputs(const KernelProgram& program, std::optional<std::uint64_t> seed) {
  std::vector<Buffer> out;
  Rng rng(seed.value_or(0));
  for (const auto& b : program.inputs) {
    Buffer buf(b.size);
    for (std::uint32_t i = 0; i < b.size; ++i) buf[i] = seed ? static_cast<std::uint32_t>(rng.next()) : i;
    out.push_back(std::move(buf));
  }
  return out;
}

}  // namespace warpguard
