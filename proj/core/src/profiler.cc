#include "warpguard/profiler.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "warpguard/errors.h"

namespace warpguard {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::uint32_t parse_u32(std::string_view s, std::size_t row, const char* column) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("profile row " + std::to_string(row) + ": bad " + column + " '" + std::string(s) + "'");
  }
  return v;
}

Fraction parse_fraction(std::string_view s, std::size_t row, const char* column) {
  try {
    return Fraction::parse_decimal(s);
  } catch (const std::exception&) {
    throw ValidationError("profile row " + std::to_string(row) + ": bad " + column + " '" + std::string(s) + "'");
  }
}

ThreadProfile from_counts(const ThreadCounts& c) {
  ThreadProfile t;
  if (c.sites == 0) return t;  // nothing to corrupt: fully masked
  const auto n = static_cast<std::int64_t>(c.sites);
  t.masked = Fraction(static_cast<std::int64_t>(c.masked), n);
  t.sdc = Fraction(static_cast<std::int64_t>(c.sdc), n);
  t.other = Fraction(static_cast<std::int64_t>(c.other), n);
  return t;
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  return p == Provenance::kMeasured ? "measured" : "extrapolated";
}

std::string_view profile_mode_name(ProfileMode m) { return m == ProfileMode::kPruned ? "pruned" : "exhaustive"; }

void KernelProfile::validate() const {
  std::map<std::uint32_t, const ThreadProfile*> groups;
  for (std::size_t i = 0; i < threads.size(); ++i) {
    const ThreadProfile& t = threads[i];
    const std::string who = "thread " + std::to_string(t.thread_id);
    if (t.thread_id != i) {
      throw ValidationError(t.thread_id < i ? "duplicate " + who : "missing thread " + std::to_string(i));
    }
    for (const Fraction* f : {&t.masked, &t.sdc, &t.other}) {
      if (*f < Fraction(0) || *f > Fraction(1)) throw ValidationError(who + ": fraction outside [0,1]");
    }
    double sum = t.masked.to_double() + t.sdc.to_double() + t.other.to_double();
    if (std::fabs(sum - 1.0) > 1e-9) throw ValidationError(who + ": fractions do not sum to 1");
    auto [it, fresh] = groups.emplace(t.group_id, &t);
    if (!fresh && (it->second->masked != t.masked || it->second->sdc != t.sdc || it->second->other != t.other)) {
      throw ValidationError("group " + std::to_string(t.group_id) + " mixes different resilience profiles");
    }
  }
}

bool same_resilience(const KernelProfile& a, const KernelProfile& b) {
  if (a.kernel != b.kernel || a.threads.size() != b.threads.size()) return false;
  for (std::size_t i = 0; i < a.threads.size(); ++i) {
    ThreadProfile x = a.threads[i];
    x.provenance = b.threads[i].provenance;
    if (!(x == b.threads[i])) return false;
  }
  return true;
}

std::map<std::uint32_t, std::vector<std::uint32_t>> group_by_icnt(const ExecutionResult& golden) {
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_icnt;
  for (std::size_t t = 0; t < golden.icnt.size(); ++t) by_icnt[golden.icnt[t]].push_back(static_cast<std::uint32_t>(t));
  std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
  std::uint32_t id = 0;
  for (auto& [icnt, members] : by_icnt) groups.emplace(id++, std::move(members));
  return groups;
}

ProfileRun profile_kernel(const Interpreter& interp, const std::vector<Buffer>& inputs,
                          const ProfileOptions& options) {
  const KernelProgram& p = interp.program();
  GoldenRun plain = golden_run(interp, inputs);
  const auto groups = group_by_icnt(plain.result);

  std::vector<std::uint32_t> targets;
  if (options.mode == ProfileMode::kPruned) {
    for (const auto& [id, members] : groups) targets.push_back(members.front());
  } else {
    targets.resize(p.total_threads());
    for (std::uint32_t t = 0; t < p.total_threads(); ++t) targets[t] = t;
  }
  std::sort(targets.begin(), targets.end());

  GoldenRun golden = golden_run(interp, inputs, nullptr, targets);
  std::vector<FaultSite> sites;
  for (auto t : targets) {
    std::vector<FaultSite> own;
    for (auto d : golden.result.write_ordinals.at(t)) {
      for (std::uint32_t bit = 0; bit < 32; ++bit) own.push_back({t, d, bit});
    }
    if (options.sample_fraction < 1.0) own = sample_sites(own, options.sample_fraction, splitmix64(options.seed ^ t));
    sites.insert(sites.end(), own.begin(), own.end());
  }
  golden.result.write_ordinals.clear();

  CampaignOptions copts;
  copts.workers = options.workers;
  copts.injection.budget = options.budget;
  copts.injection.full_replay = options.full_replay;
  ProfileRun run;
  run.campaign = run_campaign(interp, inputs, golden, sites, copts);
  if (options.sample_fraction < 1.0) run.campaign.seed = options.seed;

  KernelProfile& prof = run.profile;
  prof.kernel = p.name;
  prof.threads.resize(p.total_threads());
  auto measured = [&](std::uint32_t tid) {
    auto it = run.campaign.per_thread.find(tid);
    return from_counts(it == run.campaign.per_thread.end() ? ThreadCounts{} : it->second);
  };

  if (options.mode == ProfileMode::kPruned) {
    for (const auto& [id, members] : groups) {
      const ThreadProfile rep = measured(members.front());
      for (auto tid : members) {
        ThreadProfile& t = prof.threads[tid];
        t = rep;
        t.thread_id = tid;
        t.cta_id = tid / p.cta_size;
        t.icnt = golden.result.icnt[tid];
        t.group_id = id;
        t.provenance = tid == members.front() ? Provenance::kMeasured : Provenance::kExtrapolated;
      }
    }
  } else {
    // iCnt groups split further wherever measured fractions disagree.
    using Key = std::tuple<std::uint32_t, Fraction, Fraction, Fraction>;
    std::vector<std::pair<Key, std::uint32_t>> first_seen;  // key -> lowest tid
    for (std::uint32_t tid = 0; tid < p.total_threads(); ++tid) {
      ThreadProfile& t = prof.threads[tid];
      t = measured(tid);
      t.thread_id = tid;
      t.cta_id = tid / p.cta_size;
      t.icnt = golden.result.icnt[tid];
      Key key{t.icnt, t.masked, t.sdc, t.other};
      if (std::none_of(first_seen.begin(), first_seen.end(), [&](const auto& e) { return e.first == key; })) {
        first_seen.emplace_back(key, tid);
      }
    }
    std::stable_sort(first_seen.begin(), first_seen.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a.first) < std::get<0>(b.first); });
    for (auto& t : prof.threads) {
      Key key{t.icnt, t.masked, t.sdc, t.other};
      auto it = std::find_if(first_seen.begin(), first_seen.end(), [&](const auto& e) { return e.first == key; });
      t.group_id = static_cast<std::uint32_t>(it - first_seen.begin());
    }
  }
  return run;
}

std::string profile_to_csv(const KernelProfile& profile) {
  std::string out = "kernel,cta_id,thread_id,icnt,group_id,masked_pct,sdc_pct,other_pct,provenance\n";
  for (const auto& t : profile.threads) {
    out += profile.kernel;
    out += ',' + std::to_string(t.cta_id) + ',' + std::to_string(t.thread_id) + ',' + std::to_string(t.icnt) + ',' +
           std::to_string(t.group_id) + ',' + t.masked.to_decimal() + ',' + t.sdc.to_decimal() + ',' +
           t.other.to_decimal() + ',' + std::string(provenance_name(t.provenance)) + '\n';
  }
  return out;
}

KernelProfile profile_from_csv(std::string_view text) {
  KernelProfile prof;
  std::size_t row = 0;
  std::size_t pos = 0;
  bool header = true;
  bool have_kernel = false;
  std::vector<ThreadProfile> rows;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "kernel,cta_id,thread_id,icnt,group_id,masked_pct,sdc_pct,other_pct,provenance") {
        throw ValidationError("profile CSV: unexpected header");
      }
      header = false;
      continue;
    }
    ++row;
    auto f = split_csv(line);
    if (f.size() != 9) throw ValidationError("profile row " + std::to_string(row) + ": expected 9 columns");
    if (!have_kernel) {
      prof.kernel = std::string(f[0]);
      have_kernel = true;
    } else if (f[0] != prof.kernel) {
      throw ValidationError("profile row " + std::to_string(row) + ": mixes kernels");
    }
    ThreadProfile t;
    t.cta_id = parse_u32(f[1], row, "cta_id");
    t.thread_id = parse_u32(f[2], row, "thread_id");
    t.icnt = parse_u32(f[3], row, "icnt");
    t.group_id = parse_u32(f[4], row, "group_id");
    t.masked = parse_fraction(f[5], row, "masked_pct");
    t.sdc = parse_fraction(f[6], row, "sdc_pct");
    t.other = parse_fraction(f[7], row, "other_pct");
    if (f[8] == "measured") {
      t.provenance = Provenance::kMeasured;
    } else if (f[8] == "extrapolated") {
      t.provenance = Provenance::kExtrapolated;
    } else {
      throw ValidationError("profile row " + std::to_string(row) + ": bad provenance");
    }
    rows.push_back(t);
  }
  if (header) throw ValidationError("profile CSV: missing header");
  if (rows.empty()) throw ValidationError("profile CSV: no rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ThreadProfile& a, const ThreadProfile& b) { return a.thread_id < b.thread_id; });
  prof.threads = std::move(rows);
  prof.validate();
  return prof;
}

void save_profile(const KernelProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << profile_to_csv(profile);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

KernelProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open profile " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return profile_from_csv(ss.str());
}

std::string profile_hash(const KernelProfile& profile) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : profile_to_csv(profile)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace warpguard
