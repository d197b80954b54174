#ifndef WARPGUARD_PROFILER_H_
#define WARPGUARD_PROFILER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "warpguard/fault_engine.h"
#include "warpguard/fraction.h"

namespace warpguard {

enum class Provenance : std::uint8_t { kMeasured, kExtrapolated };
std::string_view provenance_name(Provenance p);

struct ThreadProfile {
  std::uint32_t thread_id = 0;
  std::uint32_t cta_id = 0;
  std::uint32_t icnt = 0;
  std::uint32_t group_id = 0;
  Fraction masked{1};
  Fraction sdc{0};
  Fraction other{0};
  Provenance provenance = Provenance::kMeasured;
  friend bool operator==(const ThreadProfile&, const ThreadProfile&) = default;
};

struct KernelProfile {
  std::string kernel;
  std::vector<ThreadProfile> threads;  // indexed by thread id
  Fraction tau{1, 20};                 // threshold used downstream; not part of the CSV

  // Throws ValidationError on missing/duplicate ids, fractions outside [0,1],
  // fractions not summing to 1, or groups with differing fractions.
  void validate() const;
  friend bool operator==(const KernelProfile&, const KernelProfile&) = default;
};

// Equal except for provenance (measured vs extrapolated).
bool same_resilience(const KernelProfile& a, const KernelProfile& b);

// Group id -> thread ids, groups numbered by ascending iCnt.
std::map<std::uint32_t, std::vector<std::uint32_t>> group_by_icnt(const ExecutionResult& golden);

enum class ProfileMode : std::uint8_t { kPruned, kExhaustive };
std::string_view profile_mode_name(ProfileMode m);

struct ProfileOptions {
  ProfileMode mode = ProfileMode::kPruned;
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;  // 0: derived from the golden run
  unsigned workers = 0;
  bool full_replay = false;
};

struct ProfileRun {
  KernelProfile profile;
  CampaignResult campaign;
};

// Pruned: one representative (lowest thread id) per iCnt group is injected and
// its fractions are copied to the rest of the group. Exhaustive: every thread
// is injected; group ids are then refined so each group shares one profile.
ProfileRun profile_kernel(const Interpreter& interp, const std::vector<Buffer>& inputs,
                          const ProfileOptions& options = {});

std::string profile_to_csv(const KernelProfile& profile);
KernelProfile profile_from_csv(std::string_view text);
void save_profile(const KernelProfile& profile, const std::filesystem::path& path);
KernelProfile load_profile(const std::filesystem::path& path);

// FNV-1a 64 of the CSV rendering, as 16 hex digits.
std::string profile_hash(const KernelProfile& profile);

}  // namespace warpguard

#endif  // WARPGUARD_PROFILER_H_
