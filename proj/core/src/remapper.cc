#include "warpguard/remapper.h"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "warpguard/errors.h"

namespace warpguard {

RemapPlan build_plan(const ReliabilityFlags& flags, std::uint32_t num_ctas, std::uint32_t cta_size) {
  if (static_cast<std::uint64_t>(num_ctas) * cta_size != flags.size()) {
    throw ValidationError("flags cover " + std::to_string(flags.size()) + " threads, geometry launches " +
                          std::to_string(static_cast<std::uint64_t>(num_ctas) * cta_size));
  }
  std::vector<std::vector<std::uint32_t>> ctas(num_ctas);
  std::vector<std::uint32_t> reliable;
  std::vector<std::uint32_t> unreliable;
  for (std::uint32_t c = 0; c < num_ctas; ++c) {
    auto& order = ctas[c];
    order.reserve(cta_size);
    reliable.clear();
    unreliable.clear();
    for (std::uint32_t i = 0; i < cta_size; ++i) {
      const std::uint32_t tid = c * cta_size + i;
      auto& buf = flags[tid] ? reliable : unreliable;
      buf.push_back(tid);
      if (buf.size() == kWarpSize) {
        order.insert(order.end(), buf.begin(), buf.end());
        buf.clear();
      }
    }
    order.insert(order.end(), reliable.begin(), reliable.end());
    order.insert(order.end(), unreliable.begin(), unreliable.end());
  }
  RemapPlan plan;
  plan.layout = LaunchLayout(std::move(ctas));
  return plan;
}

LaidOutKernel apply_plan(const KernelProgram& program, const RemapPlan& plan) {
  if (!plan.kernel.empty() && plan.kernel != program.name) {
    throw ValidationError("plan is for kernel '" + plan.kernel + "', not '" + program.name + "'");
  }
  plan.layout.validate_for(program.num_ctas, program.cta_size);
  return {program, plan.layout};
}

KernelReliabilityStats remapped_stats(const RemapPlan& plan, const ReliabilityFlags& flags) {
  KernelReliabilityStats s = kernel_stats(classify_warps(flags, plan.layout), flags);
  s.kernel = plan.kernel;
  s.tau = plan.tau;
  return s;
}

std::string plan_to_json(const RemapPlan& plan) {
  nlohmann::ordered_json j;
  j["kernel"] = plan.kernel;
  j["tau"] = plan.tau.to_decimal();
  j["profile_hash"] = plan.profile_hash;
  auto ctas = nlohmann::ordered_json::array();
  for (std::uint32_t c = 0; c < plan.layout.num_ctas(); ++c) {
    ctas.push_back({{"cta_id", c}, {"new_order", plan.layout.cta(c)}});
  }
  j["ctas"] = std::move(ctas);
  return j.dump() + "\n";
}

RemapPlan plan_from_json(std::string_view text) {
  RemapPlan plan;
  try {
    auto j = nlohmann::json::parse(text);
    plan.kernel = j.at("kernel").get<std::string>();
    const auto& tau = j.at("tau");
    plan.tau = Fraction::parse_decimal(tau.is_string() ? tau.get<std::string>() : tau.dump());
    if (j.contains("profile_hash")) plan.profile_hash = j.at("profile_hash").get<std::string>();
    std::vector<std::vector<std::uint32_t>> ctas;
    for (const auto& entry : j.at("ctas")) {
      const auto id = entry.at("cta_id").get<std::uint32_t>();
      if (id != ctas.size()) throw ValidationError("plan CTAs must be listed in order");
      ctas.push_back(entry.at("new_order").get<std::vector<std::uint32_t>>());
    }
    plan.layout = LaunchLayout(std::move(ctas));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

void save_plan(const RemapPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << plan_to_json(plan);
}

RemapPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open plan " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

}  // namespace warpguard
