#include "cli.h"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "warpguard/benchgen.h"
#include "warpguard/classifier.h"
#include "warpguard/cost_model.h"
#include "warpguard/errors.h"
#include "warpguard/fault_engine.h"
#include "warpguard/kernel_ir.h"
#include "warpguard/profiler.h"
#include "warpguard/protector.h"
#include "warpguard/remapper.h"

namespace warpguard::cli {
namespace {

using Json = nlohmann::ordered_json;

// Published figures, printed next to measured values in reports.
constexpr const char* kPaperMeanBefore = "23.40";
constexpr const char* kPaperMeanAfter = "42.08";
constexpr const char* kPaperMeanSavingsDetect = "20.61";
constexpr const char* kPaperMeanSavingsCorrect = "27.15";
constexpr const char* kPaperMeanRemapOverhead = "1.63";

struct PaperRow {
  std::string after;            // reliable warps after remapping
  std::string savings_detect;   // per-kernel savings, when stated
  std::string savings_correct;
};

PaperRow paper_row(const std::string& kernel) {
  if (kernel == "jmeint") return {"52.00", "", ""};
  if (kernel == "gaussian_k2") return {"", "42.39", "60.02"};
  return {};
}

std::string paper_before(const std::string& kernel, bool threads) {
  auto spec = find_fixture(kernel);
  if (!spec || !spec->target) return "";
  return threads ? spec->target->second : spec->target->first;
}

// ---------------------------------------------------------------- file I/O

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing artifact " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecutionError("cannot write " + path.string());
  out << text;
  if (!out) throw ExecutionError("write failed for " + path.string());
}

template <typename F>
auto artifact(const std::filesystem::path& path, F&& load) {
  try {
    return load(read_file(path));
  } catch (const ParseError& e) {
    throw ArtifactError(path.string() + ":" + std::to_string(e.line()) + ": " + e.what());
  } catch (const ArtifactError&) {
    throw;
  } catch (const std::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string inputs_to_json(const KernelProgram& p, const std::vector<Buffer>& inputs) {
  Json j = Json::object();
  for (std::size_t b = 0; b < p.inputs.size(); ++b) j[p.inputs[b].name] = inputs.at(b);
  return j.dump() + "\n";
}

std::vector<Buffer> inputs_from_json(const KernelProgram& p, const std::string& text) {
  const Json j = Json::parse(text);
  if (!j.is_object()) throw ValidationError("inputs must be a JSON object of buffer name to word list");
  for (const auto& [name, v] : j.items()) {
    if (!p.input_index(name)) throw ValidationError("unknown input buffer '" + name + "'");
  }
  std::vector<Buffer> out;
  for (const auto& decl : p.inputs) {
    if (!j.contains(decl.name)) throw ValidationError("input buffer '" + decl.name + "' missing");
    Buffer b = j.at(decl.name).get<Buffer>();
    if (b.size() != decl.size) {
      throw ValidationError("input buffer '" + decl.name + "' has " + std::to_string(b.size()) + " words, kernel declares " +
                            std::to_string(decl.size));
    }
    out.push_back(std::move(b));
  }
  return out;
}

Json parse_obj(const std::string& text) { return Json::parse(text); }

// ------------------------------------------------------------ artifacts

struct Workspace {
  const RunConfig& cfg;
  std::filesystem::path at(const char* name) const { return cfg.out / name; }

  KernelProgram kernel() const { return artifact(at("kernel.ir"), [](const std::string& t) { return parse_kernel(t); }); }
  std::vector<Buffer> inputs(const KernelProgram& p) const {
    return artifact(at("inputs.json"), [&](const std::string& t) { return inputs_from_json(p, t); });
  }
  KernelProfile profile(const KernelProgram& p) const {
    KernelProfile prof = artifact(at("profile.csv"), [](const std::string& t) { return profile_from_csv(t); });
    if (prof.kernel != p.name || prof.threads.size() != p.total_threads()) {
      throw ArtifactError("profile.csv describes '" + prof.kernel + "' with " + std::to_string(prof.threads.size()) +
                          " threads; kernel.ir is '" + p.name + "' with " + std::to_string(p.total_threads()));
    }
    return prof;
  }
  RemapPlan plan(const KernelProgram& p, const KernelProfile& prof) const {
    RemapPlan plan = artifact(at("plan.json"), [](const std::string& t) { return plan_from_json(t); });
    if (plan.kernel != p.name) throw ArtifactError("plan.json is for kernel '" + plan.kernel + "'");
    const std::string hash = profile_hash(prof);
    if (plan.profile_hash != hash) {
      throw ArtifactError("plan.json was built from profile " + plan.profile_hash + ", profile.csv hashes to " + hash);
    }
    try {
      plan.layout.validate_for(p.num_ctas, p.cta_size);
    } catch (const std::exception& e) {
      throw ArtifactError(std::string("plan.json: ") + e.what());
    }
    return plan;
  }
  CostTable costs() const {
    if (cfg.cost_table.empty()) return CostTable::defaults();
    return artifact(cfg.cost_table, [](const std::string& t) { return CostTable::from_json(t); });
  }
};

std::string with_config(const std::string& report, const RunConfig& cfg) {
  Json j = parse_obj(report);
  j["config"] = parse_obj(cfg.to_json());
  return j.dump(2) + "\n";
}

// ------------------------------------------------------------- commands

void cmd_profile(const RunConfig& cfg, std::ostream& out) {
  cfg.validate(true);
  Workspace ws{cfg};
  KernelProgram program;
  std::vector<Buffer> inputs;
  std::optional<Fixture> fx;
  if (!cfg.fixture.empty()) {
    auto spec = find_fixture(cfg.fixture);
    if (!spec) throw ConfigError("unknown fixture '" + cfg.fixture + "'");
    fx = generate_fixture(*spec);
    program = fx->program;
    inputs = fx->inputs;
  } else {
    program = artifact(cfg.kernel_path, [](const std::string& t) { return parse_kernel(t); });
    inputs = cfg.inputs_path.empty()
                 ? default_inputs(program)
                 : artifact(cfg.inputs_path, [&](const std::string& t) { return inputs_from_json(program, t); });
  }

  KernelProfile profile;
  std::optional<CampaignResult> campaign;
  if (fx && cfg.declared) {
    profile = fx->profile;
  } else {
    Interpreter interp(program, ws.costs());
    ProfileOptions opts;
    opts.mode = cfg.profile_mode == "exhaustive" ? ProfileMode::kExhaustive : ProfileMode::kPruned;
    opts.sample_fraction = cfg.sample;
    opts.seed = cfg.seed;
    opts.budget = cfg.budget;
    opts.workers = cfg.workers;
    ProfileRun run = profile_kernel(interp, inputs, opts);
    profile = std::move(run.profile);
    campaign = std::move(run.campaign);
  }
  profile.tau = cfg.tau;

  write_file(ws.at("kernel.ir"), to_text(program));
  write_file(ws.at("inputs.json"), inputs_to_json(program, inputs));
  write_file(ws.at("profile.csv"), profile_to_csv(profile));
  write_file(ws.at("config.json"), cfg.to_json());
  std::error_code ec;
  if (campaign) {
    std::ostringstream sites, agg;
    write_campaign_csv(sites, *campaign);
    write_aggregate_csv(agg, *campaign);
    write_file(ws.at("campaign.csv"), sites.str());
    write_file(ws.at("aggregate.csv"), agg.str());
  } else {
    std::filesystem::remove(ws.at("campaign.csv"), ec);
    std::filesystem::remove(ws.at("aggregate.csv"), ec);
  }
  std::uint32_t groups = 0;
  for (const auto& t : profile.threads) groups = std::max(groups, t.group_id + 1);
  out << "profile: " << program.name << ", " << profile.threads.size() << " threads, " << groups << " groups";
  if (campaign) out << ", " << campaign->per_site.size() << " injections";
  else out << ", declared";
  out << " -> " << ws.at("profile.csv").string() << "\n";
}

void cmd_classify(const RunConfig& cfg, std::ostream& out) {
  cfg.validate(false);
  Workspace ws{cfg};
  const KernelProgram program = ws.kernel();
  const KernelProfile profile = ws.profile(program);
  const auto flags = classify_threads(profile, cfg.tau);
  const auto linear = LaunchLayout::linear(program.num_ctas, program.cta_size);
  auto stats = kernel_stats(classify_warps(flags, linear), flags);
  stats.kernel = program.name;
  stats.tau = cfg.tau;
  write_file(ws.at("stats.json"), with_config(stats_to_json(stats), cfg));
  write_file(ws.at("scatter.csv"), scatter_csv(profile, flags, linear));
  out << "classify: " << program.name << " tau=" << cfg.tau.to_decimal() << ": reliable warps "
      << stats.pct_reliable_warps.to_percent() << "%, reliable threads " << stats.pct_reliable_threads.to_percent()
      << "% (" << stats.reliable_warps << " reliable, " << stats.unreliable_warps << " unreliable, "
      << stats.mixed_warps << " mixed)\n";
}

void cmd_remap(const RunConfig& cfg, std::ostream& out) {
  cfg.validate(false);
  Workspace ws{cfg};
  const KernelProgram program = ws.kernel();
  const KernelProfile profile = ws.profile(program);
  const auto flags = classify_threads(profile, cfg.tau);
  RemapPlan plan = build_plan(flags, program.num_ctas, program.cta_size);
  plan.kernel = program.name;
  plan.tau = cfg.tau;
  plan.profile_hash = profile_hash(profile);
  const auto linear = LaunchLayout::linear(program.num_ctas, program.cta_size);
  const auto before = kernel_stats(classify_warps(flags, linear), flags);
  auto after = remapped_stats(plan, flags);
  after.kernel = program.name;
  after.tau = cfg.tau;
  write_file(ws.at("plan.json"), plan_to_json(plan));
  write_file(ws.at("stats_remapped.json"), with_config(stats_to_json(after), cfg));
  write_file(ws.at("scatter_remapped.csv"), scatter_csv(profile, flags, plan.layout));
  out << "remap: " << program.name << ": reliable warps " << before.pct_reliable_warps.to_percent() << "% -> "
      << after.pct_reliable_warps.to_percent() << "% (" << after.mixed_warps << " mixed after)\n";
}

void cmd_protect(const RunConfig& cfg, std::ostream& out) {
  cfg.validate(false);
  if (cfg.mode == Mode::kNone) throw ConfigError("protect needs --mode detect or --mode correct");
  Workspace ws{cfg};
  const KernelProgram program = ws.kernel();
  const auto inputs = ws.inputs(program);
  const KernelProfile profile = ws.profile(program);
  const RemapPlan plan = ws.plan(program, profile);
  if (cfg.fault && cfg.fault->thread_id >= program.total_threads()) {
    throw ConfigError("--fault thread " + std::to_string(cfg.fault->thread_id) + " is not launched");
  }
  const auto flags = classify_threads(profile, plan.tau);
  const ProtectionPlan pplan = build_protection_plan(
      classify_warps(flags, plan.layout), cfg.mode == Mode::kDetect ? ProtectionMode::kDetect : ProtectionMode::kCorrect);
  Interpreter interp(program, ws.costs());
  std::uint64_t budget = cfg.budget;
  if (budget == 0) budget = golden_run(interp, inputs, &plan.layout).hang_budget;
  const ProtectedRunResult result = run_protected(interp, inputs, plan.layout, pplan, cfg.fault, budget);

  Json j = parse_obj(protection_report_json(program, pplan, result));
  if (cfg.fault) {
    j["fault"] = {{"thread_id", cfg.fault->thread_id}, {"dyn_instr", cfg.fault->dyn_instr}, {"bit", cfg.fault->bit}};
  } else {
    j["fault"] = nullptr;
  }
  j["config"] = parse_obj(cfg.to_json());
  write_file(ws.at("protection.json"), j.dump(2) + "\n");
  out << "protect: " << program.name << " " << protection_mode_name(pplan.mode) << ", " << pplan.protected_warps()
      << " of " << plan.layout.total_warps() << " warps replicated, " << result.detections.size() << " detections, "
      << result.corrections.size() << " corrections, " << result.uncorrectable.size() << " uncorrectable, "
      << termination_name(result.termination) << "\n";
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
  cfg.validate(false);
  Workspace ws{cfg};
  const KernelProgram program = ws.kernel();
  const auto inputs = ws.inputs(program);
  const KernelProfile profile = ws.profile(program);
  const RemapPlan plan = ws.plan(program, profile);
  const auto flags = classify_threads(profile, plan.tau);
  const auto linear = LaunchLayout::linear(program.num_ctas, program.cta_size);
  const auto before = kernel_stats(classify_warps(flags, linear), flags);
  const auto after = remapped_stats(plan, flags);
  Interpreter interp(program, ws.costs());
  const bool protect = cfg.mode != Mode::kNone;
  CostReport cost;
  try {
    cost = account(interp, inputs, linear, plan.layout, flags, cfg.remap_overhead, protect);
  } catch (const GoldenRunError& e) {
    throw ExecutionError(e.what());
  }
  cost.kernel = program.name;

  const PaperRow paper = paper_row(program.name);
  Json j = parse_obj(cost_report_json(cost));
  j["tau"] = plan.tau.to_decimal();
  j["profile_hash"] = plan.profile_hash;
  j["reliable_warps"] = {{"before_pct", before.pct_reliable_warps.to_percent()},
                         {"after_pct", after.pct_reliable_warps.to_percent()}};
  Json ref;
  ref["pct_reliable_warps_before"] = paper_before(program.name, false);
  ref["pct_reliable_threads"] = paper_before(program.name, true);
  ref["pct_reliable_warps_after"] = paper.after;
  ref["savings_detect_pct"] = paper.savings_detect;
  ref["savings_correct_pct"] = paper.savings_correct;
  ref["mean_pct_reliable_warps_before"] = kPaperMeanBefore;
  ref["mean_pct_reliable_warps_after"] = kPaperMeanAfter;
  ref["mean_savings_detect_pct"] = kPaperMeanSavingsDetect;
  ref["mean_savings_correct_pct"] = kPaperMeanSavingsCorrect;
  ref["mean_remap_overhead_pct"] = kPaperMeanRemapOverhead;
  j["paper_reference"] = std::move(ref);
  j["config"] = parse_obj(cfg.to_json());
  write_file(ws.at("cost.json"), j.dump(2) + "\n");
  write_file(ws.at("cost.csv"), cost_csv_header() + cost_csv_row(cost));

  std::string bars =
      "kernel,pct_reliable_warps_before,pct_reliable_warps_after,paper_pct_reliable_warps_before,"
      "paper_pct_reliable_warps_after\n";
  bars += program.name + ',' + before.pct_reliable_warps.to_percent() + ',' + after.pct_reliable_warps.to_percent() +
          ',' + paper_before(program.name, false) + ',' + paper.after + '\n';
  write_file(ws.at("warp_bars.csv"), bars);

  std::string savings = "kernel,savings_detect_pct,savings_correct_pct,paper_savings_detect_pct,paper_savings_correct_pct\n";
  savings += program.name + ',' + (protect ? cost.savings_detect.to_percent() : "") + ',' +
             (protect ? cost.savings_correct.to_percent() : "") + ',' + paper.savings_detect + ',' +
             paper.savings_correct + '\n';
  savings += std::string("paper_mean,,,") + kPaperMeanSavingsDetect + ',' + kPaperMeanSavingsCorrect + '\n';
  write_file(ws.at("savings_bars.csv"), savings);

  out << "report: " << program.name << ": reliable warps " << before.pct_reliable_warps.to_percent() << "% -> "
      << after.pct_reliable_warps.to_percent() << "%";
  if (protect) {
    out << ", savings detect " << cost.savings_detect.to_percent() << "% (paper mean " << kPaperMeanSavingsDetect
        << "%), correct " << cost.savings_correct.to_percent() << "% (paper mean " << kPaperMeanSavingsCorrect << "%)";
  }
  out << "\n";
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  cfg.validate(false);
  if (cfg.taus.empty()) throw ConfigError("sweep needs --taus or --tau-range");
  Workspace ws{cfg};
  const KernelProgram program = ws.kernel();
  const KernelProfile profile = ws.profile(program);
  const auto linear = LaunchLayout::linear(program.num_ctas, program.cta_size);
  std::string csv = "tau,pct_reliable_warps_before,pct_reliable_warps_after\n";
  for (const auto& tau : cfg.taus) {
    const auto flags = classify_threads(profile, tau);
    const auto before = kernel_stats(classify_warps(flags, linear), flags);
    const auto after = remapped_stats(build_plan(flags, program.num_ctas, program.cta_size), flags);
    csv += tau.to_decimal() + ',' + before.pct_reliable_warps.to_percent() + ',' +
           after.pct_reliable_warps.to_percent() + '\n';
  }
  write_file(ws.at("sweep.csv"), csv);
  out << "sweep: " << program.name << ", " << cfg.taus.size() << " thresholds -> " << ws.at("sweep.csv").string()
      << "\n";
}

void cmd_fixtures(const RunConfig& cfg, std::ostream& out) {
  const auto suite = fixture_suite();
  write_file(cfg.out / "fixtures.json", fixture_manifest_json(suite));
  std::string bars =
      "kernel,category,pct_reliable_warps_before,pct_reliable_threads,pct_reliable_warps_after,"
      "paper_pct_reliable_warps_before,paper_pct_reliable_threads,paper_pct_reliable_warps_after\n";
  Fraction sum_before, sum_after;
  int remappable = 0;
  for (const auto& spec : suite) {
    const Fixture fx = generate_fixture(spec);
    const auto linear = LaunchLayout::linear(spec.num_ctas, spec.cta_size);
    const auto before = kernel_stats(classify_warps(fx.flags, linear), fx.flags);
    const auto after = remapped_stats(build_plan(fx.flags, spec.num_ctas, spec.cta_size), fx.flags);
    bars += spec.name + ',' + spec.category + ',' + before.pct_reliable_warps.to_percent() + ',' +
            before.pct_reliable_threads.to_percent() + ',' + after.pct_reliable_warps.to_percent() + ',' +
            spec.target->first + ',' + spec.target->second + ',' + paper_row(spec.name).after + '\n';
    out << spec.label << " (" << spec.name << "): " << before.pct_reliable_warps.to_percent() << "% / "
        << before.pct_reliable_threads.to_percent() << "%, after remap " << after.pct_reliable_warps.to_percent()
        << "%\n";
    if (spec.remappable) {
      sum_before = sum_before + before.pct_reliable_warps;
      sum_after = sum_after + after.pct_reliable_warps;
      ++remappable;
    }
  }
  const Fraction n(remappable);
  bars += "mean_remappable,," + (sum_before / n).to_percent() + ",," + (sum_after / n).to_percent() + ',' +
          kPaperMeanBefore + ",," + kPaperMeanAfter + '\n';
  write_file(cfg.out / "suite_warp_bars.csv", bars);
  out << "remappable mean: " << (sum_before / n).to_percent() << "% -> " << (sum_after / n).to_percent()
      << "% (paper " << kPaperMeanBefore << "% -> " << kPaperMeanAfter << "%)\n";
}

void cmd_pipeline(const RunConfig& cfg, std::ostream& out) {
  cmd_profile(cfg, out);
  cmd_classify(cfg, out);
  cmd_remap(cfg, out);
  if (cfg.mode != Mode::kNone) cmd_protect(cfg, out);
  cmd_report(cfg, out);
}

Fraction parse_fraction_arg(std::string_view text, const char* flag) {
  try {
    return Fraction::parse_decimal(text);
  } catch (const std::exception&) {
    throw ConfigError(std::string(flag) + ": not a number: '" + std::string(text) + "'");
  }
}

void print_error(std::ostream& err, bool as_json, int code, const char* kind, const std::string& message) {
  if (as_json) {
    Json j;
    j["error"] = {{"exit_code", code}, {"kind", kind}, {"message", message}};
    err << j.dump() << "\n";
  } else {
    err << "warpguard: " << kind << " error: " << message << "\n";
  }
}

}  // namespace

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kDetect: return "detect";
    case Mode::kCorrect: return "correct";
    case Mode::kNone: return "none";
  }
  return "?";
}

void RunConfig::validate(bool needs_source) const {
  if (tau < Fraction(0) || tau > Fraction(1)) throw ConfigError("--tau must lie in [0, 1]");
  for (const auto& t : taus) {
    if (t < Fraction(0) || t > Fraction(1)) throw ConfigError("sweep thresholds must lie in [0, 1]");
  }
  if (!(sample > 0.0 && sample <= 1.0)) throw ConfigError("--sample must lie in (0, 1]");
  if (profile_mode != "pruned" && profile_mode != "exhaustive") {
    throw ConfigError("--profile-mode must be pruned or exhaustive");
  }
  if (remap_overhead <= Fraction(-1)) throw ConfigError("--remap-overhead must be greater than -1");
  if (out.empty()) throw ConfigError("--out must name a directory");
  if (needs_source) {
    if (kernel_path.empty() == fixture.empty()) throw ConfigError("give exactly one of --kernel or --fixture");
    if (!fixture.empty() && !inputs_path.empty()) throw ConfigError("--inputs does not apply to fixtures");
    if (declared && fixture.empty()) throw ConfigError("--declared needs --fixture");
  }
}

std::string RunConfig::to_json() const {
  Json j;
  j["kernel"] = kernel_path;
  j["fixture"] = fixture;
  j["inputs"] = inputs_path;
  j["declared_profile"] = declared;
  j["tau"] = tau.to_decimal();
  j["mode"] = std::string(mode_name(mode));
  j["profile_mode"] = profile_mode;
  j["sample"] = sample;
  j["seed"] = seed;
  j["budget"] = budget;
  j["cost_table"] = cost_table;
  j["remap_overhead"] = remap_overhead.to_decimal();
  j["out"] = out.string();
  return j.dump(2) + "\n";
}

FaultSite parse_fault(std::string_view text) {
  FaultSite f;
  std::uint32_t* parts[] = {&f.thread_id, &f.dyn_instr, &f.bit};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(':', pos) : text.size();
    if (end == std::string_view::npos) throw ConfigError("--fault expects thread:dyn_instr:bit");
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, *parts[i]);
    if (ec != std::errc() || ptr != text.data() + end || end == pos) {
      throw ConfigError("--fault expects thread:dyn_instr:bit");
    }
    pos = end + 1;
  }
  if (f.bit >= 32) throw ConfigError("--fault bit must be below 32");
  return f;
}

std::vector<Fraction> parse_tau_list(std::string_view text) {
  std::vector<Fraction> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    if (end > pos) out.push_back(parse_fraction_arg(text.substr(pos, end - pos), "--taus"));
    pos = end + 1;
  }
  if (out.empty()) throw ConfigError("--taus is empty");
  return out;
}

std::vector<Fraction> parse_tau_range(std::string_view text) {
  const std::size_t a = text.find(':');
  const std::size_t b = a == std::string_view::npos ? a : text.find(':', a + 1);
  if (b == std::string_view::npos) throw ConfigError("--tau-range expects start:stop:step");
  const Fraction start = parse_fraction_arg(text.substr(0, a), "--tau-range");
  const Fraction stop = parse_fraction_arg(text.substr(a + 1, b - a - 1), "--tau-range");
  const Fraction step = parse_fraction_arg(text.substr(b + 1), "--tau-range");
  if (step <= Fraction(0)) throw ConfigError("--tau-range step must be positive");
  if (stop < start) throw ConfigError("--tau-range stop is below start");
  std::vector<Fraction> out;
  for (Fraction t = start; t <= stop; t = t + step) out.push_back(t);
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string tau = "0.05", mode = "detect", overhead = "0", fault, taus, tau_range, out_dir = cfg.out.string();
  bool error_json = false;
  for (const auto& a : args) error_json = error_json || a == "--error-json";

  CLI::App app{"Resilience-aware thread remapping and partial warp protection", "warpguard"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--error-json", error_json, "Print errors as one JSON object on stderr");

  auto common = [&](CLI::App* sub, bool source) {
    if (source) {
      sub->add_option("--kernel", cfg.kernel_path, "Kernel IR file");
      sub->add_option("--fixture", cfg.fixture, "Built-in fixture name (see `fixtures`)");
      sub->add_option("--inputs", cfg.inputs_path, "Input buffers as JSON {name: [words]}");
      sub->add_flag("--declared", cfg.declared, "Use the fixture's declared profile instead of measuring");
      sub->add_option("--profile-mode", cfg.profile_mode, "pruned or exhaustive");
      sub->add_option("--sample", cfg.sample, "Fraction of fault sites injected per thread");
      sub->add_option("--seed", cfg.seed, "Sampling seed");
      sub->add_option("--workers", cfg.workers, "Injection threads (0: all cores)");
    }
    sub->add_option("--tau", tau, "SDC threshold in [0, 1]");
    sub->add_option("--mode", mode, "detect, correct or none")->check(CLI::IsMember({"detect", "correct", "none"}));
    sub->add_option("--budget", cfg.budget, "Dynamic instruction budget per thread (0: derived)");
    sub->add_option("--cost-table", cfg.cost_table, "Cost table JSON");
    sub->add_option("--remap-overhead", overhead, "Multiplicative overhead on remapped cycles");
    sub->add_option("--out", out_dir, "Artifact directory");
    sub->add_option("--fault", fault, "Inject one fault thread:dyn_instr:bit (protect)");
    sub->add_option("--taus", taus, "Comma-separated thresholds (sweep)");
    sub->add_option("--tau-range", tau_range, "start:stop:step thresholds (sweep)");
  };
  std::map<std::string, void (*)(const RunConfig&, std::ostream&)> commands = {
      {"profile", cmd_profile}, {"classify", cmd_classify}, {"remap", cmd_remap},       {"protect", cmd_protect},
      {"report", cmd_report},   {"sweep", cmd_sweep},       {"fixtures", cmd_fixtures}, {"pipeline", cmd_pipeline},
  };
  const std::map<std::string, std::string> help = {
      {"profile", "Run the injection campaign and write profile.csv"},
      {"classify", "Classify threads and warps at --tau"},
      {"remap", "Build the resilience-aware remapping plan"},
      {"protect", "Run with partial replication, optionally with one --fault"},
      {"report", "Cost report and plot data"},
      {"sweep", "Reliable-warp percentages over a threshold range"},
      {"fixtures", "Write the fixture manifest and suite bar data"},
      {"pipeline", "profile, classify, remap, protect and report in one go"},
  };
  for (const auto& [name, fn] : commands) {
    common(app.add_subcommand(name, help.at(name)), name == "profile" || name == "pipeline");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    print_error(err, error_json, kConfigError, "config", e.what());
    return kConfigError;
  }

  try {
    cfg.tau = parse_fraction_arg(tau, "--tau");
    cfg.mode = mode == "correct" ? Mode::kCorrect : mode == "none" ? Mode::kNone : Mode::kDetect;
    cfg.remap_overhead = parse_fraction_arg(overhead, "--remap-overhead");
    cfg.out = out_dir;
    if (!fault.empty()) cfg.fault = parse_fault(fault);
    if (!taus.empty() && !tau_range.empty()) throw ConfigError("give only one of --taus and --tau-range");
    if (!taus.empty()) cfg.taus = parse_tau_list(taus);
    if (!tau_range.empty()) cfg.taus = parse_tau_range(tau_range);
    const std::string name = app.get_subcommands().front()->get_name();
    commands.at(name)(cfg, out);
    return kOk;
  } catch (const ConfigError& e) {
    print_error(err, error_json, kConfigError, "config", e.what());
    return kConfigError;
  } catch (const ArtifactError& e) {
    print_error(err, error_json, kArtifactError, "artifact", e.what());
    return kArtifactError;
  } catch (const GoldenRunError& e) {
    print_error(err, error_json, kExecutionError, "execution", e.what());
    return kExecutionError;
  } catch (const ValidationError& e) {
    print_error(err, error_json, kArtifactError, "artifact", e.what());
    return kArtifactError;
  } catch (const std::exception& e) {
    print_error(err, error_json, kExecutionError, "execution", e.what());
    return kExecutionError;
  }
}

}  // namespace warpguard::cli
