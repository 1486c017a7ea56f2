#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "motlab/baselines.hpp"
#include "motlab/experiments.hpp"
#include "motlab/gradcheck.hpp"
#include "motlab/io.hpp"
#include "motlab/random.hpp"
#include "motlab/trainer.hpp"

namespace motlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

// Missing input files are reported with their path and exit code 1.
class MissingPath : public std::runtime_error {
 public:
  explicit MissingPath(const fs::path& p) : std::runtime_error("missing path: " + p.string()) {}
};

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) c.seeds = {*g.seed};
  c.validate();
  return c;
}

// --out, then $MOT_LAB_OUT, then the config's out_dir, then ./mot_lab_out.
fs::path out_dir(const Globals& g, const ExperimentConfig& c) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("MOT_LAB_OUT"); env && *env) return env;
  if (!c.out_dir.empty()) return c.out_dir;
  return "mot_lab_out";
}

// Config as echoed into artifacts; the output location is not part of a run.
std::string config_echo(ExperimentConfig c) {
  c.out_dir.clear();
  return format_config(c);
}

json expert_json(const ExpertParams& e) {
  return {{"w", io::to_json(Eigen::MatrixXd(e.w))}, {"w_kq", io::to_json(e.w_kq)}};
}

void write_with_manifest(const fs::path& root,
                         const std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<fs::path> names;
  for (const auto& [name, contents] : files) {
    io::write_text(root / name, contents);
    names.emplace_back(name);
  }
  write_manifest(root, names);
}

json seeds_json(std::uint64_t seed) {
  return {{"dictionary", derive_seed(seed, stream::kDictionary)},
          {"corpus", derive_seed(seed, stream::kCorpus)},
          {"probe_corpus", derive_seed(seed, stream::kProbeCorpus)},
          {"mot_init", derive_seed(seed, stream::kMotInit)},
          {"multihead_init", derive_seed(seed, stream::kMultiHeadInit)},
          {"moe_ffn_init", derive_seed(seed, stream::kMoeFfnInit)},
          {"routing_noise", derive_seed(seed, stream::kRoutingNoise)},
          {"moe_routing_noise", derive_seed(seed, stream::kMoeRoutingNoise)}};
}

int cmd_gen_data(const Globals& g, std::ostream& out) {
  const ExperimentConfig c = resolve_config(g);
  const fs::path root = out_dir(g, c);
  const std::uint64_t seed = c.seeds.front();
  const SeedData data = make_seed_data(c, seed);
  std::ostringstream summary;
  summary << "K " << data.corpus.size() << "\nN " << c.num_classes << "\nd " << c.dim << "\nL "
          << c.num_tokens << "\nnoise_std " << io::format_double(c.noise_std) << "\nsamples_per_type "
          << c.samples_per_type << "\nseed " << seed << "\nclass_counts";
  for (int count : data.corpus.class_counts()) summary << " " << count;
  summary << "\ncorpus_sha256 " << data.corpus_checksum << "\n";
  write_with_manifest(root, {{"corpus.json", io::to_json(data.corpus).dump()},
                             {"probe_corpus.json", io::to_json(data.probe).dump()},
                             {"summary.txt", summary.str()},
                             {"config.cfg", config_echo(c)}});
  if (!g.quiet) out << summary.str();
  return kExitOk;
}

int cmd_train(const Globals& g, const std::string& arch, std::ostream& out) {
  const ExperimentConfig c = resolve_config(g);
  const fs::path root = out_dir(g, c);
  const std::uint64_t seed = c.seeds.front();
  const SeedData data = make_seed_data(c, seed);
  const StageSchedule schedule = c.schedule();

  std::vector<TrainRecord> records;
  json model;
  if (arch == "mot") {
    Rng rng(derive_seed(seed, stream::kMotInit));
    const ModelState init = init_model(c.dim, c.num_experts, c.sigma0, rng);
    TrainResult r = train(init, data.corpus, schedule, derive_seed(seed, stream::kRoutingNoise));
    records = std::move(r.records);
    model = {{"checkpoint_epochs", {c.t1, c.t2, c.t_total}}, {"checkpoints", json::array()}};
    for (const auto& m : r.checkpoints) model["checkpoints"].push_back(io::to_json(m));
  } else if (arch == "multihead") {
    Rng rng(derive_seed(seed, stream::kMultiHeadInit));
    auto r = train_multihead(init_multihead(c.dim, c.heads(), c.sigma0, rng), data.corpus, schedule);
    records = std::move(r.records);
    model = {{"heads", json::array()}};
    for (const auto& h : r.final_params.heads) model["heads"].push_back(expert_json(h));
  } else {
    Rng rng(derive_seed(seed, stream::kMoeFfnInit));
    auto r = train_moe_ffn(init_moe_ffn(c.dim, c.num_experts, c.sigma0, rng), data.corpus, schedule,
                           derive_seed(seed, stream::kMoeRoutingNoise));
    records = std::move(r.records);
    model = {{"theta", io::to_json(r.final_params.theta)}, {"heads", json::array()}};
    for (const auto& h : r.final_params.heads) model["heads"].push_back(io::to_json(Eigen::MatrixXd(h)));
  }

  const std::string traj = "trajectory_" + arch + ".csv";
  const std::string model_file = "model_" + arch + ".json";
  const json artifact = {{"format_version", io::kFormatVersion},
                         {"arch", arch},
                         {"config", config_echo(c)},
                         {"seed", seed},
                         {"rng_seeds", seeds_json(seed)},
                         {"dictionary", io::to_json(data.corpus.dictionary)},
                         {"corpus", "corpus.json"},
                         {"corpus_checksum", data.corpus_checksum},
                         {"checkpoints", model_file},
                         {"trajectories", {{arch, traj}}}};
  const std::vector<TrainRecord> none;
  write_with_manifest(root,
                      {{traj, io::trajectory_csv(records)},
                       {"corpus.json", io::to_json(data.corpus).dump()},
                       {model_file, model.dump()},
                       {"artifact.json", artifact.dump(2)},
                       {"loss_curves.svg",
                        render_loss_plot(arch == "mot" ? records : none, arch == "multihead" ? records : none,
                                         arch == "moe-ffn" ? records : none, schedule)}});
  if (!g.quiet) {
    out << arch << " seed " << seed << ": " << records.size() << " epochs, final expert_loss "
        << io::format_double(records.back().expert_loss) << "\n";
  }
  return kExitOk;
}

int cmd_gradcheck(const Globals& g, int instances, std::ostream& out) {
  GradCheckOptions opt;
  opt.num_instances = instances;
  const GradCheckResult r = run_gradient_check(g.seed.value_or(0), opt);
  out << (r.passed() ? "PASS" : "FAIL") << " max_rel_err " << io::format_double(r.max_rel_err) << " ("
      << r.entries << " entries, " << r.instances << " instances";
  if (!r.passed()) out << ", " << r.failures << " over tolerance, worst " << r.worst;
  out << ")\n";
  return r.passed() ? kExitOk : kExitFailure;
}

int cmd_compare(const Globals& g, std::ostream& out) {
  ExperimentConfig c = resolve_config(g);
  c.out_dir = out_dir(g, c).string();
  const ComparisonBundle bundle = run_comparison(c);
  bool all_ok = true;
  for (const auto& s : bundle.seeds) {
    all_ok = all_ok && s.ok;
    if (g.quiet) continue;
    if (!s.ok) {
      out << "seed " << s.seed << ": failed: " << s.error << "\n";
      continue;
    }
    out << "seed " << s.seed << ": mot " << io::format_double(s.mot_final()) << ", multihead "
        << io::format_double(s.multihead_final()) << ", moe-ffn " << io::format_double(s.moe_final()) << "\n";
    for (const auto& p : property_checks(s, c)) {
      out << "  " << (p.passed ? "pass " : "FAIL ") << p.name << "\n";
    }
  }
  if (!g.quiet) out << "summary: " << (fs::path(c.out_dir) / "summary.csv").string() << "\n";
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_ablate(const Globals& g, std::vector<int> t1_grid, std::vector<int> t2_grid, std::ostream& out) {
  const ExperimentConfig c = resolve_config(g);
  if (t1_grid.empty()) t1_grid = {c.t1 / 2, c.t1};
  if (t2_grid.empty()) t2_grid = {c.t2};
  const auto points = run_ablation_schedule(c, t1_grid, t2_grid);
  std::string csv = "t1,t2,t_total,final_loss,covers_all_classes,min_mass\n";
  for (const auto& p : points) {
    csv += std::to_string(p.t1) + "," + std::to_string(p.t2) + "," + std::to_string(p.t_total) + "," +
           io::format_double(p.final_loss) + "," + (p.covers_all_classes ? "1" : "0") + "," +
           io::format_double(p.min_mass) + "\n";
  }
  const fs::path root = out_dir(g, c);
  write_with_manifest(root, {{"ablation.csv", csv}, {"config.cfg", config_echo(c)}});
  if (!g.quiet) out << csv;
  return kExitOk;
}

int cmd_report(const Globals& g, const fs::path& from, std::ostream& out) {
  const fs::path artifact_path = from / "artifact.json";
  if (!fs::exists(artifact_path)) throw MissingPath(artifact_path);
  const json artifact = json::parse(io::read_text(artifact_path));
  if (!artifact.contains("format_version") || artifact["format_version"] != io::kFormatVersion) {
    throw std::runtime_error(artifact_path.string() + ": unsupported format_version");
  }

  std::map<std::string, std::vector<TrainRecord>> runs;
  for (const auto& [arch, file] : artifact.at("trajectories").items()) {
    const fs::path p = from / file.get<std::string>();
    if (!fs::exists(p)) throw MissingPath(p);
    runs[arch] = io::read_trajectory_csv(p);
  }
  if (runs.empty()) throw std::runtime_error(artifact_path.string() + ": no trajectories listed");

  // Stage boundaries from the stage column of any trajectory.
  StageSchedule schedule;
  const auto& any = runs.begin()->second;
  schedule.t_total = static_cast<int>(any.size());
  for (const auto& r : any) {
    if (r.stage == Stage::kI) schedule.t1 = r.epoch;
    if (r.stage != Stage::kIII) schedule.t2 = r.epoch;
  }

  std::string csv = "arch,epochs,final_expert_loss,min_expert_loss,stage3_slope,stage3_r_squared\n";
  for (const auto& [arch, recs] : runs) {
    std::vector<int> epochs;
    std::vector<double> losses;
    double best = recs.front().expert_loss;
    for (const auto& r : recs) {
      best = std::min(best, r.expert_loss);
      if (r.stage == Stage::kIII) {
        epochs.push_back(r.epoch);
        losses.push_back(r.expert_loss);
      }
    }
    std::string slope = "nan", r2 = "nan";
    if (epochs.size() >= 2) {
      const RateFit fit = fit_log_linear(epochs, losses);
      slope = io::format_double(fit.slope);
      r2 = io::format_double(fit.r_squared);
    }
    csv += arch + "," + std::to_string(recs.size()) + "," + io::format_double(recs.back().expert_loss) + "," +
           io::format_double(best) + "," + slope + "," + r2 + "\n";
  }

  auto get = [&](const char* a) { return runs.count(a) ? runs[a] : std::vector<TrainRecord>{}; };
  const fs::path root = out_dir(g, g.config_path.empty() ? ExperimentConfig{} : resolve_config(g));
  write_with_manifest(
      root, {{"report.csv", csv},
             {"loss_curves.svg", render_loss_plot(get("mot"), get("multihead"), get("moe-ffn"), schedule)},
             {"margins.svg", render_margin_plot(get("mot"), get("multihead"), get("moe-ffn"), schedule)}});
  if (!g.quiet) out << csv;
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixture-of-transformers training-dynamics lab", "mot_lab"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "run seed (overrides the config's seed list)");
  app.add_option("--out", g.out, "output directory (default: $MOT_LAB_OUT, then ./mot_lab_out)");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  auto* gen = app.add_subcommand("gen-data", "generate the dictionary and corpus");
  std::string arch;
  auto* train_cmd = app.add_subcommand("train", "train one architecture");
  train_cmd->add_option("--arch", arch, "architecture")
      ->required()
      ->check(CLI::IsMember({"mot", "multihead", "moe-ffn"}));
  int instances = 20;
  auto* grad = app.add_subcommand("gradcheck", "check analytic gradients against finite differences");
  grad->add_option("--instances", instances, "number of random instances")->check(CLI::PositiveNumber);
  auto* compare = app.add_subcommand("compare", "train all architectures and evaluate every seed");
  std::vector<int> t1_grid, t2_grid;
  auto* ablate = app.add_subcommand("ablate", "retrain MoT over a grid of stage boundaries");
  ablate->add_option("--t1", t1_grid, "comma-separated T1 values")->delimiter(',');
  ablate->add_option("--t2", t2_grid, "comma-separated T2 values")->delimiter(',');
  std::string from;
  auto* report = app.add_subcommand("report", "render plots and fits from a stored run directory");
  report->add_option("--from", from, "directory holding artifact.json and trajectories")->required();

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 wants reversed argv
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(g, out);
    if (*train_cmd) return cmd_train(g, arch, out);
    if (*grad) return cmd_gradcheck(g, instances, out);
    if (*compare) return cmd_compare(g, out);
    if (*ablate) return cmd_ablate(g, t1_grid, t2_grid, out);
    if (*report) return cmd_report(g, from, out);
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace motlab::cli
