#include "motlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "motlab/baselines.hpp"
#include "motlab/io.hpp"
#include "motlab/plots.hpp"
#include "motlab/random.hpp"

namespace motlab {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// configuration

StageSchedule ExperimentConfig::schedule() const {
  StageSchedule s;
  s.t1 = t1;
  s.t2 = t2;
  s.t_total = t_total;
  s.eta = eta;
  s.eta_a = eta_a;
  s.eta_r = eta_r;
  s.noise_scale_by_stage = {noise_scale_stage1, noise_scale_stage2, noise_scale_stage3};
  return s;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  require(num_classes >= 2, "num_classes", "must be at least 2");
  require(dim >= 2 * num_classes, "dim", "must be at least 2 * num_classes");
  require(num_tokens >= 3, "num_tokens", "must be at least 3");
  require(noise_std >= 0.0, "noise_std", "must be nonnegative");
  require(samples_per_type >= 1, "samples_per_type", "must be positive");
  require(num_experts >= 1, "num_experts", "must be positive");
  require(sigma0 >= 0.0, "sigma0", "must be nonnegative");
  require(num_heads >= 0, "num_heads", "must be nonnegative (0 selects num_experts)");
  require(t1 > 0, "t1", "must be positive");
  require(t2 > t1, "t2", "must exceed t1");
  require(t_total > t2, "t_total", "must exceed t2");
  require(eta > 0.0, "eta", "must be positive");
  require(eta_a > 0.0, "eta_a", "must be positive");
  require(eta_r > 0.0, "eta_r", "must be positive");
  require(noise_scale_stage1 >= 0.0, "noise_scale_stage1", "must be nonnegative");
  require(noise_scale_stage2 >= 0.0, "noise_scale_stage2", "must be nonnegative");
  require(noise_scale_stage3 >= 0.0, "noise_scale_stage3", "must be nonnegative");
  require(histogram_trials >= 1, "histogram_trials", "must be positive");
  require(!seeds.empty(), "seeds", "must list at least one seed");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    const double v = io::parse_double(text);
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::invalid_argument&) {
    throw ConfigError(key, "expected a finite real number, got '" + text + "'");
  }
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field int_field(T ExperimentConfig::* member, const std::string& key) {
  return {[member, key](ExperimentConfig& c, const std::string& v) { c.*member = parse_integer<T>(key, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double ExperimentConfig::* member, const std::string& key) {
  return {[member, key](ExperimentConfig& c, const std::string& v) { c.*member = parse_real(key, v); },
          [member](const ExperimentConfig& c) { return io::format_double(c.*member); }};
}

// Keys in canonical output order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    using C = ExperimentConfig;
    std::vector<std::pair<std::string, Field>> t;
    auto add_int = [&](const char* k, int C::* m) { t.emplace_back(k, int_field(m, k)); };
    auto add_real = [&](const char* k, double C::* m) { t.emplace_back(k, real_field(m, k)); };
    add_int("num_classes", &C::num_classes);
    add_int("dim", &C::dim);
    add_int("num_tokens", &C::num_tokens);
    add_real("noise_std", &C::noise_std);
    add_int("samples_per_type", &C::samples_per_type);
    add_int("num_experts", &C::num_experts);
    add_real("sigma0", &C::sigma0);
    add_int("num_heads", &C::num_heads);
    add_int("t1", &C::t1);
    add_int("t2", &C::t2);
    add_int("t_total", &C::t_total);
    add_real("eta", &C::eta);
    add_real("eta_a", &C::eta_a);
    add_real("eta_r", &C::eta_r);
    add_real("noise_scale_stage1", &C::noise_scale_stage1);
    add_real("noise_scale_stage2", &C::noise_scale_stage2);
    add_real("noise_scale_stage3", &C::noise_scale_stage3);
    add_int("histogram_trials", &C::histogram_trials);
    t.emplace_back("seeds", Field{[](C& c, const std::string& v) {
                                    c.seeds.clear();
                                    std::string item;
                                    std::istringstream in(v);
                                    while (std::getline(in, item, ',')) {
                                      c.seeds.push_back(parse_integer<std::uint64_t>("seeds", trim(item)));
                                    }
                                  },
                                  [](const C& c) {
                                    std::string out;
                                    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                                      if (i) out += ',';
                                      out += std::to_string(c.seeds[i]);
                                    }
                                    return out;
                                  }});
    t.emplace_back("out_dir", Field{[](C& c, const std::string& v) { c.out_dir = v; },
                                    [](const C& c) { return c.out_dir; }});
    return t;
  }();
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::map<std::string, const Field*> lookup;
  for (const auto& [k, f] : fields()) lookup[k] = &f;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw ConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    if (value.empty() && key != "out_dir") throw ConfigError(key, "missing value");
    it->second->set(base, value);
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  if (!fs::exists(path)) throw ConfigError("config", "file not found: " + path.string());
  return parse_config(io::read_text(path), std::move(base));
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) {
    const std::string v = f.get(config);
    if (k == "out_dir" && v.empty()) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

namespace {

// Config echo for artifacts: the output location is not part of the run.
std::string config_echo(ExperimentConfig config) {
  config.out_dir.clear();
  return format_config(config);
}

}  // namespace

ExperimentConfig golden_config() {
  ExperimentConfig c;
  c.eta_a = 5.0;
  return c;
}

// ---------------------------------------------------------------------------
// pipelines

SeedData make_seed_data(const ExperimentConfig& config, std::uint64_t seed) {
  const auto dict = build_dictionary(config.dim, config.num_classes, derive_seed(seed, stream::kDictionary));
  SeedData data{build_corpus(dict, config.num_tokens, config.noise_std, config.samples_per_type,
                             derive_seed(seed, stream::kCorpus)),
                build_corpus(dict, config.num_tokens, config.noise_std, config.samples_per_type,
                             derive_seed(seed, stream::kProbeCorpus)),
                {}};
  data.corpus_checksum = io::corpus_checksum(data.corpus);
  return data;
}

namespace {

RateFit stage3_fit(const std::vector<TrainRecord>& records, int t2) {
  std::vector<int> epochs;
  std::vector<double> losses;
  for (const auto& r : records) {
    if (r.epoch > t2) {
      epochs.push_back(r.epoch);
      losses.push_back(r.expert_loss);
    }
  }
  return fit_log_linear(epochs, losses);
}

}  // namespace

SeedOutcome evaluate_seed(const ExperimentConfig& config, std::uint64_t seed, const SeedProgress& progress) {
  config.validate();
  const StageSchedule schedule = config.schedule();
  const SeedData data = make_seed_data(config, seed);
  const auto& dict = data.corpus.dictionary;

  SeedOutcome out;
  out.seed = seed;
  out.corpus_checksum = data.corpus_checksum;

  // Mixture of transformers.
  Rng init_rng(derive_seed(seed, stream::kMotInit));
  out.mot_initial = init_model(config.dim, config.num_experts, config.sigma0, init_rng);
  out.margin_epoch0 = specialization_report(out.mot_initial, dict).mean_margin();
  double max_sum = 0.0;
  TrainResult mot = train(out.mot_initial, data.corpus, schedule, derive_seed(seed, stream::kRoutingNoise),
                          [&](const TrainRecord&, const ModelState& m) {
                            max_sum = std::max(max_sum, m.theta.rowwise().sum().cwiseAbs().maxCoeff());
                          });
  out.max_theta_sum = max_sum;
  out.mot = std::move(mot.records);
  out.mot_checkpoints = mot.checkpoints;

  const ModelState& after_t1 = out.mot_checkpoints[0];
  out.report_t1 = specialization_report(after_t1, dict);
  out.histogram_t1 = routing_histogram(after_t1.theta, data.corpus, config.histogram_trials,
                                       config.noise_scale_stage1, derive_seed(seed, stream::kHistogram));
  out.concentration_t1 = routing_concentration(out.histogram_t1, out.report_t1);
  out.probe_t2 = attention_probe(out.mot_checkpoints[1], dict, data.probe);

  const ModelState& final_model = out.mot_checkpoints[2];
  const auto heads = expert_heads(final_model);
  out.projections_final = signal_projection_probe(heads, dict);
  const auto final_report = specialization_report(final_model, dict);
  const int n = config.num_classes;
  out.projection_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.num_experts; ++i) {
    if (out.mot.back().routed_counts[i] == 0) continue;
    const int best = n + final_report.best_class[i];
    double other = 0.0;
    for (int j = 0; j < 2 * n; ++j) {
      if (j != best) other = std::max(other, std::abs(out.projections_final(i, j)));
    }
    out.projection_ratio = std::min(out.projection_ratio, out.projections_final(i, best) / other);
  }
  out.mot_fit = stage3_fit(out.mot, config.t2);
  if (progress) progress("mot", out);

  // Multi-head transformer without gating.
  Rng mh_rng(derive_seed(seed, stream::kMultiHeadInit));
  auto mh = train_multihead(init_multihead(config.dim, config.heads(), config.sigma0, mh_rng), data.corpus,
                            schedule);
  out.multihead = std::move(mh.records);
  out.multihead_fit = stage3_fit(out.multihead, config.t2);
  if (progress) progress("multihead", out);

  // Attention-absent MoE.
  Rng moe_rng(derive_seed(seed, stream::kMoeFfnInit));
  auto moe = train_moe_ffn(init_moe_ffn(config.dim, config.num_experts, config.sigma0, moe_rng), data.corpus,
                           schedule, derive_seed(seed, stream::kMoeRoutingNoise));
  out.moe_ffn = std::move(moe.records);
  out.moe_best_last_quarter = std::numeric_limits<double>::infinity();
  const int quarter_start = config.t_total - config.t_total / 4;
  for (const auto& r : out.moe_ffn) {
    if (r.epoch > quarter_start)
      out.moe_best_last_quarter = std::min(out.moe_best_last_quarter, r.expert_loss);
  }
  out.ok = true;
  if (progress) progress("moe-ffn", out);
  return out;
}

std::vector<PropertyCheck> property_checks(const SeedOutcome& o, const ExperimentConfig& config) {
  std::vector<PropertyCheck> checks;
  auto add = [&](const char* name, bool ok) { checks.push_back({name, ok}); };
  if (!o.ok) return checks;
  add("conservation", o.max_theta_sum <= 1e-7);
  add("specialization_margin", o.report_t1.mean_margin() >= 3.0 * o.margin_epoch0);
  add("routing_concentration",
      o.concentration_t1.min_mass() >= 0.9 && o.concentration_t1.max_spread() <= 2.0);
  add("class_coverage", o.report_t1.covers_all_classes);
  bool attention = !o.probe_t2.empty();
  const double other_cap = 2.0 / config.num_tokens;
  for (const auto& row : o.probe_t2) {
    attention = attention && row.p_vv >= 0.5 && row.p_vc <= other_cap && row.p_cv <= other_cap &&
                row.p_vxi <= other_cap;
  }
  add("attention_concentration", attention);
  add("geometric_convergence", o.mot_fit.r_squared >= 0.95 && o.mot_final() <= 0.05);
  add("projection_structure", o.projection_ratio >= 10.0);
  add("rate_separation", std::abs(o.mot_fit.slope) >= 3.0 * std::abs(o.multihead_fit.slope));
  add("loss_ordering", o.mot_final() < o.multihead_final() && o.multihead_final() < o.moe_final());
  add("moe_floor", o.moe_best_last_quarter >= 2.0 * o.mot_final());
  return checks;
}

// ---------------------------------------------------------------------------
// output

namespace {

struct Writer {
  fs::path root;
  std::vector<fs::path>* files;

  void text(const fs::path& rel, std::string_view contents) {
    io::write_text(root / rel, contents);
    if (std::find(files->begin(), files->end(), rel) == files->end()) files->push_back(rel);
  }
};

std::string histogram_csv(const Eigen::MatrixXd& h) {
  std::string out = "class";
  for (Eigen::Index i = 0; i < h.cols(); ++i) out += ",expert_" + std::to_string(i + 1);
  out += '\n';
  for (Eigen::Index n = 0; n < h.rows(); ++n) {
    out += std::to_string(n + 1);
    for (Eigen::Index i = 0; i < h.cols(); ++i) out += "," + io::format_double(h(n, i));
    out += '\n';
  }
  return out;
}

std::string specialization_csv(const SpecializationReport& r) {
  std::string out = "expert,best_class,margin\n";
  for (std::size_t i = 0; i < r.best_class.size(); ++i) {
    out += std::to_string(i + 1) + "," + std::to_string(r.best_class[i] + 1) + "," +
           io::format_double(r.margins[i]) + "\n";
  }
  return out;
}

std::string probe_csv(const std::vector<AttentionProbeRow>& rows) {
  std::string out = "expert,class,num_samples,p_vv,p_vc,p_cv,p_vxi\n";
  for (const auto& r : rows) {
    out += std::to_string(r.expert + 1) + "," + std::to_string(r.class_index + 1) + "," +
           std::to_string(r.num_samples) + "," + io::format_double(r.p_vv) + "," + io::format_double(r.p_vc) +
           "," + io::format_double(r.p_cv) + "," + io::format_double(r.p_vxi) + "\n";
  }
  return out;
}

std::string projections_csv(const Eigen::MatrixXd& p, int num_classes) {
  std::string out = "expert";
  for (int n = 1; n <= num_classes; ++n) out += ",c" + std::to_string(n);
  for (int n = 1; n <= num_classes; ++n) out += ",v" + std::to_string(n);
  out += '\n';
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    out += std::to_string(i + 1);
    for (Eigen::Index j = 0; j < p.cols(); ++j) out += "," + io::format_double(p(i, j));
    out += '\n';
  }
  return out;
}

std::string fit_row(const char* arch, const RateFit& f) {
  return std::string(arch) + "," + std::to_string(f.first_epoch) + "," + std::to_string(f.last_epoch) + "," +
         io::format_double(f.slope) + "," + io::format_double(f.intercept) + "," +
         io::format_double(f.r_squared) + "\n";
}

plots::Series loss_series(const std::string& name, const std::vector<TrainRecord>& records) {
  plots::Series s{name, {}, {}};
  for (const auto& r : records) {
    s.x.push_back(r.epoch);
    s.y.push_back(r.expert_loss);
  }
  return s;
}

plots::Series margin_series(const std::string& name, const std::vector<TrainRecord>& records) {
  plots::Series s{name, {}, {}};
  for (const auto& r : records) {
    s.x.push_back(r.epoch);
    s.y.push_back(r.mean_margin);
  }
  return s;
}

}  // namespace

std::string render_loss_plot(const std::vector<TrainRecord>& mot, const std::vector<TrainRecord>& mh,
                             const std::vector<TrainRecord>& moe, const StageSchedule& schedule) {
  plots::LineChart chart{"Training loss", "epoch", "expert loss", true, {}, {}};
  if (!mot.empty()) chart.series.push_back(loss_series("MoT", mot));
  if (!mh.empty()) chart.series.push_back(loss_series("multi-head", mh));
  if (!moe.empty()) chart.series.push_back(loss_series("MoE-FFN", moe));
  chart.vertical_markers = {static_cast<double>(schedule.t1), static_cast<double>(schedule.t2)};
  return plots::render_line_chart(chart);
}

std::string render_margin_plot(const std::vector<TrainRecord>& mot, const std::vector<TrainRecord>& mh,
                               const std::vector<TrainRecord>& moe, const StageSchedule& schedule) {
  plots::LineChart chart{"Mean specialization margin", "epoch", "margin", false, {}, {}};
  if (!mot.empty()) chart.series.push_back(margin_series("MoT", mot));
  if (!mh.empty()) chart.series.push_back(margin_series("multi-head", mh));
  if (!moe.empty()) chart.series.push_back(margin_series("MoE-FFN", moe));
  chart.vertical_markers = {static_cast<double>(schedule.t1), static_cast<double>(schedule.t2)};
  return plots::render_line_chart(chart);
}

namespace {

void write_seed_outputs(Writer& w, const ExperimentConfig& config, const SeedData& data, const SeedOutcome& o,
                        const std::string& arch) {
  const fs::path dir = "seed_" + std::to_string(o.seed);
  const StageSchedule schedule = config.schedule();
  if (arch == "mot") {
    w.text(dir / "corpus.json", io::to_json(data.corpus).dump());
    w.text(dir / "trajectory_mot.csv", io::trajectory_csv(o.mot));
    w.text(dir / "routing_histogram.csv", histogram_csv(o.histogram_t1));
    w.text(dir / "specialization.csv", specialization_csv(o.report_t1));
    w.text(dir / "attention_probe.csv", probe_csv(o.probe_t2));
    w.text(dir / "projections.csv", projections_csv(o.projections_final, config.num_classes));
    w.text(dir / "routing_heatmap.svg",
           plots::render_heatmap(o.histogram_t1, "Routing frequency after Stage I", "class", "expert"));
    nlohmann::json ckpts = nlohmann::json::array();
    for (const auto& m : o.mot_checkpoints) ckpts.push_back(io::to_json(m));
    w.text(dir / "checkpoints_mot.json", ckpts.dump());
  } else if (arch == "multihead") {
    w.text(dir / "trajectory_multihead.csv", io::trajectory_csv(o.multihead));
  } else if (arch == "moe-ffn") {
    w.text(dir / "trajectory_moe-ffn.csv", io::trajectory_csv(o.moe_ffn));
    w.text(dir / "rate_fit.csv", "arch,first_epoch,last_epoch,slope,intercept,r_squared\n" +
                                     fit_row("mot", o.mot_fit) + fit_row("multihead", o.multihead_fit));
  }
  w.text(dir / "loss_curves.svg", render_loss_plot(o.mot, o.multihead, o.moe_ffn, schedule));
  w.text(dir / "margins.svg", render_margin_plot(o.mot, o.multihead, o.moe_ffn, schedule));

  nlohmann::json artifact = {
      {"format_version", io::kFormatVersion},
      {"config", config_echo(config)},
      {"seed", o.seed},
      {"rng_seeds",
       {{"dictionary", derive_seed(o.seed, stream::kDictionary)},
        {"corpus", derive_seed(o.seed, stream::kCorpus)},
        {"probe_corpus", derive_seed(o.seed, stream::kProbeCorpus)},
        {"mot_init", derive_seed(o.seed, stream::kMotInit)},
        {"multihead_init", derive_seed(o.seed, stream::kMultiHeadInit)},
        {"moe_ffn_init", derive_seed(o.seed, stream::kMoeFfnInit)},
        {"routing_noise", derive_seed(o.seed, stream::kRoutingNoise)},
        {"moe_routing_noise", derive_seed(o.seed, stream::kMoeRoutingNoise)},
        {"histogram", derive_seed(o.seed, stream::kHistogram)}}},
      {"dictionary", io::to_json(data.corpus.dictionary)},
      {"corpus", "corpus.json"},
      {"corpus_checksum", o.corpus_checksum},
      {"checkpoints", "checkpoints_mot.json"},
      {"checkpoint_epochs", {config.t1, config.t2, config.t_total}},
  };
  nlohmann::json trajectories = nlohmann::json::object();
  if (!o.mot.empty()) trajectories["mot"] = "trajectory_mot.csv";
  if (!o.multihead.empty()) trajectories["multihead"] = "trajectory_multihead.csv";
  if (!o.moe_ffn.empty()) trajectories["moe-ffn"] = "trajectory_moe-ffn.csv";
  artifact["trajectories"] = trajectories;
  w.text(dir / "artifact.json", artifact.dump(2));
}

}  // namespace

void write_manifest(const fs::path& root, const std::vector<fs::path>& files) {
  std::vector<fs::path> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (const auto& f : sorted) {
    out += f.generic_string() + "\t" + io::file_sha256(root / f) + "\n";
  }
  io::write_text(root / "manifest.tsv", out);
}

ComparisonBundle run_comparison(const ExperimentConfig& config) {
  config.validate();
  ComparisonBundle bundle;
  const bool write = !config.out_dir.empty();
  Writer w{config.out_dir, &bundle.files};

  for (std::uint64_t seed : config.seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    try {
      const SeedData data = make_seed_data(config, seed);
      outcome = evaluate_seed(config, seed, [&](const std::string& arch, const SeedOutcome& partial) {
        if (write) write_seed_outputs(w, config, data, partial, arch);
      });
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
    bundle.seeds.push_back(std::move(outcome));
  }

  if (write) {
    // Summary: one row per seed plus the pass rate of every property.
    std::vector<std::string> names;
    for (const auto& o : bundle.seeds) {
      if (o.ok) {
        for (const auto& c : property_checks(o, config)) names.push_back(c.name);
        break;
      }
    }
    std::string csv = "seed,status,corpus_checksum,mot_final,multihead_final,moe_ffn_final";
    for (const auto& n : names) csv += "," + n;
    csv += '\n';
    std::vector<int> passes(names.size(), 0);
    int ok_count = 0;
    for (const auto& o : bundle.seeds) {
      csv += std::to_string(o.seed) + "," + (o.ok ? "ok" : "failed") + "," + o.corpus_checksum;
      if (o.ok) {
        ++ok_count;
        csv += "," + io::format_double(o.mot_final()) + "," + io::format_double(o.multihead_final()) + "," +
               io::format_double(o.moe_final());
        const auto checks = property_checks(o, config);
        for (std::size_t i = 0; i < checks.size(); ++i) {
          csv += checks[i].passed ? ",1" : ",0";
          passes[i] += checks[i].passed;
        }
      } else {
        csv += ",nan,nan,nan";
        for (std::size_t i = 0; i < names.size(); ++i) csv += ",";
      }
      csv += '\n';
    }
    csv += "pass_rate," + std::to_string(ok_count) + "/" + std::to_string(bundle.seeds.size()) + ",,,,";
    for (int p : passes) {
      csv += "," + io::format_double(ok_count ? static_cast<double>(p) / ok_count : 0.0);
    }
    csv += '\n';
    w.text("summary.csv", csv);
    std::string status;
    for (const auto& o : bundle.seeds) {
      status += std::to_string(o.seed) + "\t" + (o.ok ? "ok" : "failed: " + o.error) + "\n";
    }
    w.text("status.tsv", status);
    w.text("config.cfg", config_echo(config));
    write_manifest(config.out_dir, bundle.files);
  }
  return bundle;
}

std::vector<AblationPoint> run_ablation_schedule(const ExperimentConfig& config,
                                                 const std::vector<int>& t1_grid,
                                                 const std::vector<int>& t2_grid) {
  config.validate();
  if (t1_grid.empty() || t2_grid.empty()) {
    throw std::invalid_argument("run_ablation_schedule: grids must be nonempty");
  }
  const int stage3 = config.t_total - config.t2;
  for (int t1 : t1_grid) {
    for (int t2 : t2_grid) {
      if (!(t1 > 0 && t2 > t1)) {
        throw std::invalid_argument("run_ablation_schedule: invalid pair (" + std::to_string(t1) + ", " +
                                    std::to_string(t2) + ")");
      }
    }
  }
  const std::uint64_t seed = config.seeds.front();
  const SeedData data = make_seed_data(config, seed);
  Rng init_rng(derive_seed(seed, stream::kMotInit));
  const ModelState initial = init_model(config.dim, config.num_experts, config.sigma0, init_rng);

  std::vector<AblationPoint> grid;
  for (int t1 : t1_grid) {
    for (int t2 : t2_grid) {
      StageSchedule s = config.schedule();
      s.t1 = t1;
      s.t2 = t2;
      s.t_total = t2 + stage3;
      const TrainResult r = train(initial, data.corpus, s, derive_seed(seed, stream::kRoutingNoise));
      const auto report = specialization_report(r.checkpoints[0], data.corpus.dictionary);
      const auto hist = routing_histogram(r.checkpoints[0].theta, data.corpus, config.histogram_trials,
                                          config.noise_scale_stage1, derive_seed(seed, stream::kHistogram));
      grid.push_back({t1, t2, s.t_total, r.records.back().expert_loss, report.covers_all_classes,
                      routing_concentration(hist, report).min_mass()});
    }
  }
  return grid;
}

}  // namespace motlab
