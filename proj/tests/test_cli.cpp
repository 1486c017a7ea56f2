#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "motlab/io.hpp"

namespace fs = std::filesystem;
using motlab::cli::cli_main;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mot_lab");
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

// Everything below `root`, with contents, for before/after comparisons.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    files[e.path().string()] = e.is_regular_file() ? motlab::io::read_text(e.path()) : "<dir>";
  }
  return files;
}

struct Sandbox {
  fs::path root;
  fs::path config;
  explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / ("motlab_test_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    config = root / "tiny.cfg";
    motlab::io::write_text(config,
                           "num_classes = 2\ndim = 8\nnum_tokens = 4\nsamples_per_type = 1\n"
                           "num_experts = 3\nt1 = 4\nt2 = 8\nt_total = 12\neta_a = 5\n"
                           "histogram_trials = 2\n");
  }
  ~Sandbox() { fs::remove_all(root); }
};

std::size_t line_count(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gradcheck", "--bogus"}).code == 2);
  CHECK(run({"train"}).code == 2);
  const Run r = run({"train", "--arch", "lstm"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("invalid config exits 1 naming the key") {
  Sandbox box("badcfg");
  motlab::io::write_text(box.root / "bad.cfg", "dim = 8\nlearning_rate = 3\n");
  const Run r =
      run({"gen-data", "--config", (box.root / "bad.cfg").string(), "--out", (box.root / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("learning_rate") != std::string::npos);
  CHECK(line_count(r.err) == 1);
  const Run missing = run({"gen-data", "--config", (box.root / "none.cfg").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("none.cfg") != std::string::npos);
}

TEST_CASE("gradcheck reports PASS") {
  const Run r = run({"gradcheck", "--seed", "0"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("PASS max_rel_err ", 0) == 0);
  const double err = motlab::io::parse_double(r.out.substr(17, r.out.find(' ', 17) - 17));
  CHECK(err <= 1e-5);
}

TEST_CASE("train writes exactly T rows plus the header") {
  Sandbox box("train");
  for (const char* arch : {"mot", "multihead", "moe-ffn"}) {
    const fs::path out = box.root / arch;
    const Run r =
        run({"train", "--arch", arch, "--config", box.config.string(), "--out", out.string(), "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const std::string csv = motlab::io::read_text(out / ("trajectory_" + std::string(arch) + ".csv"));
    CHECK(line_count(csv) == 13);
    CHECK(csv.rfind(std::string(motlab::io::kTrajectoryHeader) + "\n", 0) == 0);
    CHECK(fs::exists(out / "artifact.json"));
    CHECK(fs::exists(out / "manifest.tsv"));
  }
}

TEST_CASE("report renders a stored run and names missing files") {
  Sandbox box("report");
  const fs::path run_dir = box.root / "run";
  REQUIRE(
      run({"train", "--arch", "mot", "--config", box.config.string(), "--out", run_dir.string(), "--quiet"})
          .code == 0);
  const Run ok = run({"report", "--from", run_dir.string(), "--out", (box.root / "rep").string()});
  CHECK(ok.code == 0);
  CHECK(fs::exists(box.root / "rep" / "report.csv"));
  CHECK(fs::exists(box.root / "rep" / "loss_curves.svg"));

  fs::remove(run_dir / "trajectory_mot.csv");
  const Run bad = run({"report", "--from", run_dir.string(), "--out", (box.root / "rep2").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find((run_dir / "trajectory_mot.csv").string()) != std::string::npos);

  const Run none =
      run({"report", "--from", (box.root / "nowhere").string(), "--out", (box.root / "rep3").string()});
  CHECK(none.code == 1);
  CHECK(none.err.find((box.root / "nowhere" / "artifact.json").string()) != std::string::npos);
}

TEST_CASE("no subcommand writes outside --out") {
  Sandbox box("confine");
  const fs::path out = box.root / "out";
  const auto cwd_before = snapshot(fs::current_path());
  const std::vector<std::vector<std::string>> commands = {
      {"gen-data"},
      {"train", "--arch", "mot"},
      {"train", "--arch", "multihead"},
      {"train", "--arch", "moe-ffn"},
      {"gradcheck", "--instances", "2"},
      {"compare", "--seed", "3"},
      {"ablate", "--t1", "2,4", "--t2", "8"},
      {"report", "--from", out.string()},
  };
  for (auto cmd : commands) {
    auto before = snapshot(box.root);
    cmd.insert(cmd.end(), {"--config", box.config.string(), "--out", out.string(), "--quiet"});
    const Run r = run(cmd);
    CHECK_MESSAGE(r.code == 0, (cmd[0] + ": " + r.err));
    for (const auto& [path, contents] : snapshot(box.root)) {
      if (path.rfind(out.string(), 0) == 0) continue;
      CHECK_MESSAGE(before.count(path), path);
      CHECK_MESSAGE(before[path] == contents, path);
    }
  }
  CHECK(snapshot(fs::current_path()) == cwd_before);
}

TEST_CASE("MOT_LAB_OUT is the default output directory") {
  Sandbox box("env");
  const fs::path out = box.root / "from_env";
  ::setenv("MOT_LAB_OUT", out.string().c_str(), 1);
  const Run r = run({"gen-data", "--config", box.config.string(), "--quiet"});
  ::unsetenv("MOT_LAB_OUT");
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "corpus.json"));
  CHECK(fs::exists(out / "summary.txt"));
}

TEST_CASE("compare runs are byte-identical") {
  Sandbox box("det");
  for (const char* d : {"a", "b"}) {
    REQUIRE(
        run({"compare", "--config", box.config.string(), "--out", (box.root / d).string(), "--quiet"}).code ==
        0);
  }
  CHECK(motlab::io::read_text(box.root / "a" / "manifest.tsv") ==
        motlab::io::read_text(box.root / "b" / "manifest.tsv"));
}
