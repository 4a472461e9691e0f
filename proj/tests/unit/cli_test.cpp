#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using maskgen::cli::run_command;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh directory with a small synthetic corpus and a tiny model config.
struct Workspace {
  fs::path dir;
  std::string config;

  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / "maskgen_cli_test" / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    config = (dir / "toy.cfg").string();
    std::ofstream(config) << "num_layers=1\nnum_heads=2\nmodel_dim=8\nffn_dim=16\nnum_regions=4\n"
                             "feature_dim=6\nmax_positions=48\nmax_steps=3\nbatch_size=4\ndropout=0\n";
  }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

void synth(const Workspace& w) {
  const auto r = run({"synth", "--out", w / "data", "--config", w.config, "--seed", "5", "--n-train", "12",
                      "--n-val", "2", "--n-test", "6"});
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("scripted pipeline produces every artifact") {
  const Workspace w("pipeline");
  synth(w);
  const std::string train = w / "data/train.jsonl", test = w / "data/test.jsonl";
  auto ok = [](const Result& r) {
    CAPTURE(r.err);
    CHECK(r.code == 0);
  };
  ok(run({"train", "--stage", "1", "--data", train, "--config", w.config, "--out", w / "s1.ckpt"}));
  ok(run({"train", "--stage", "2", "--data", train, "--config", w.config, "--init-stage1", w / "s1.ckpt", "--out", w / "s2.ckpt"}));
  ok(run({"train", "--stage", "3", "--data", train, "--config", w.config, "--init-stage1", w / "s1.ckpt",
          "--init-stage2", w / "s2.ckpt", "--out", w / "s3.ckpt", "--log", w / "s3.log"}));
  ok(run({"generate", "--checkpoint", w / "s3.ckpt", "--data", test, "--mode", "both", "--out", w / "q.jsonl"}));
  const Result ev = run({"eval", "--generated", w / "q.jsonl", "--data", test, "--out", w / "report.txt"});
  ok(ev);
  const Result pr = run({"probe", "--checkpoint", "1=" + (w / "s1.ckpt"), "--checkpoint", "3=" + (w / "s3.ckpt"),
                         "--random", "--data", test, "--out", w / "xsim.csv"});
  ok(pr);

  for (const char* f : {"s1.ckpt", "s1.ckpt.log", "s2.ckpt", "s3.ckpt", "s3.log", "q.jsonl", "report.txt", "xsim.csv"})
    CHECK(fs::exists(w.dir / f));
  CHECK(ev.out.find("cider=") != std::string::npos);
  CHECK(slurp(w.dir / "report.txt").rfind("# command=maskgen eval", 0) == 0);
  CHECK(slurp(w.dir / "q.jsonl").find("\"meta\"") != std::string::npos);
  CHECK(slurp(w.dir / "s3.log").find("step=3 stage=3 ") != std::string::npos);
  const std::string table = slurp(w.dir / "xsim.csv");
  CHECK(table.find("layer_index,model_label,xsim\n1,1,") != std::string::npos);
  CHECK(table.find("\n1,random,") != std::string::npos);
  CHECK(pr.out.find("# seed=1") != std::string::npos);

  std::size_t lines = 0;
  std::ifstream q(w / "q.jsonl");
  for (std::string line; std::getline(q, line);) ++lines;
  CHECK(lines == 7);
}

TEST_CASE("identical invocations give identical artifacts") {
  const Workspace w("determinism");
  synth(w);
  const std::string train = w / "data/train.jsonl", test = w / "data/test.jsonl";
  const std::vector<std::string> files = {"data/train.jsonl", "data/train.vfea", "data/test.jsonl", "s.ckpt", "s.ckpt.log", "q.jsonl"};
  auto pipeline = [&] {
    synth(w);
    REQUIRE(run({"train", "--stage", "3scratch", "--data", train, "--config", w.config, "--seed", "2", "--out", w / "s.ckpt"}).code == 0);
    REQUIRE(run({"generate", "--checkpoint", w / "s.ckpt", "--data", test, "--mode", "both", "--out", w / "q.jsonl"}).code == 0);
    std::vector<std::string> bytes;
    for (const auto& f : files) bytes.push_back(slurp(w.dir / f));
    return bytes;
  };
  const auto first = pipeline();
  const auto second = pipeline();
  for (std::size_t i = 0; i < files.size(); ++i) {
    CAPTURE(files[i]);
    CHECK(!first[i].empty());
    CHECK(first[i] == second[i]);
  }
}

TEST_CASE("exit codes") {
  const Workspace w("errors");
  synth(w);
  const std::string train = w / "data/train.jsonl";

  Result r = run({"train", "--stage", "3", "--data", train, "--config", w.config, "--out", w / "x.ckpt"});
  CHECK(r.code == 4);
  CHECK(r.err.rfind("error: kind=prerequisite message=", 0) == 0);
  CHECK(r.err.find("stage 1") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  CHECK(run({"train", "--stage", "1", "--data", train, "--bogus", "--out", w / "x.ckpt"}).code == 2);
  CHECK(run({"train", "--stage", "7", "--data", train, "--out", w / "x.ckpt"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"train", "--stage", "1", "--data", w / "absent.jsonl", "--out", w / "x.ckpt"}).code == 3);
  CHECK(run({"train", "--stage", "1", "--data", train, "--out", train}).code == 2);

  // features stored with D_f = 6, model configured for 32
  r = run({"train", "--stage", "3scratch", "--data", train, "--out", w / "x.ckpt"});
  CHECK(r.code == 3);

  std::ofstream(w / "nan.cfg") << "num_layers=1\nnum_heads=2\nmodel_dim=8\nffn_dim=16\nnum_regions=4\n"
                                  "feature_dim=6\nmax_positions=48\nmax_steps=3\nbatch_size=4\nbase_lr=1e308\nwarmup_fraction=0\n";
  r = run({"train", "--stage", "1", "--data", train, "--config", w / "nan.cfg", "--out", w / "nan.ckpt"});
  CHECK(r.code == 5);

  REQUIRE(run({"train", "--stage", "1", "--data", train, "--config", w.config, "--out", w / "s1.ckpt"}).code == 0);
  std::ofstream(w / "wide.cfg") << "num_layers=1\nnum_heads=2\nmodel_dim=16\nffn_dim=16\nnum_regions=4\nfeature_dim=6\nmax_positions=48\n";
  r = run({"train", "--stage", "2", "--data", train, "--config", w / "wide.cfg", "--init-stage1", w / "s1.ckpt", "--out", w / "s2.ckpt"});
  CHECK(r.code == 3);
}
