#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "toy_fixture.hpp"
#include "xvg/cli.hpp"
#include "xvg/config.hpp"
#include "xvg/retrieval.hpp"

using namespace xvg;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("xvg_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Writes the tiny fixture config with every path under `dir`.
fs::path write_config(const fs::path& dir) {
  auto c = fixture::tiny_config();
  c.name = "cli";
  c.dataset_root = (dir / "data").string();
  c.caption_store = (dir / "captions.jsonl").string();
  c.output_root = (dir / "runs").string();
  const auto path = dir / "tiny.cfg";
  std::ofstream(path) << config::to_text(c);
  return path;
}

}  // namespace

TEST_CASE("argument errors produce one error line and exit code 2") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"frobnicate"},
           {"train", "--set", "train.nonsense=1"},
           {"train", "--set", "no-equals"},
           {"generate-captions", "--dataset", "toy", "--cot-steps", "3"}}) {
    CAPTURE(args.size());
    const auto r = run(args);
    CHECK(r.code == cli::argument);
    CHECK(r.err.rfind("error: argument: ", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  CHECK(run({"--help"}).code == cli::ok);
}

TEST_CASE("prepare is idempotent and refuses to clobber different contents") {
  const auto dir = fresh("prepare");
  const auto root = (dir / "data").string();
  const std::vector<std::string> base = {"prepare", "--toy", "--root", root, "--locations", "3", "--drones", "2",
                                         "--test-drones", "1", "--image-size", "16", "--seed", "5"};
  const auto first = run(base);
  REQUIRE(first.code == cli::ok);
  CHECK(first.out.rfind("created", 0) == 0);
  const auto fingerprint = slurp(fs::path(root) / "FINGERPRINT");
  const auto again = run(base);
  CHECK(again.code == cli::ok);
  CHECK(again.out.rfind("unchanged", 0) == 0);

  auto other = base;
  other.back() = "6";
  const auto refused = run(other);
  CHECK(refused.code == cli::structural);
  CHECK(refused.err.rfind("error: structural: ", 0) == 0);
  CHECK(slurp(fs::path(root) / "FINGERPRINT") == fingerprint);
  other.push_back("--force");
  CHECK(run(other).code == cli::ok);

  const auto scan = run({"prepare", "--root", root});
  CHECK(scan.code == cli::ok);
  CHECK(scan.out.find("3 locations") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report rejects empty inputs and renders one or two reports") {
  const auto dir = fresh("report");
  fs::create_directories(dir / "empty");
  const auto empty = run({"report", (dir / "empty").string()});
  CHECK(empty.code == cli::structural);
  CHECK(run({"report", (dir / "missing.json").string()}).code != cli::ok);

  eval::RetrievalReport a;
  a.direction = "d2s";
  a.rows = {{"Normal", 50, 75, 100, 60}, {"Fog", 25, 50, 75, 40}};
  a.recompute_mean();
  auto b = a;
  b.rows[1].ap = 45;
  b.recompute_mean();
  std::ofstream(dir / "a.json") << a.to_json();
  std::ofstream(dir / "b.json") << b.to_json();
  const auto one = run({"report", (dir / "a.json").string()});
  CHECK(one.code == cli::ok);
  CHECK(one.out.find("Mean") != std::string::npos);
  const auto two = run({"report", (dir / "a.json").string(), (dir / "b.json").string()});
  CHECK(two.code == cli::ok);
  CHECK(two.out.find("5.00") != std::string::npos);
  CHECK(run({"report", (dir / "a.json").string(), (dir / "b.json").string(), (dir / "a.json").string()}).code ==
        cli::argument);
  fs::remove_all(dir);
}

TEST_CASE("weather synthesis writes one image per input and rejects unknown conditions") {
  const auto dir = fresh("weather");
  const auto root = (dir / "data").string();
  REQUIRE(run({"prepare", "--toy", "--root", root, "--locations", "2", "--drones", "1", "--test-drones", "1",
               "--image-size", "16"})
              .code == cli::ok);
  const auto in = (fs::path(root) / "test" / "drone").string();
  const auto r = run({"synthesize-weather", "--in", in, "--out", (dir / "fog").string(), "--condition", "Fog+Rain"});
  CHECK(r.code == cli::ok);
  CHECK(r.out.rfind("wrote 2 images", 0) == 0);
  CHECK(run({"synthesize-weather", "--in", in, "--out", (dir / "x").string(), "--condition", "Hail"}).code ==
        cli::argument);
  fs::remove_all(dir);
}

TEST_CASE("tiny end-to-end pipeline through the command line") {
  const auto dir = fresh("pipeline");
  const auto cfg = write_config(dir).string();
  REQUIRE(run({"prepare", "--toy", "--config", cfg}).code == cli::ok);
  REQUIRE(run({"generate-captions", "--config", cfg, "--dataset", "toy"}).code == cli::ok);
  const auto trained = run({"train", "--config", cfg, "--set", "train.max_steps=4", "--set", "train.epochs=2"});
  REQUIRE(trained.code == cli::ok);
  const auto ckpt = dir / "runs" / "cli" / "ckpt_epoch_2.bin";
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(dir / "runs" / "cli" / "train.log"));
  const auto evaluated = run({"evaluate", "--ckpt", ckpt.string(), "--direction", "s2d"});
  REQUIRE(evaluated.code == cli::ok);
  const auto report = dir / "runs" / "cli" / "report_test_s2d.json";
  REQUIRE(fs::exists(report));
  CHECK(eval::RetrievalReport::from_json(slurp(report)).rows.size() == 10);
  CHECK(run({"report", report.string()}).code == cli::ok);

  const auto mismatch = run({"train", "--config", cfg, "--set", "caption.cot_steps=4", "--out", (dir / "x").string()});
  CHECK(mismatch.code == cli::argument);
  fs::remove_all(dir);
}
