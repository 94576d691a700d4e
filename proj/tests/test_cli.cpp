#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "langspace/embedding.hpp"
#include "langspace/evalharness.hpp"
#include "langspace/metalearner.hpp"

using namespace langspace;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary with stdout/stderr captured into scratch files.
CmdResult run_cli(testutil::TempDir& dir, const std::string& args) {
  static int counter = 0;
  const auto out_path = dir.file("stdout" + std::to_string(counter));
  const auto err_path = dir.file("stderr" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(LANGSPACE_CLI_PATH) + " " + args +
                          " >" + out_path + " 2>" + err_path;
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = testutil::read_file(out_path);
  r.err = testutil::read_file(err_path);
  return r;
}

std::string fixture_args() {
  return "--catalog " + testutil::fixture_languages() + " --inventories " +
         testutil::fixture_inventories();
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
  testutil::TempDir dir;
  auto v = run_cli(dir, "--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("langspace 1.0.0 (file format 1)") != std::string::npos);

  auto h = run_cli(dir, "--help");
  CHECK(h.code == 0);
  CHECK(h.out.find("catalog") != std::string::npos);
  CHECK(h.out.find("eval") != std::string::npos);

  auto lh = run_cli(dir, "less --help");
  CHECK(lh.code == 0);
  CHECK(lh.out.find("fit") != std::string::npos);
  CHECK(lh.out.find("synth") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  testutil::TempDir dir;
  CHECK(run_cli(dir, "").code == 1);                   // a subcommand is required
  CHECK(run_cli(dir, "frobnicate").code == 1);         // unknown subcommand
  CHECK(run_cli(dir, "meta train").code == 1);         // missing required options
  auto bad = run_cli(dir, "catalog validate --catalog /no/such/file.json");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("error") != std::string::npos);
}

TEST_CASE("catalog validate reports size and warnings") {
  testutil::TempDir dir;
  auto r = run_cli(dir, "catalog validate " + fixture_args());
  CHECK(r.code == 0);
  CHECK(r.out.find("50 languages") != std::string::npos);
  CHECK(r.out.find("39 phonemes") != std::string::npos);

  // --quiet silences the summary
  auto q = run_cli(dir, "--quiet catalog validate " + fixture_args());
  CHECK(q.code == 0);
  CHECK(q.out.empty());
}

TEST_CASE("metrics compute writes one csv row per pair") {
  testutil::TempDir dir;
  const auto csv = dir.file("metrics.csv");
  auto r = run_cli(dir, "metrics compute " + fixture_args() + " --out " + csv);
  CHECK(r.code == 0);
  const auto text = testutil::read_file(csv);
  CHECK(text.rfind("id_a,id_b,tree,map,inv_asp,mean\n", 0) == 0);
  std::size_t rows = 0;
  for (char c : text)
    if (c == '\n') ++rows;
  CHECK(rows == 1 + 50 * 49 / 2);
}

TEST_CASE("the global seed reaches subcommands that do not override it") {
  testutil::TempDir dir;
  const auto a = dir.file("a.json");
  const auto b = dir.file("b.json");
  const auto c = dir.file("c.json");
  const std::string tail = " --dim 4 --noise 0.05 --out ";
  CHECK(run_cli(dir, "--seed 9 less synth " + fixture_args() + tail + a).code == 0);
  CHECK(run_cli(dir, "less synth " + fixture_args() + " --seed 9" + tail + b).code == 0);
  CHECK(run_cli(dir, "--seed 10 less synth " + fixture_args() + tail + c).code == 0);
  const auto ta = testutil::read_file(a);
  CHECK(ta == testutil::read_file(b));  // global seed propagated
  CHECK(ta != testutil::read_file(c));  // and actually used
}

TEST_CASE("the full pipeline runs end to end") {
  testutil::TempDir dir;
  const auto table = dir.file("table.json");
  const auto model = dir.file("model.json");
  const auto approx = dir.file("approx.json");
  const auto report_json = dir.file("report.json");
  const auto report_csv = dir.file("report.csv");

  auto synth = run_cli(dir, "less synth " + fixture_args() +
                                " --dim 6 --noise 0.01 --out " + table);
  REQUIRE(synth.code == 0);
  CHECK(load_table(table).entries.size() == 50);

  auto train = run_cli(dir, "meta train " + fixture_args() + " --embeddings " +
                                table + " --epochs 150 --patience 60 --out " +
                                model);
  REQUIRE(train.code == 0);
  CHECK(train.out.find("best val MSE") != std::string::npos);
  (void)load_model(model);  // parseable and valid

  // target inside the catalog: leave-one-out approximation
  auto z = run_cli(dir, "zeroshot approximate " + fixture_args() +
                            " --embeddings " + table + " --model " + model +
                            " --target bar --out " + approx);
  REQUIRE(z.code == 0);
  CHECK(z.out.find("approximated 'bar'") != std::string::npos);
  const auto jtext = testutil::read_file(approx);
  CHECK(jtext.find("\"neighbors\"") != std::string::npos);
  CHECK(jtext.find("\"approximated\"") != std::string::npos);

  auto e = run_cli(dir, "eval reconstruct " + fixture_args() +
                            " --embeddings " + table + " --model " + model +
                            " --policies avg,learned --k 2,4 --out " +
                            report_json);
  REQUIRE(e.code == 0);
  CHECK(e.out.find("auc ") != std::string::npos);
  auto loaded = import_report(report_json);
  CHECK(loaded.policy_names == std::vector<std::string>{"avg", "learned"});
  CHECK(loaded.k_range == std::vector<int>{2, 4});
  CHECK(loaded.mse.at("avg").size() == 2);

  // same run as csv
  auto ec = run_cli(dir, "eval reconstruct " + fixture_args() +
                             " --embeddings " + table + " --model " + model +
                             " --policies avg --k 1..3 --format csv --out " +
                             report_csv);
  REQUIRE(ec.code == 0);
  const auto csv_text = testutil::read_file(report_csv);
  CHECK(csv_text.rfind("#", 0) == 0);
  CHECK(csv_text.find("policy,k,mse\n") != std::string::npos);
  CHECK(csv_text.find("avg,1,") != std::string::npos);
  CHECK(csv_text.find("avg,3,") != std::string::npos);
}

TEST_CASE("domain and file errors map to the documented exit codes") {
  testutil::TempDir dir;
  const auto table = dir.file("table.json");
  REQUIRE(run_cli(dir, "less synth " + fixture_args() +
                           " --dim 4 --out " + table)
              .code == 0);

  SUBCASE("unknown policy") {
    auto r = run_cli(dir, "eval reconstruct " + fixture_args() +
                              " --embeddings " + table +
                              " --policies bogus --out " + dir.file("r.csv"));
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown policy") != std::string::npos);
  }
  SUBCASE("learned policy without a model") {
    auto r = run_cli(dir, "eval reconstruct " + fixture_args() +
                              " --embeddings " + table +
                              " --policies learned --out " + dir.file("r.csv"));
    CHECK(r.code == 1);
  }
  SUBCASE("bad format") {
    auto r = run_cli(dir, "eval reconstruct " + fixture_args() +
                              " --embeddings " + table +
                              " --policies avg --format yaml --out " +
                              dir.file("r.csv"));
    CHECK(r.code == 1);
  }
  SUBCASE("target neither id nor file") {
    const auto model = dir.file("model.json");
    REQUIRE(run_cli(dir, "meta train " + fixture_args() + " --embeddings " +
                             table + " --epochs 40 --out " + model)
                .code == 0);
    auto r = run_cli(dir, "zeroshot approximate " + fixture_args() +
                              " --embeddings " + table + " --model " + model +
                              " --target no-such-lang --out " +
                              dir.file("a.json"));
    CHECK(r.code == 1);
    CHECK(r.err.find("neither a catalog id") != std::string::npos);
  }
  SUBCASE("corrupt embeddings file") {
    const auto broken = dir.file("broken.json");
    testutil::write_file(broken, "{broken");
    auto r = run_cli(dir, "meta train " + fixture_args() + " --embeddings " +
                              broken + " --out " + dir.file("m.json"));
    CHECK(r.code == 1);
  }
}
