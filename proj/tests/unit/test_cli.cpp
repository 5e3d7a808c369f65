#include <doctest.h>

#include <sstream>

#include "../support.hpp"
#include "intentbench/cli.hpp"

using namespace intentbench;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

int error_lines(const std::string& err) {
  int n = 0;
  std::istringstream in(err);
  for (std::string line; std::getline(in, line);) n += line.rfind("error:", 0) == 0;
  return n;
}

struct Fixture {
  testing::TempDir tmp{"cli"};
  testing::SyntheticDataset data = testing::make_dataset(4, 10, 5, 6, 77);

  Fixture() {
    std::ofstream conv(tmp / "conversations.jsonl");
    write_conversations(data.corpus, conv);
    std::ofstream test(tmp / "test.jsonl");
    write_test_set(data.test, test);
    std::ofstream train(tmp / "train.jsonl");
    write_training_set(data.gold_training, train);
    save_embeddings(data.turn_store, tmp / "turns.ieb", EmbeddingFormat::binary);
    save_embeddings(data.train_store, tmp / "train_emb.ieb", EmbeddingFormat::binary);
    save_embeddings(data.test_store, tmp / "test_emb.jsonl", EmbeddingFormat::jsonl);
  }
};

}  // namespace

TEST_CASE("cluster writes a parseable assignment and is byte-identical on rerun") {
  Fixture f;
  const std::vector<std::string> base{"cluster", "--conversations", f.tmp / "conversations.jsonl", "--embeddings",
                                      f.tmp / "turns.ieb", "--k-min", "2", "--k-max", "8", "--trials", "6"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", f.tmp / "a"});
  b.insert(b.end(), {"--out", f.tmp / "b"});
  const auto first = run(a);
  REQUIRE(first.code == 0);
  REQUIRE(run(b).code == 0);
  CHECK(load_assignment(f.tmp / "a/assignment.jsonl").entries.size() == 40);
  for (const char* file : {"assignment.jsonl", "trials.jsonl", "search.json"}) {
    CHECK(testing::read_file(f.tmp / ("a/" + std::string(file))) ==
          testing::read_file(f.tmp / ("b/" + std::string(file))));
  }
}

TEST_CASE("missing or bad flags exit 1 with one error line naming the flag") {
  Fixture f;
  auto r = run({"cluster", "--conversations", f.tmp / "conversations.jsonl", "--out", f.tmp / "o"});
  CHECK(r.code == 1);
  CHECK(error_lines(r.err) == 1);
  CHECK(r.err.find("--embeddings") != std::string::npos);

  r = run({"cluster", "--conversations", f.tmp / "conversations.jsonl", "--embeddings", f.tmp / "nope.ieb", "--out",
           f.tmp / "o"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--embeddings") != std::string::npos);

  r = run({"eval-task1", "--bogus"});
  CHECK(r.code == 1);
  CHECK(error_lines(r.err) == 1);

  r = run({"eval-task1", "--conversations", f.tmp / "conversations.jsonl", "--assignment", f.tmp / "x", "--nmi-mode",
           "median", "--out", f.tmp / "o"});
  CHECK(r.code == 1);

  CHECK(run({}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("data errors exit 2") {
  Fixture f;
  testing::write_file(f.tmp.path() / "broken.jsonl", "{\"utterance_id\": \"x\"}\n");
  const auto r = run({"eval-task1", "--conversations", f.tmp / "conversations.jsonl", "--assignment",
                      f.tmp / "broken.jsonl", "--out", f.tmp / "o"});
  CHECK(r.code == 2);
  CHECK(error_lines(r.err) == 1);
  CHECK(r.err.find("broken.jsonl:1") != std::string::npos);
}

TEST_CASE("eval-task1 on a perfect assignment prints 1.0000 everywhere") {
  Fixture f;
  ClusterAssignment perfect;
  for (const auto& [key, intent] : intentful_gold_labels(f.data.corpus)) perfect.entries[key] = "g" + intent;
  {
    std::ofstream out(f.tmp / "perfect.jsonl");
    write_assignment(perfect, out);
  }
  const auto r = run({"eval-task1", "--conversations", f.tmp / "conversations.jsonl", "--assignment",
                      f.tmp / "perfect.jsonl", "--out", f.tmp / "o"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1.0000  1.0000  1.0000  1.0000  1.0000  1.0000") != std::string::npos);
  const auto report = nlohmann::json::parse(testing::read_file(f.tmp.path() / "o/report.json"));
  CHECK(report["acc"] == 1.0);
  CHECK(report["nmi_mode"] == "arithmetic");
  CHECK(std::filesystem::exists(f.tmp.path() / "o/report.md"));

  const auto json_only = run({"eval-task1", "--conversations", f.tmp / "conversations.jsonl", "--assignment",
                              f.tmp / "perfect.jsonl", "--out", f.tmp / "j", "--format", "json"});
  CHECK(json_only.code == 0);
  CHECK_FALSE(std::filesystem::exists(f.tmp.path() / "j/report.md"));
}

TEST_CASE("induce then eval-task2") {
  Fixture f;
  REQUIRE(run({"induce", "--conversations", f.tmp / "conversations.jsonl", "--embeddings", f.tmp / "turns.ieb",
               "--k-min", "2", "--k-max", "8", "--trials", "6", "--out", f.tmp / "ind"})
              .code == 0);
  CHECK(std::filesystem::exists(f.tmp.path() / "ind/training_set.jsonl"));

  const auto r = run({"eval-task2", "--training-set", f.tmp / "train.jsonl", "--embeddings", f.tmp / "train_emb.ieb",
                      "--test-set", f.tmp / "test.jsonl", "--test-embeddings", f.tmp / "test_emb.jsonl", "--out",
                      f.tmp / "e2"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(testing::read_file(f.tmp.path() / "e2/report.json"))["acc"] == 1.0);
}

TEST_CASE("rank prints the 11/12 row") {
  Fixture f;
  testing::write_file(f.tmp.path() / "scores.json", R"({
    "x": {"d1": {"acc": 0.9, "f1": 0.9, "nmi": 0.9}, "d2": {"acc": 0.9, "f1": 0.1, "nmi": 0.9}},
    "y": {"d1": {"acc": 0.5, "f1": 0.5, "nmi": 0.5}, "d2": {"acc": 0.5, "f1": 0.5, "nmi": 0.5}}})");
  const auto r = run({"rank", "--scores", f.tmp / "scores.json", "--out", f.tmp / "r"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("| 1 | x | 0.9167 |") != std::string::npos);
  const auto board = nlohmann::json::parse(testing::read_file(f.tmp.path() / "r/leaderboard.json"));
  CHECK(board["leaderboard"][0]["mrr"] == 11.0 / 12.0);
  CHECK(board["tie_rule"] == "competition");
}

TEST_CASE("diversity on an identical-vector corpus is 0.0000") {
  Fixture f;
  RowMatrixXf same = RowMatrixXf::Constant(f.data.turn_store.size(), 6, 0.25f);
  save_embeddings(EmbeddingStore("flat", 6, f.data.turn_store.ids(), same, false), f.tmp / "flat.ieb",
                  EmbeddingFormat::binary);
  const auto r = run({"diversity", "--conversations", f.tmp / "conversations.jsonl", "--embeddings",
                      f.tmp / "flat.ieb", "--out", f.tmp / "d"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0.0000") != std::string::npos);
  CHECK(nlohmann::json::parse(testing::read_file(f.tmp.path() / "d/diversity.json"))["overall"] == 0.0);
}

TEST_CASE("propagate writes before and after scores") {
  Fixture f;
  ClusterAssignment masked;
  int i = 0;
  for (const auto& [key, intent] : intentful_gold_labels(f.data.corpus)) {
    masked.entries[key] = (i++ % 3 == 0) ? kNoiseLabel : "g" + intent;
  }
  {
    std::ofstream out(f.tmp / "masked.jsonl");
    write_assignment(masked, out);
  }
  const auto before = testing::read_file(f.tmp.path() / "masked.jsonl");
  const auto r = run({"propagate", "--assignment", f.tmp / "masked.jsonl", "--embeddings", f.tmp / "turns.ieb",
                      "--conversations", f.tmp / "conversations.jsonl", "--out", f.tmp / "p"});
  REQUIRE(r.code == 0);
  CHECK(testing::read_file(f.tmp.path() / "masked.jsonl") == before);  // input untouched
  const auto summary = nlohmann::json::parse(testing::read_file(f.tmp.path() / "p/propagation.json"));
  CHECK(summary["after"]["acc"].get<double>() > summary["before"]["acc"].get<double>());
  CHECK(load_assignment(f.tmp / "p/assignment.jsonl").noise_count() == 0);
}
