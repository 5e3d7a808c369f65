#include <doctest.h>

#include <random>
#include <sstream>

#include "../support.hpp"
#include "intentbench/embed_store.hpp"
#include "intentbench/error.hpp"

using namespace intentbench;

namespace {

EmbeddingStore small_store() {
  RowMatrixXf v(3, 4);
  v << 0.1f, -2.5f, 3.0e-8f, 7.0f, 1.0f, 2.0f, 3.0f, 4.0f, -0.333333f, 0.0f, 1e30f, -1e-30f;
  return EmbeddingStore("enc", 4, {"a", "b", "c"}, v, false);
}

}  // namespace

TEST_CASE("binary round trip is bit-exact") {
  const auto store = small_store();
  std::stringstream buf;
  write_embeddings_binary(store, buf);
  const auto back = read_embeddings_binary(buf);
  CHECK(back == store);
  CHECK(back.encoder_name() == "enc");
  CHECK(std::memcmp(back.vectors().data(), store.vectors().data(), sizeof(float) * 12) == 0);
}

TEST_CASE("JSONL and binary encodings load to equal stores") {
  const auto store = small_store();
  testing::TempDir tmp("embed");
  save_embeddings(store, tmp / "e.ieb", EmbeddingFormat::binary);
  save_embeddings(store, tmp / "e.jsonl", EmbeddingFormat::jsonl);
  CHECK(load_embeddings(tmp / "e.ieb") == load_embeddings(tmp / "e.jsonl"));
  CHECK(load_embeddings(tmp / "e.jsonl") == store);
}

TEST_CASE("malformed files are rejected") {
  SUBCASE("vector of the wrong length") {
    std::istringstream in(R"({"encoder":"e","dim":2,"normalized":false}
{"id":"a","vector":[1,2]}
{"id":"b","vector":[1,2,3]}
)");
    CHECK_THROWS_WITH_AS(read_embeddings_jsonl(in, "x.jsonl"), doctest::Contains("x.jsonl:3"), DataError);
  }
  SUBCASE("duplicate id") {
    std::istringstream in(R"({"encoder":"e","dim":1,"normalized":false}
{"id":"a","vector":[1]}
{"id":"a","vector":[2]}
)");
    CHECK_THROWS_AS(read_embeddings_jsonl(in), DataError);
  }
  SUBCASE("truncated binary") {
    std::stringstream buf;
    write_embeddings_binary(small_store(), buf);
    std::string bytes = buf.str();
    bytes.pop_back();
    std::istringstream in(bytes);
    CHECK_THROWS_AS(read_embeddings_binary(in), DataError);
  }
  SUBCASE("trailing bytes") {
    std::stringstream buf;
    write_embeddings_binary(small_store(), buf);
    std::istringstream in(buf.str() + "x");
    CHECK_THROWS_AS(read_embeddings_binary(in), DataError);
  }
  SUBCASE("normalized flag that the rows do not honor") {
    RowMatrixXf v(1, 2);
    v << 3.0f, 4.0f;
    CHECK_THROWS_AS(EmbeddingStore("e", 2, {"a"}, v, true), DataError);
  }
  SUBCASE("non-finite component") {
    RowMatrixXf v(1, 2);
    v << 3.0f, std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(EmbeddingStore("e", 2, {"a"}, v, false), DataError);
  }
}

TEST_CASE("normalize maps (3,4) to (0.6,0.8) and is idempotent") {
  RowMatrixXf v(1, 2);
  v << 3.0f, 4.0f;
  const auto unit = normalize(EmbeddingStore("e", 2, {"a"}, v, false));
  CHECK(unit.normalized());
  CHECK(unit.vectors()(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(unit.vectors()(0, 1) == doctest::Approx(0.8).epsilon(1e-7));
  const auto twice = normalize(unit);
  CHECK((twice.vectors() - unit.vectors()).cwiseAbs().maxCoeff() <= 1e-7f);
}

TEST_CASE("random stores normalize to unit length and keep direction") {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> gauss;
  RowMatrixXf v(50, 7);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = gauss(rng);
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("id" + std::to_string(i));
  const EmbeddingStore store("e", 7, ids, v, false);
  const auto unit = normalize(store);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const Eigen::VectorXd a = store.vectors().row(i).cast<double>();
    const Eigen::VectorXd b = unit.vectors().row(i).cast<double>();
    CHECK(std::abs(b.norm() - 1.0) <= 1e-6);
    CHECK(a.dot(b) / (a.norm() * b.norm()) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("gather follows the requested order and names absent ids") {
  const auto store = small_store();
  const std::vector<std::string> all{"a", "b", "c"}, reversed{"c", "b", "a"};
  const Eigen::MatrixXd full = gather(store, all);
  CHECK(full == store.vectors().cast<double>());
  const Eigen::MatrixXd rev = gather(store, reversed);
  CHECK(rev.row(0) == full.row(2));
  CHECK(rev.row(2) == full.row(0));
  const std::vector<std::string> bad{"a", "zzz"};
  CHECK_THROWS_WITH_AS(gather(store, bad), doctest::Contains("zzz"), DataError);
  CHECK(missing_ids(store, bad) == std::vector<std::string>{"zzz"});
}
