#include <doctest.h>

#include <sstream>

#include "intentbench/corpus.hpp"
#include "intentbench/error.hpp"

using namespace intentbench;

namespace {

const char* kTwoConversations =
    R"({"conversation_id":"c1","turns":[{"turn_id":"0","speaker_role":"agent","utterance":"hi","dialogue_acts":[],"intentful":false,"intent":null},{"turn_id":"1","speaker_role":"customer","utterance":"lost my card","dialogue_acts":["InformIntent"],"intentful":true,"intent":"lost_card"},{"turn_id":"2","speaker_role":"agent","utterance":"sorry to hear","dialogue_acts":["InformIntent"],"intentful":true,"intent":"lost_card"}]}
{"conversation_id":"c2","turns":[{"turn_id":"0","speaker_role":"customer","utterance":"hello","dialogue_acts":[],"intentful":false,"intent":null},{"turn_id":"1","speaker_role":"customer","utterance":"check balance","dialogue_acts":["InformIntent","Other"],"intentful":true,"intent":"balance"},{"turn_id":"2","speaker_role":"agent","utterance":"sure","dialogue_acts":[],"intentful":false,"intent":null}]}
)";

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conversations(in, "fixture", "fixture.jsonl");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("two conversations of three turns load in order") {
  const auto corpus = parse(kTwoConversations);
  CHECK(corpus.dataset_name == "fixture");
  REQUIRE(corpus.conversations.size() == 2);
  CHECK(corpus.turn_count() == 6);
  CHECK(corpus.conversations[0].turns[1].utterance == "lost my card");
  CHECK(corpus.conversations[1].turns[1].dialogue_acts == std::vector<std::string>{"InformIntent", "Other"});
  CHECK(corpus.conversations[0].turns[1].gold_intent == "lost_card");
  CHECK_FALSE(corpus.conversations[0].turns[0].gold_intent.has_value());
}

TEST_CASE("round trip through the serializer is lossless") {
  const auto corpus = parse(kTwoConversations);
  std::ostringstream out;
  write_conversations(corpus, out);
  CHECK(parse(out.str()) == corpus);
}

TEST_CASE("schema errors name the line and the field") {
  const std::string missing_role =
      R"({"conversation_id":"c1","turns":[{"turn_id":"0","speaker_role":"agent","utterance":"hi","dialogue_acts":[],"intentful":false,"intent":null}]}
{"conversation_id":"c2","turns":[{"turn_id":"0","utterance":"hi","dialogue_acts":[],"intentful":false,"intent":null}]}
)";
  const auto message = error_of(missing_role);
  CHECK(message.find("fixture.jsonl:2") != std::string::npos);
  CHECK(message.find("speaker_role") != std::string::npos);

  CHECK(error_of("{not json}\n").find("fixture.jsonl:1") != std::string::npos);
  CHECK(error_of(R"({"conversation_id":"c","turns":[]})"
                 "\n")
            .find("fixture.jsonl:1") != std::string::npos);
  const std::string dup =
      R"({"conversation_id":"c","turns":[{"turn_id":"0","speaker_role":"agent","utterance":"a","dialogue_acts":[],"intentful":false,"intent":null}]}
{"conversation_id":"c","turns":[{"turn_id":"0","speaker_role":"agent","utterance":"a","dialogue_acts":[],"intentful":false,"intent":null}]}
)";
  CHECK(error_of(dup).find("fixture.jsonl:2") != std::string::npos);
  CHECK(error_of(R"({"conversation_id":"c","turns":[{"turn_id":"0","speaker_role":"robot","utterance":"a","dialogue_acts":[],"intentful":false,"intent":null}]})"
                 "\n")
            .find("robot") != std::string::npos);
}

TEST_CASE("intentful turns follow the tag, not the role") {
  const auto corpus = parse(kTwoConversations);
  const auto turns = intentful_turns(corpus);
  REQUIRE(turns.size() == 3);
  CHECK(turns[0] == KeyedUtterance{"c1/1", "lost my card"});
  CHECK(turns[1] == KeyedUtterance{"c1/2", "sorry to hear"});
  CHECK(turns[2] == KeyedUtterance{"c2/1", "check balance"});
  CHECK(intentful_turns(corpus) == turns);  // idempotent

  Corpus untagged = corpus;
  for (auto& conv : untagged.conversations) {
    for (auto& turn : conv.turns) turn.intentful = false;
  }
  CHECK(intentful_turns(untagged).empty());
}

TEST_CASE("InformIntent selection filters by speaker unless told not to") {
  const auto corpus = parse(kTwoConversations);
  const auto customer = inform_intent_turns(corpus);
  REQUIRE(customer.size() == 2);
  CHECK(customer[0].key == "c1/1");
  CHECK(customer[1].key == "c2/1");

  const auto any = inform_intent_turns(corpus, std::nullopt);
  std::vector<std::string> manual;
  for (const auto& conv : corpus.conversations) {
    for (const auto& turn : conv.turns) {
      if (turn.has_act(kInformIntentAct)) manual.push_back(utterance_key(conv, turn));
    }
  }
  std::vector<std::string> got;
  for (const auto& t : any) got.push_back(t.key);
  CHECK(got == manual);

  CHECK(inform_intent_turns(corpus, SpeakerRole::agent).size() == 1);
}

TEST_CASE("gold labels cover exactly the intentful turns") {
  const auto labels = intentful_gold_labels(parse(kTwoConversations));
  REQUIRE(labels.size() == 3);
  CHECK(labels[2] == std::pair<std::string, std::string>{"c2/1", "balance"});
}

TEST_CASE("test sets round trip and reject duplicates") {
  const std::string text =
      R"({"utterance_id":"t1","utterance":"where is my card","intent":"lost_card"}
{"utterance_id":"t2","utterance":"balance please","intent":"balance"}
)";
  std::istringstream in(text);
  const auto test = parse_test_set(in, "test.jsonl");
  REQUIRE(test.size() == 2);
  std::ostringstream out;
  write_test_set(test, out);
  std::istringstream again(out.str());
  CHECK(parse_test_set(again) == test);

  std::istringstream dup(text + R"({"utterance_id":"t1","utterance":"x","intent":"y"})" + "\n");
  CHECK_THROWS_AS(parse_test_set(dup, "test.jsonl"), DataError);
}
