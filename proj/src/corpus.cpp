#include "intentbench/corpus.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_set>

#include "jsonl.hpp"

namespace intentbench {

using detail::json;
using detail::LineContext;

std::string to_string(SpeakerRole role) {
  return role == SpeakerRole::agent ? "agent" : "customer";
}

SpeakerRole parse_speaker_role(const std::string& text) {
  if (text == "agent") return SpeakerRole::agent;
  if (text == "customer") return SpeakerRole::customer;
  throw DataError("unknown speaker role \"" + text + "\"");
}

bool Turn::has_act(const std::string& act) const {
  return std::find(dialogue_acts.begin(), dialogue_acts.end(), act) != dialogue_acts.end();
}

std::size_t Corpus::turn_count() const {
  std::size_t total = 0;
  for (const auto& c : conversations) total += c.turns.size();
  return total;
}

std::string utterance_key(const Conversation& conversation, const Turn& turn) {
  return conversation.conversation_id + "/" + turn.turn_id;
}

namespace {

Turn parse_turn(const json& object, std::size_t index, const LineContext& ctx) {
  const std::string where = "turns[" + std::to_string(index) + "].";
  if (!object.is_object()) ctx.fail(where + " must be an object");
  auto field_fail = [&](const std::string& field, const std::string& what) {
    ctx.fail("field \"" + where + field + "\" " + what);
  };
  auto get = [&](const char* field) -> const json& {
    auto it = object.find(field);
    if (it == object.end()) ctx.fail("missing field \"" + where + field + "\"");
    return *it;
  };

  Turn turn;
  const json& id = get("turn_id");
  if (!id.is_string() || id.get<std::string>().empty()) field_fail("turn_id", "must be a non-empty string");
  turn.turn_id = id.get<std::string>();

  const json& role = get("speaker_role");
  if (!role.is_string()) field_fail("speaker_role", "must be a string");
  const auto role_text = role.get<std::string>();
  if (role_text == "agent") {
    turn.speaker_role = SpeakerRole::agent;
  } else if (role_text == "customer") {
    turn.speaker_role = SpeakerRole::customer;
  } else {
    field_fail("speaker_role", "must be \"agent\" or \"customer\", got \"" + role_text + "\"");
  }

  const json& text = get("utterance");
  if (!text.is_string() || text.get<std::string>().empty()) field_fail("utterance", "must be a non-empty string");
  turn.utterance = text.get<std::string>();

  const json& acts = get("dialogue_acts");
  if (!acts.is_array()) field_fail("dialogue_acts", "must be an array of strings");
  for (const auto& act : acts) {
    if (!act.is_string()) field_fail("dialogue_acts", "must be an array of strings");
    turn.dialogue_acts.push_back(act.get<std::string>());
  }

  const json& intentful = get("intentful");
  if (!intentful.is_boolean()) field_fail("intentful", "must be a boolean");
  turn.intentful = intentful.get<bool>();

  const json& intent = get("intent");
  if (intent.is_string()) {
    if (intent.get<std::string>().empty()) field_fail("intent", "must be null or a non-empty string");
    turn.gold_intent = intent.get<std::string>();
  } else if (!intent.is_null()) {
    field_fail("intent", "must be null or a string");
  }
  return turn;
}

}  // namespace

Corpus parse_conversations(std::istream& in, std::string dataset_name, const std::string& source) {
  if (dataset_name.empty()) throw DataError(source + ": dataset name must be non-empty");
  Corpus corpus;
  corpus.dataset_name = std::move(dataset_name);
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(in, source, [&](const json& object, const LineContext& ctx) {
    Conversation conversation;
    conversation.conversation_id = detail::require_nonempty_string(object, "conversation_id", ctx);
    if (!seen.insert(conversation.conversation_id).second) {
      ctx.fail("duplicate conversation_id \"" + conversation.conversation_id + "\"");
    }
    const json& turns = detail::require(object, "turns", ctx);
    if (!turns.is_array()) ctx.fail("field \"turns\" must be an array");
    if (turns.empty()) ctx.fail("field \"turns\" must contain at least one turn");
    std::unordered_set<std::string> turn_ids;
    for (std::size_t i = 0; i < turns.size(); ++i) {
      Turn turn = parse_turn(turns[i], i, ctx);
      if (!turn_ids.insert(turn.turn_id).second) {
        ctx.fail("duplicate turn_id \"" + turn.turn_id + "\" in conversation \"" +
                 conversation.conversation_id + "\"");
      }
      conversation.turns.push_back(std::move(turn));
    }
    corpus.conversations.push_back(std::move(conversation));
  });
  return corpus;
}

Corpus load_conversations(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_conversations(in, path.stem().string(), path.string());
}

void write_conversations(const Corpus& corpus, std::ostream& out) {
  for (const auto& conversation : corpus.conversations) {
    nlohmann::ordered_json line;
    line["conversation_id"] = conversation.conversation_id;
    line["turns"] = nlohmann::ordered_json::array();
    for (const auto& turn : conversation.turns) {
      nlohmann::ordered_json t;
      t["turn_id"] = turn.turn_id;
      t["speaker_role"] = to_string(turn.speaker_role);
      t["utterance"] = turn.utterance;
      t["dialogue_acts"] = turn.dialogue_acts;
      t["intentful"] = turn.intentful;
      t["intent"] = turn.gold_intent ? nlohmann::ordered_json(*turn.gold_intent)
                                     : nlohmann::ordered_json(nullptr);
      line["turns"].push_back(std::move(t));
    }
    out << line.dump() << '\n';
  }
}

std::vector<TestUtterance> parse_test_set(std::istream& in, const std::string& source) {
  std::vector<TestUtterance> items;
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(in, source, [&](const json& object, const LineContext& ctx) {
    TestUtterance item;
    item.utterance_id = detail::require_nonempty_string(object, "utterance_id", ctx);
    item.utterance = detail::require_nonempty_string(object, "utterance", ctx);
    item.gold_intent = detail::require_nonempty_string(object, "intent", ctx);
    if (!seen.insert(item.utterance_id).second) {
      ctx.fail("duplicate utterance_id \"" + item.utterance_id + "\"");
    }
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<TestUtterance> load_test_set(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_test_set(in, path.string());
}

void write_test_set(const std::vector<TestUtterance>& test_set, std::ostream& out) {
  for (const auto& item : test_set) {
    nlohmann::ordered_json line;
    line["utterance_id"] = item.utterance_id;
    line["utterance"] = item.utterance;
    line["intent"] = item.gold_intent;
    out << line.dump() << '\n';
  }
}

std::vector<KeyedUtterance> intentful_turns(const Corpus& corpus) {
  std::vector<KeyedUtterance> selected;
  for (const auto& conversation : corpus.conversations) {
    for (const auto& turn : conversation.turns) {
      if (turn.intentful) selected.push_back({utterance_key(conversation, turn), turn.utterance});
    }
  }
  return selected;
}

std::vector<KeyedUtterance> inform_intent_turns(const Corpus& corpus,
                                                std::optional<SpeakerRole> role_filter) {
  std::vector<KeyedUtterance> selected;
  for (const auto& conversation : corpus.conversations) {
    for (const auto& turn : conversation.turns) {
      if (!turn.has_act(kInformIntentAct)) continue;
      if (role_filter && turn.speaker_role != *role_filter) continue;
      selected.push_back({utterance_key(conversation, turn), turn.utterance});
    }
  }
  return selected;
}

std::vector<std::pair<std::string, std::string>> intentful_gold_labels(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> labels;
  for (const auto& conversation : corpus.conversations) {
    for (const auto& turn : conversation.turns) {
      if (turn.intentful && turn.gold_intent) {
        labels.emplace_back(utterance_key(conversation, turn), *turn.gold_intent);
      }
    }
  }
  return labels;
}

}  // namespace intentbench
