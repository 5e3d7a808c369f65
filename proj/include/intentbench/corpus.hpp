#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace intentbench {

enum class SpeakerRole { agent, customer };

std::string to_string(SpeakerRole role);
SpeakerRole parse_speaker_role(const std::string& text);

inline constexpr const char* kInformIntentAct = "InformIntent";

struct Turn {
  std::string turn_id;
  SpeakerRole speaker_role = SpeakerRole::customer;
  std::string utterance;
  std::vector<std::string> dialogue_acts;
  bool intentful = false;
  // Reference label. Only read by the scoring paths.
  std::optional<std::string> gold_intent;

  bool has_act(const std::string& act) const;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::string conversation_id;
  std::vector<Turn> turns;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct TestUtterance {
  std::string utterance_id;
  std::string utterance;
  std::string gold_intent;

  friend bool operator==(const TestUtterance&, const TestUtterance&) = default;
};

struct Corpus {
  std::string dataset_name;
  std::vector<Conversation> conversations;
  std::optional<std::vector<TestUtterance>> test_set;

  std::size_t turn_count() const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// (utterance key, text) pair handed to the induction pipelines.
struct KeyedUtterance {
  std::string key;
  std::string text;

  friend bool operator==(const KeyedUtterance&, const KeyedUtterance&) = default;
};

/// "conversation_id/turn_id"
std::string utterance_key(const Conversation& conversation, const Turn& turn);

/// Reads the JSON-lines conversations format. The dataset name defaults to the file stem.
/// Throws DataError carrying the path, line number and offending field.
Corpus load_conversations(const std::filesystem::path& path);
Corpus parse_conversations(std::istream& in, std::string dataset_name,
                           const std::string& source = "<stream>");
void write_conversations(const Corpus& corpus, std::ostream& out);

std::vector<TestUtterance> load_test_set(const std::filesystem::path& path);
std::vector<TestUtterance> parse_test_set(std::istream& in, const std::string& source = "<stream>");
void write_test_set(const std::vector<TestUtterance>& test_set, std::ostream& out);

/// Turns tagged intentful, in document order. The tag governs, not the speaker.
std::vector<KeyedUtterance> intentful_turns(const Corpus& corpus);

/// Turns whose predicted dialogue acts contain InformIntent. Passing std::nullopt disables the
/// speaker filter.
std::vector<KeyedUtterance> inform_intent_turns(
    const Corpus& corpus, std::optional<SpeakerRole> role_filter = SpeakerRole::customer);

/// Gold intents of intentful turns, keyed by utterance key. Turns without a gold label are skipped.
std::vector<std::pair<std::string, std::string>> intentful_gold_labels(const Corpus& corpus);

}  // namespace intentbench
