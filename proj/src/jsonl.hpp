#pragma once

// Helpers shared by the JSON-lines readers and writers.

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <string>

#include <json.hpp>

#include "intentbench/error.hpp"

namespace intentbench::detail {

using nlohmann::json;

struct LineContext {
  const std::string& source;
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
  }
};

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

/// Calls visit(object, ctx) for every non-blank line. Lines must hold a JSON object.
inline void for_each_json_line(std::istream& in, const std::string& source,
                               const std::function<void(const json&, const LineContext&)>& visit) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const LineContext ctx{source, number};
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      ctx.fail(std::string("malformed JSON: ") + e.what());
    }
    if (!value.is_object()) ctx.fail("expected a JSON object");
    visit(value, ctx);
  }
}

inline const json& require(const json& object, const char* field, const LineContext& ctx) {
  auto it = object.find(field);
  if (it == object.end()) ctx.fail(std::string("missing field \"") + field + "\"");
  return *it;
}

inline std::string require_string(const json& object, const char* field, const LineContext& ctx) {
  const json& value = require(object, field, ctx);
  if (!value.is_string()) ctx.fail(std::string("field \"") + field + "\" must be a string");
  return value.get<std::string>();
}

inline std::string require_nonempty_string(const json& object, const char* field,
                                           const LineContext& ctx) {
  std::string value = require_string(object, field, ctx);
  if (value.empty()) ctx.fail(std::string("field \"") + field + "\" must be non-empty");
  return value;
}

}  // namespace intentbench::detail
