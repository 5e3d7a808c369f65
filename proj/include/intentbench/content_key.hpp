#pragma once

#include <string>
#include <string_view>

namespace intentbench {

/// Lowercase hex SHA-256 of the UTF-8 bytes of `text`. Keys induced training utterances into
/// embedding stores independently of where the utterance came from.
std::string content_key(std::string_view text);

}  // namespace intentbench
