#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmlang/core/strings.hpp"
#include "mmlang/preprocess/utf8.hpp"

namespace mmlang {

// Whitespace/punctuation tokenizer for the desk-scale encoders. ASCII is
// lower-cased, ASCII punctuation is its own token, and each CJK ideograph is
// a token of its own.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto d = utf8::decode(text, i);
    const auto cp = d.codepoint;
    if (d.valid && cp < 0x80) {
      const char c = static_cast<char>(cp);
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        flush();
      } else if ((c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
                 (c >= '{' && c <= '~')) {
        if (c == '\'') {
          current += c;
        } else {
          flush();
          tokens.emplace_back(1, c);
        }
      } else {
        current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      }
    } else if (d.valid && utf8::is_cjk(cp)) {
      flush();
      tokens.emplace_back(text.substr(i, d.length));
    } else {
      current.append(text.substr(i, d.length));
    }
    i += d.length;
  }
  flush();
  return tokens;
}

// Hashed vocabulary lookup; truncates to max_tokens.
inline std::vector<int> token_ids(std::string_view text, int buckets, int max_tokens) {
  std::vector<int> ids;
  for (const auto& tok : tokenize(text)) {
    if (static_cast<int>(ids.size()) >= max_tokens) break;
    ids.push_back(static_cast<int>(strings::fnv1a(tok) % static_cast<std::uint64_t>(buckets)));
  }
  return ids;
}

}  // namespace mmlang
