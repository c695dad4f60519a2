#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmlang/core/error.hpp"
#include "mmlang/core/strings.hpp"
#include "mmlang/preprocess/utf8.hpp"

namespace mmlang {

enum class CleaningRule {
  strip_urls,
  strip_emoticons,
  strip_platform_tokens,
  strip_symbols,
  expand_negations,
  collapse_whitespace,
};

// Fixed application order.
inline constexpr std::array<CleaningRule, 6> kCleaningRuleOrder{
    CleaningRule::strip_urls,      CleaningRule::strip_emoticons,
    CleaningRule::strip_platform_tokens, CleaningRule::strip_symbols,
    CleaningRule::expand_negations, CleaningRule::collapse_whitespace};

// Data behind the cleaning rules. The same tables ship as plain-text files
// under data/ (see load_cleaning_tables).
struct CleaningTables {
  // (contraction, expansion); keys are lower case and use an ASCII apostrophe.
  std::vector<std::pair<std::string, std::string>> contractions;
  std::vector<std::string> ascii_emoticons;

  static CleaningTables defaults() {
    CleaningTables t;
    t.contractions = {
        {"can't", "can not"},       {"won't", "will not"},       {"don't", "do not"},
        {"doesn't", "does not"},    {"didn't", "did not"},       {"isn't", "is not"},
        {"aren't", "are not"},      {"wasn't", "was not"},       {"weren't", "were not"},
        {"haven't", "have not"},    {"hasn't", "has not"},       {"hadn't", "had not"},
        {"wouldn't", "would not"},  {"shouldn't", "should not"}, {"couldn't", "could not"},
        {"mustn't", "must not"},    {"needn't", "need not"},     {"shan't", "shall not"},
        {"mightn't", "might not"},  {"ain't", "am not"},
    };
    t.ascii_emoticons = {":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P",
                         ":p", ":-p", ":o", ":O", ":/", ":-/", ":|", ":'(", "<3", "</3",
                         "xD", "XD", ":*", "^_^", "-_-", "o_O", "O_o", "T_T", ":3", "=)"};
    t.normalize();
    return t;
  }

  // Longest contraction first so overlapping prefixes resolve to the longer key.
  void normalize() {
    for (auto& [k, v] : contractions)
      std::transform(k.begin(), k.end(), k.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::stable_sort(contractions.begin(), contractions.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  }
};

namespace detail {

inline std::vector<std::string> read_data_lines(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open data file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// contractions file: "<contraction>\t<expansion>" per line; emoticons file:
// one emoticon per line. '#' starts a comment line.
inline CleaningTables load_cleaning_tables(const std::filesystem::path& contractions_file,
                                           const std::filesystem::path& emoticons_file) {
  CleaningTables t;
  for (const auto& line : detail::read_data_lines(contractions_file)) {
    auto parts = strings::split(line, '\t');
    if (parts.size() != 2 || parts[0].empty())
      throw ParseError("bad contraction line '" + line + "' in " + contractions_file.string());
    t.contractions.emplace_back(std::string(parts[0]), std::string(parts[1]));
  }
  t.ascii_emoticons = detail::read_data_lines(emoticons_file);
  t.normalize();
  return t;
}

inline bool is_emoji_codepoint(char32_t cp) {
  return (cp >= 0x1F300 && cp <= 0x1FAFF) ||  // pictographs, emoticons, transport, symbols
         (cp >= 0x1F000 && cp <= 0x1F2FF) ||  // game pieces, enclosed supplements
         (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
         (cp >= 0x2B00 && cp <= 0x2BFF) ||    // arrows and stars
         (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
         cp == 0x200D || cp == 0x20E3 ||      // joiner, keycap
         (cp >= 0xE0020 && cp <= 0xE007F);    // tag sequences
}

class TextCleaner {
 public:
  explicit TextCleaner(CleaningTables tables = CleaningTables::defaults())
      : tables_(std::move(tables)) {}

  // Applies the rules in order until the output stops changing, so that
  // cleaning is idempotent even when one rule exposes work for an earlier one
  // (e.g. "h#ttp://x" only becomes a URL after '#' is stripped).
  std::string operator()(std::string_view raw) const {
    std::string current(raw);
    for (int pass = 0; pass < 32; ++pass) {
      auto next = apply_once(current);
      if (next == current) return next;
      current = std::move(next);
    }
    return current;
  }

  std::string apply_once(std::string_view raw) const {
    std::string s(raw);
    for (auto rule : kCleaningRuleOrder) s = apply(rule, s);
    return s;
  }

  std::string apply(CleaningRule rule, std::string_view s) const {
    switch (rule) {
      case CleaningRule::strip_urls: return strip_urls(s);
      case CleaningRule::strip_emoticons: return strip_emoticons(s);
      case CleaningRule::strip_platform_tokens: return strip_platform_tokens(s);
      case CleaningRule::strip_symbols: return strip_symbols(s);
      case CleaningRule::expand_negations: return expand_negations(s);
      case CleaningRule::collapse_whitespace: return collapse_whitespace(s);
    }
    return std::string(s);
  }

  const CleaningTables& tables() const { return tables_; }

  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  static std::string strip_urls(std::string_view s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      if (is_space(s[i])) {
        out += s[i++];
        continue;
      }
      std::size_t end = i;
      while (end < s.size() && !is_space(s[end])) ++end;
      const auto token = s.substr(i, end - i);
      out += token.substr(0, url_start(token));
      i = end;
    }
    return out;
  }

  std::string strip_emoticons(std::string_view s) const {
    // Emoji codepoints become spaces so adjacent words stay separate.
    std::string no_emoji;
    for (std::size_t i = 0; i < s.size();) {
      auto d = utf8::decode(s, i);
      if (d.valid && is_emoji_codepoint(d.codepoint))
        no_emoji += ' ';
      else
        no_emoji.append(s.substr(i, d.length));
      i += d.length;
    }
    std::string out;
    std::size_t i = 0;
    const std::string_view v = no_emoji;
    while (i < v.size()) {
      if (is_space(v[i])) {
        out += v[i++];
        continue;
      }
      std::size_t end = i;
      while (end < v.size() && !is_space(v[end])) ++end;
      const auto token = v.substr(i, end - i);
      const bool emoticon = std::find(tables_.ascii_emoticons.begin(),
                                      tables_.ascii_emoticons.end(),
                                      token) != tables_.ascii_emoticons.end();
      if (!emoticon) out += token;
      i = end;
    }
    return out;
  }

  // Drops a leading retweet marker together with the mentions that follow it.
  static std::string strip_platform_tokens(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && is_space(s[i])) ++i;
    auto next_token = [&](std::size_t from) {
      std::size_t end = from;
      while (end < s.size() && !is_space(s[end])) ++end;
      return end;
    };
    std::size_t end = next_token(i);
    if (s.substr(i, end - i) != "RT") return std::string(s);
    i = end;
    for (;;) {
      std::size_t j = i;
      while (j < s.size() && is_space(s[j])) ++j;
      if (j >= s.size() || s[j] != '@') break;
      i = next_token(j);
    }
    return std::string(s.substr(i));
  }

  static std::string strip_symbols(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
      if (c != '@' && c != '#') out += c;
    return out;
  }

  std::string expand_negations(std::string_view s) const {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      if (i == 0 || !is_ascii_letter(s[i - 1])) {
        if (auto m = match_contraction(s, i)) {
          out += m->first;
          i += m->second;
          continue;
        }
      }
      out += s[i++];
    }
    return out;
  }

  static std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
      if (is_space(c)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
    return out;
  }

 private:
  static bool is_ascii_letter(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }

  static char lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }

  static bool iequals_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k)
      if (lower(s[k]) != prefix[k]) return false;
    return true;
  }

  // Position of the URL part of a whitespace-free token, or token.size().
  static std::size_t url_start(std::string_view token) {
    static constexpr std::array<std::string_view, 4> kPrefixes{"https://", "http://", "ftp://",
                                                               "www."};
    for (std::size_t k = 0; k < token.size(); ++k) {
      if (k > 0 && std::isalnum(static_cast<unsigned char>(token[k - 1]))) continue;
      for (auto p : kPrefixes)
        if (iequals_prefix(token.substr(k), p)) return k;
    }
    return token.size();
  }

  // Returns (replacement, bytes consumed). Accepts ' and U+2019 as apostrophe.
  std::optional<std::pair<std::string, std::size_t>> match_contraction(std::string_view s,
                                                                       std::size_t at) const {
    for (const auto& [key, expansion] : tables_.contractions) {
      std::size_t si = at;
      std::size_t ki = 0;
      bool all_upper = true;
      bool ok = true;
      while (ki < key.size()) {
        if (si >= s.size()) {
          ok = false;
          break;
        }
        if (key[ki] == '\'') {
          if (s[si] == '\'') {
            si += 1;
          } else if (s.substr(si, 3) == "\xE2\x80\x99") {
            si += 3;
          } else {
            ok = false;
            break;
          }
        } else {
          if (lower(s[si]) != key[ki]) {
            ok = false;
            break;
          }
          if (is_ascii_letter(s[si]) && !(s[si] >= 'A' && s[si] <= 'Z')) all_upper = false;
          si += 1;
        }
        ++ki;
      }
      if (!ok) continue;
      if (si < s.size() && is_ascii_letter(s[si])) continue;
      std::string rep = expansion;
      if (all_upper) {
        for (auto& c : rep)
          if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      } else if (s[at] >= 'A' && s[at] <= 'Z' && !rep.empty() && rep[0] >= 'a' && rep[0] <= 'z') {
        rep[0] = static_cast<char>(rep[0] - 'a' + 'A');
      }
      return std::make_pair(rep, si - at);
    }
    return std::nullopt;
  }

  CleaningTables tables_;
};

inline std::string clean_text(std::string_view raw) {
  static const TextCleaner cleaner;
  return cleaner(raw);
}

}  // namespace mmlang
