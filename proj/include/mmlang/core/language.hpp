#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mmlang/core/error.hpp"

namespace mmlang {

// The six dataset languages. English is the reference language every
// disparity measure is taken against.
enum class Language : std::uint8_t { en, es, fr, pt, zh, hi };

inline constexpr std::array<Language, 6> kAllLanguages{
    Language::en, Language::es, Language::fr, Language::pt, Language::zh, Language::hi};

inline constexpr std::array<Language, 5> kNonEnglish{
    Language::es, Language::fr, Language::pt, Language::zh, Language::hi};

inline constexpr Language kReferenceLanguage = Language::en;

// Relative size of each language in the multilingual pre-training corpus,
// largest first. Trend fits use the position in this order as the x value.
inline constexpr std::array<Language, 6> kCorpusSizeOrder{
    Language::en, Language::fr, Language::es, Language::pt, Language::zh, Language::hi};

constexpr std::string_view to_string(Language l) {
  switch (l) {
    case Language::en: return "en";
    case Language::es: return "es";
    case Language::fr: return "fr";
    case Language::pt: return "pt";
    case Language::zh: return "zh";
    case Language::hi: return "hi";
  }
  return "?";
}

inline std::optional<Language> parse_language(std::string_view s) {
  for (auto l : kAllLanguages)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

inline Language language_from_string(std::string_view s) {
  if (auto l = parse_language(s)) return *l;
  throw ParseError("unknown language code '" + std::string(s) + "'");
}

constexpr int corpus_rank(Language l) {
  for (std::size_t i = 0; i < kCorpusSizeOrder.size(); ++i)
    if (kCorpusSizeOrder[i] == l) return static_cast<int>(i);
  return -1;
}

}  // namespace mmlang
