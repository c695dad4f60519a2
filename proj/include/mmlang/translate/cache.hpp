#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "mmlang/core/error.hpp"
#include "mmlang/core/strings.hpp"
#include "mmlang/translate/translator.hpp"

namespace mmlang {

// Translations keyed by (model id, source language, target language, text).
// Persisted as an append-only file, one entry per line:
//   key<TAB>model<TAB>src<TAB>tgt<TAB>escaped source<TAB>escaped translation
// Writes are serialized; lookups may run concurrently with them.
class TranslationCache {
 public:
  TranslationCache() = default;

  explicit TranslationCache(std::filesystem::path file) : file_(std::move(file)) {
    if (std::filesystem::exists(file_)) load();
  }

  static std::string key(std::string_view model, LanguagePair pair, std::string_view text) {
    std::uint64_t h = strings::fnv1a(model);
    h = strings::fnv1a(std::string_view("\0", 1), h);
    h = strings::fnv1a(to_string(pair.source), h);
    h = strings::fnv1a(std::string_view("\0", 1), h);
    h = strings::fnv1a(to_string(pair.target), h);
    h = strings::fnv1a(std::string_view("\0", 1), h);
    return strings::hex64(strings::fnv1a(text, h));
  }

  std::optional<std::string> lookup(std::string_view model, LanguagePair pair,
                                    std::string_view text) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key(model, pair, text));
    if (it == entries_.end()) return std::nullopt;
    const auto& e = it->second;
    if (e.model != model || e.pair != pair || e.source != text) return std::nullopt;
    return e.translation;
  }

  void store(std::string_view model, LanguagePair pair, std::string_view text,
             std::string_view translation) {
    std::lock_guard lock(mu_);
    const auto k = key(model, pair, text);
    Entry e{std::string(model), pair, std::string(text), std::string(translation)};
    if (!file_.empty()) {
      if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
      std::ofstream out(file_, std::ios::binary | std::ios::app);
      if (!out) throw Error("cannot append to translation cache " + file_.string());
      out << k << '\t' << strings::escape_field(e.model) << '\t' << to_string(pair.source) << '\t'
          << to_string(pair.target) << '\t' << strings::escape_field(e.source) << '\t'
          << strings::escape_field(e.translation) << '\n';
    }
    entries_[k] = std::move(e);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  const std::filesystem::path& file() const { return file_; }

 private:
  struct Entry {
    std::string model;
    LanguagePair pair;
    std::string source;
    std::string translation;
  };

  void load() {
    std::ifstream in(file_, std::ios::binary);
    if (!in) throw Error("cannot read translation cache " + file_.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto f = strings::split(line, '\t');
      auto src = f.size() == 6 ? parse_language(f[2]) : std::nullopt;
      auto tgt = f.size() == 6 ? parse_language(f[3]) : std::nullopt;
      auto model = f.size() == 6 ? strings::unescape_field(f[1]) : std::nullopt;
      auto source = f.size() == 6 ? strings::unescape_field(f[4]) : std::nullopt;
      auto translation = f.size() == 6 ? strings::unescape_field(f[5]) : std::nullopt;
      if (!src || !tgt || !model || !source || !translation)
        throw ParseError(file_.string() + ": bad cache line " + std::to_string(line_no));
      entries_[std::string(f[0])] = Entry{*model, {*src, *tgt}, *source, *translation};
    }
  }

  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
};

}  // namespace mmlang
