#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <string_view>
#include <thread>

#include "mmlang/core/error.hpp"
#include "mmlang/core/language.hpp"

namespace mmlang {

class TranslationError : public Error {
 public:
  using Error::Error;
};

struct LanguagePair {
  Language source = Language::en;
  Language target = Language::es;
  friend bool operator==(const LanguagePair&, const LanguagePair&) = default;
};

// A machine-translation backend. Implementations must be safe to call from
// several threads at once and throw TranslationError on failure.
class Translator {
 public:
  virtual ~Translator() = default;
  // Part of every cache key; changing the backend model invalidates entries.
  virtual std::string model_id() const = 0;
  virtual std::string translate(std::string_view text, LanguagePair pair) = 0;
};

// Deterministic test backend: prefixes the text with the target tag, e.g.
// "flood" -> "[es] flood".
class TaggingTranslator final : public Translator {
 public:
  std::string model_id() const override { return "tagging-stub-v1"; }

  std::string translate(std::string_view text, LanguagePair pair) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return "[" + std::string(to_string(pair.target)) + "] " + std::string(text);
  }

  long calls() const { return calls_.load(); }

 private:
  std::atomic<long> calls_{0};
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

// Calls fn; on TranslationError waits and retries up to max_retries times
// with exponentially growing delays, then rethrows the last error.
template <class F>
auto with_retries(const RetryPolicy& policy, F&& fn) -> decltype(fn()) {
  auto delay = policy.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TranslationError&) {
      if (attempt >= policy.max_retries) throw;
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * policy.multiplier));
    }
  }
}

inline constexpr const char* kTranslatorCredentialEnv = "MMLANG_TRANSLATOR_KEY";

}  // namespace mmlang
