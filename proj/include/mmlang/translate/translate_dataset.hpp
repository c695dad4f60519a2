#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/translate/cache.hpp"
#include "mmlang/translate/translator.hpp"

namespace mmlang {

// Raised when some texts could not be translated after retries. No partial
// dataset is returned; failed_ids lists the affected examples.
class TranslationIncomplete : public TranslationError {
 public:
  explicit TranslationIncomplete(std::vector<std::string> ids)
      : TranslationError("translation incomplete: " + std::to_string(ids.size()) +
                         " example(s) untranslated"),
        failed_ids(std::move(ids)) {}
  std::vector<std::string> failed_ids;
};

struct TranslateOptions {
  int workers = 4;
  RetryPolicy retry;
};

// Translates the text of every example; id, split, label and image_ref are
// copied unchanged. Each distinct text is translated at most once and cache
// hits never reach the client.
inline DatasetVersion translate_dataset(const DatasetVersion& src, Language target,
                                        Translator& client, TranslationCache& cache,
                                        const TranslateOptions& opts = {}) {
  if (src.language != Language::en) throw ValidationError("source dataset must be English");
  if (target == src.language) throw ValidationError("source equals target");
  validate(src);
  const LanguagePair pair{src.language, target};
  const auto model = client.model_id();

  std::vector<std::string> todo;
  {
    std::set<std::string> seen;
    for (const auto& e : src.examples)
      if (seen.insert(e.text).second && !cache.lookup(model, pair, e.text)) todo.push_back(e.text);
  }

  std::mutex failed_mu;
  std::set<std::string> failed_texts;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const auto& text = todo[i];
      try {
        auto out = with_retries(opts.retry, [&] { return client.translate(text, pair); });
        cache.store(model, pair, text, out);
      } catch (const TranslationError&) {
        std::lock_guard lock(failed_mu);
        failed_texts.insert(text);
      }
    }
  };
  const auto n_workers =
      static_cast<std::size_t>(std::clamp<int>(opts.workers, 1, 64));
  if (!todo.empty()) {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, todo.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!failed_texts.empty()) {
    std::vector<std::string> ids;
    for (const auto& e : src.examples)
      if (failed_texts.count(e.text)) ids.push_back(e.id);
    throw TranslationIncomplete(std::move(ids));
  }

  DatasetVersion out;
  out.task = src.task;
  out.language = target;
  out.provenance = Provenance::machine_translated;
  out.examples.reserve(src.examples.size());
  for (const auto& e : src.examples) {
    auto t = cache.lookup(model, pair, e.text);
    if (!t) throw TranslationIncomplete({e.id});
    MultimodalExample x = e;
    x.text = std::move(*t);
    x.language = target;
    out.examples.push_back(std::move(x));
  }
  return out;
}

}  // namespace mmlang
