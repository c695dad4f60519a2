#include <gtest/gtest.h>

#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mmlang/translate/agreement.hpp"
#include "mmlang/translate/http_translator.hpp"
#include "mmlang/translate/translate_dataset.hpp"
#include "test_util.hpp"

using namespace mmlang;

namespace {

TranslateOptions fast_retries(int workers = 4) {
  TranslateOptions o;
  o.workers = workers;
  o.retry.initial_backoff = std::chrono::milliseconds(1);
  return o;
}

// Fails a text's first `transient` attempts; texts containing "poison"
// always fail.
class FlakyTranslator final : public Translator {
 public:
  explicit FlakyTranslator(int transient) : transient_(transient) {}
  std::string model_id() const override { return "flaky"; }
  std::string translate(std::string_view text, LanguagePair pair) override {
    std::lock_guard lock(mu_);
    ++calls;
    if (text.find("poison") != std::string_view::npos) throw TranslationError("poisoned");
    if (attempts_[std::string(text)]++ < transient_) throw TranslationError("busy");
    return "<" + std::string(to_string(pair.target)) + ">" + std::string(text);
  }
  int calls = 0;

 private:
  int transient_;
  std::mutex mu_;
  std::map<std::string, int> attempts_;
};

DatasetVersion english(std::size_t n = 12) {
  return mmlang::testing::make_dataset(tasks::emotion(), {n / 2, n / 4, n - n / 2 - n / 4});
}

}  // namespace

TEST(TranslateDataset, PreservesEverythingButText) {
  const auto src = english();
  TaggingTranslator stub;
  TranslationCache cache;
  const auto es = translate_dataset(src, Language::es, stub, cache, fast_retries());
  ASSERT_EQ(es.examples.size(), src.examples.size());
  EXPECT_EQ(es.language, Language::es);
  EXPECT_EQ(es.provenance, Provenance::machine_translated);
  for (std::size_t i = 0; i < src.examples.size(); ++i) {
    const auto& a = src.examples[i];
    const auto& b = es.examples[i];
    EXPECT_EQ(b.id, a.id);
    EXPECT_EQ(b.label, a.label);
    EXPECT_EQ(b.split, a.split);
    EXPECT_EQ(b.image_ref, a.image_ref);
    EXPECT_EQ(b.text, "[es] " + a.text);
  }
  const std::vector<DatasetVersion> both{src, es};
  EXPECT_TRUE(check_parallel(both).empty());
}

TEST(TranslateDataset, AllFiveTargetsStayParallel) {
  const auto src = english(40);
  TaggingTranslator stub;
  TranslationCache cache;
  std::vector<DatasetVersion> versions{src};
  for (auto lang : kNonEnglish)
    versions.push_back(translate_dataset(src, lang, stub, cache, fast_retries()));
  EXPECT_TRUE(check_parallel(versions).empty());
  versions[3].examples[5].label = (versions[3].examples[5].label + 1) % 4;
  EXPECT_EQ(check_parallel(versions), std::vector<std::string>{versions[3].examples[5].id});
}

TEST(TranslateDataset, WarmCacheMakesNoCalls) {
  mmlang::testing::TempDir dir;
  const auto src = english(20);
  TaggingTranslator stub;
  {
    TranslationCache cache(dir / "cache.tsv");
    translate_dataset(src, Language::fr, stub, cache, fast_retries());
  }
  EXPECT_EQ(stub.calls(), 20);
  TaggingTranslator second;
  TranslationCache reloaded(dir / "cache.tsv");
  EXPECT_EQ(reloaded.size(), 20u);
  const auto fr = translate_dataset(src, Language::fr, second, reloaded, fast_retries());
  EXPECT_EQ(second.calls(), 0);
  EXPECT_EQ(fr.examples[3].text, "[fr] " + src.examples[3].text);
}

TEST(TranslateDataset, DuplicateTextsTranslatedOnce) {
  auto src = english(8);
  for (auto& e : src.examples) e.text = "same words";
  TaggingTranslator stub;
  TranslationCache cache;
  translate_dataset(src, Language::pt, stub, cache, fast_retries());
  EXPECT_EQ(stub.calls(), 1);
}

TEST(TranslateDataset, RejectsSameLanguageAndNonEnglishSource) {
  const auto src = english();
  TaggingTranslator stub;
  TranslationCache cache;
  try {
    translate_dataset(src, Language::en, stub, cache);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "source equals target");
  }
  auto zh = src;
  zh.language = Language::zh;
  for (auto& e : zh.examples) e.language = Language::zh;
  EXPECT_THROW(translate_dataset(zh, Language::hi, stub, cache), ValidationError);
}

TEST(TranslateDataset, RetriesTransientFailures) {
  const auto src = english(10);
  FlakyTranslator flaky(2);
  TranslationCache cache;
  const auto hi = translate_dataset(src, Language::hi, flaky, cache, fast_retries());
  EXPECT_EQ(flaky.calls, 30);
  EXPECT_EQ(hi.examples[0].text, "<hi>" + src.examples[0].text);
}

TEST(TranslateDataset, PermanentFailureNamesExamplesAndKeepsSuccessesCached) {
  auto src = english(10);
  src.examples[2].text = "poison one";
  src.examples[7].text = "poison two";
  FlakyTranslator flaky(0);
  TranslationCache cache;
  try {
    translate_dataset(src, Language::zh, flaky, cache, fast_retries(2));
    FAIL() << "expected TranslationIncomplete";
  } catch (const TranslationIncomplete& e) {
    EXPECT_EQ(e.failed_ids, (std::vector<std::string>{src.examples[2].id, src.examples[7].id}));
  }
  // 8 good texts once each, 2 poisoned texts 1 + 3 retries each.
  EXPECT_EQ(flaky.calls, 8 + 2 * 4);
  EXPECT_EQ(cache.size(), 8u);
}

TEST(TranslationCache, KeyedByModelPairAndText) {
  TranslationCache c;
  c.store("m1", {Language::en, Language::es}, "hi\tthere\n", "hola");
  EXPECT_EQ(c.lookup("m1", {Language::en, Language::es}, "hi\tthere\n"), "hola");
  EXPECT_FALSE(c.lookup("m2", {Language::en, Language::es}, "hi\tthere\n"));
  EXPECT_FALSE(c.lookup("m1", {Language::en, Language::fr}, "hi\tthere\n"));
  EXPECT_FALSE(c.lookup("m1", {Language::en, Language::es}, "hi"));
}

TEST(TranslationCache, PersistsEscapedFieldsAndRejectsCorruptLines) {
  mmlang::testing::TempDir dir;
  {
    TranslationCache c(dir / "c.tsv");
    c.store("m", {Language::en, Language::zh}, "a\tb\\c\nd", "地震\t!");
  }
  TranslationCache again(dir / "c.tsv");
  EXPECT_EQ(again.lookup("m", {Language::en, Language::zh}, "a\tb\\c\nd"), "地震\t!");
  {
    std::ofstream out(dir / "c.tsv", std::ios::app);
    out << "garbage\n";
  }
  EXPECT_THROW(TranslationCache(dir / "c.tsv"), ParseError);
}

TEST(HttpTranslator, SpeaksJsonProtocolAndReportsErrors) {
  httplib::Server server;
  nlohmann::json last;
  std::mutex mu;
  server.Post("/translate", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    {
      std::lock_guard lock(mu);
      last = body;
    }
    const auto q = body.at("q").get<std::string>();
    if (q == "boom") {
      res.status = 503;
      return;
    }
    if (q == "bad") {
      res.set_content("{\"nope\":1}", "application/json");
      return;
    }
    nlohmann::json out = {{"translatedText", body.at("target").get<std::string>() + ":" + q}};
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpTranslator http("http://127.0.0.1:" + std::to_string(port), "/translate", "opus", "k3y");
  EXPECT_EQ(http.translate("flood", {Language::en, Language::pt}), "pt:flood");
  {
    std::lock_guard lock(mu);
    EXPECT_EQ(last.at("source"), "en");
    EXPECT_EQ(last.at("api_key"), "k3y");
    EXPECT_EQ(last.at("format"), "text");
  }
  EXPECT_THROW(http.translate("boom", {Language::en, Language::pt}), TranslationError);
  EXPECT_THROW(http.translate("bad", {Language::en, Language::pt}), TranslationError);
  EXPECT_EQ(http.model_id(), "opus");

  const auto src = english(6);
  TranslationCache cache;
  const auto pt = translate_dataset(src, Language::pt, http, cache, fast_retries(3));
  EXPECT_EQ(pt.examples[1].text, "pt:" + src.examples[1].text);

  server.stop();
  t.join();
  HttpTranslator closed("http://127.0.0.1:" + std::to_string(port));
  EXPECT_THROW(closed.translate("x", {Language::en, Language::es}), TranslationError);
}

TEST(Kappa, IdenticalHandExampleAndSymmetry) {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(cohen_kappa(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cohen_kappa(a, b), 0.5);
  EXPECT_DOUBLE_EQ(cohen_kappa(b, a), 0.5);
  const std::vector<int> constant{3, 3, 3};
  EXPECT_DOUBLE_EQ(cohen_kappa(constant, constant), 1.0);
  EXPECT_THROW(cohen_kappa(a, std::vector<int>{1}), ValidationError);
  EXPECT_THROW(cohen_kappa(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST(Kappa, IndependentRatersNearZero) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> likert(1, 5);
  std::vector<int> a(100000), b(100000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = likert(rng);
    b[i] = likert(rng);
  }
  EXPECT_LT(std::abs(cohen_kappa(a, b)), 0.05);
}

TEST(Likert, HandMeansAndAttentionFiltering) {
  std::vector<AnnotationRecord> recs{{"x1", Language::es, "ann1", 4, 5, true},
                                     {"x1", Language::es, "ann2", 4, 4, true},
                                     {"x1", Language::es, "ann3", 5, 5, true},
                                     {"x2", Language::es, "bad", 1, 1, false},
                                     {"x3", Language::es, "bad", 1, 1, true}};
  const auto s = aggregate_likert(recs);
  EXPECT_NEAR(s.at(Language::es).mean_fluency, 13.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.at(Language::es).mean_meaning, 14.0 / 3.0, 1e-12);
  EXPECT_EQ(s.at(Language::es).n_records, 3u);

  recs.push_back({"y1", Language::hi, "bad", 4, 4, true});
  EXPECT_THROW(aggregate_likert(recs), ValidationError);
  recs.back() = {"y1", Language::hi, "ok", 6, 4, true};
  EXPECT_THROW(aggregate_likert(recs), ValidationError);
}

TEST(Kappa, MeanPairwiseOverRaterSlots) {
  // Slots ordered by annotator id: a < b < c.
  const std::vector<int> sa{1, 2, 3, 4, 5, 5}, sb{1, 2, 3, 4, 5, 4}, sc{2, 2, 3, 3, 5, 5};
  std::vector<AnnotationRecord> recs;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const auto id = "ex" + std::to_string(i);
    recs.push_back({id, Language::fr, "c", sc[i], 3, true});
    recs.push_back({id, Language::fr, "a", sa[i], 3, true});
    recs.push_back({id, Language::fr, "b", sb[i], 3, true});
  }
  recs.push_back({"partial", Language::fr, "a", 1, 1, true});
  const auto s = mean_pairwise_kappa(recs, Language::fr, LikertQuestion::fluency);
  EXPECT_EQ(s.n_items, 6u);
  ASSERT_EQ(s.pairwise.size(), 3u);
  EXPECT_DOUBLE_EQ(s.pairwise[0], cohen_kappa(sa, sb));
  EXPECT_DOUBLE_EQ(s.pairwise[1], cohen_kappa(sa, sc));
  EXPECT_DOUBLE_EQ(s.pairwise[2], cohen_kappa(sb, sc));
  EXPECT_NEAR(s.mean_pairwise_kappa, (s.pairwise[0] + s.pairwise[1] + s.pairwise[2]) / 3, 1e-12);
  EXPECT_THROW(mean_pairwise_kappa(recs, Language::zh, LikertQuestion::fluency), ValidationError);
}
