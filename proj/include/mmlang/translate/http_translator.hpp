#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "mmlang/translate/translator.hpp"

namespace mmlang {

// Client for a LibreTranslate-style service:
//   POST <path> {"q", "source", "target", "format": "text", "api_key"?}
//   -> {"translatedText": "..."}
// The credential is read from MMLANG_TRANSLATOR_KEY when not given.
class HttpTranslator final : public Translator {
 public:
  HttpTranslator(std::string base_url, std::string path = "/translate",
                 std::string model = "marian-opus-mt", std::string api_key = {})
      : base_url_(std::move(base_url)), path_(std::move(path)), model_(std::move(model)),
        api_key_(std::move(api_key)) {
    if (api_key_.empty())
      if (const char* k = std::getenv(kTranslatorCredentialEnv)) api_key_ = k;
  }

  std::string model_id() const override { return model_; }

  std::string translate(std::string_view text, LanguagePair pair) override {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    nlohmann::json body = {{"q", std::string(text)},
                           {"source", std::string(to_string(pair.source))},
                           {"target", std::string(to_string(pair.target))},
                           {"format", "text"}};
    if (!api_key_.empty()) body["api_key"] = api_key_;
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) throw TranslationError("translation request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw TranslationError("translation service returned HTTP " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body).at("translatedText").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TranslationError(std::string("malformed translation response: ") + e.what());
    }
  }

 private:
  std::string base_url_;
  std::string path_;
  std::string model_;
  std::string api_key_;
};

}  // namespace mmlang
