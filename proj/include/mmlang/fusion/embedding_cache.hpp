#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "mmlang/core/dataset.hpp"
#include "mmlang/core/embedding.hpp"
#include "mmlang/core/error.hpp"
#include "mmlang/train/mlp_trainer.hpp"

namespace mmlang {

// Precomputed embeddings for one (model, dataset version) pair, keyed by
// example id.
//
// File layout: "MMEMB1\n", one JSON header line, then per record a u32 id
// length, the id bytes, and `dim` little-endian float32 values.
struct EmbeddingTable {
  std::string model_checksum;
  std::string dataset_key;
  Modality modality = Modality::text;
  int dim = 0;
  std::map<std::string, nn::Vector> rows;

  void insert(const std::string& id, nn::Vector v) {
    if (dim == 0) dim = static_cast<int>(v.size());
    if (v.size() != dim) throw ValidationError("embedding dimension mismatch for '" + id + "'");
    rows[id] = std::move(v);
  }

  const nn::Vector& at(const std::string& id) const {
    auto it = rows.find(id);
    if (it == rows.end()) throw ValidationError("no embedding for example '" + id + "'");
    return it->second;
  }

  // Features and labels for a split, in example order.
  LabeledFeatures features(std::span<const MultimodalExample> split) const {
    LabeledFeatures f;
    f.x.resize(dim, static_cast<Eigen::Index>(split.size()));
    for (std::size_t i = 0; i < split.size(); ++i) {
      f.x.col(static_cast<Eigen::Index>(i)) = at(split[i].id);
      f.y.push_back(split[i].label);
    }
    return f;
  }

  static std::string file_name(const std::string& model_checksum, const std::string& dataset_key) {
    return model_checksum + "__" + dataset_key + ".emb";
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write " + path.string());
      nlohmann::json header = {{"model_checksum", model_checksum},
                               {"dataset", dataset_key},
                               {"modality", std::string(to_string(modality))},
                               {"dim", dim},
                               {"count", rows.size()}};
      out << "MMEMB1\n" << header.dump() << "\n";
      for (const auto& [id, v] : rows) {
        const auto len = static_cast<std::uint32_t>(id.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof len);
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(static_cast<std::size_t>(v.size()) * sizeof(float)));
      }
      if (!out) throw Error("cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path);
  }

  static EmbeddingTable load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string magic, header_line;
    std::getline(in, magic);
    std::getline(in, header_line);
    if (magic != "MMEMB1") throw ParseError(path.string() + ": not an embedding file");
    EmbeddingTable t;
    std::size_t count = 0;
    try {
      const auto h = nlohmann::json::parse(header_line);
      t.model_checksum = h.at("model_checksum").get<std::string>();
      t.dataset_key = h.at("dataset").get<std::string>();
      const auto m = h.at("modality").get<std::string>();
      t.modality = m == "text" ? Modality::text : m == "image" ? Modality::image : Modality::fused;
      t.dim = h.at("dim").get<int>();
      count = h.at("count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": bad header: " + e.what());
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t len = 0;
      in.read(reinterpret_cast<char*>(&len), sizeof len);
      std::string id(len, '\0');
      in.read(id.data(), len);
      nn::Vector v(t.dim);
      in.read(reinterpret_cast<char*>(v.data()),
              static_cast<std::streamsize>(static_cast<std::size_t>(t.dim) * sizeof(float)));
      if (!in) throw ParseError(path.string() + ": truncated embedding file");
      t.rows.emplace(std::move(id), std::move(v));
    }
    return t;
  }
};

// Identifies a dataset version for cache keys: task, language, provenance and
// a hash of the manifest contents.
inline std::string dataset_key(const DatasetVersion& dv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : dv.examples) {
    h = strings::fnv1a(e.id, h);
    h = strings::fnv1a(e.text, h);
    h = strings::fnv1a(e.image_ref, h);
  }
  return dv.task.name + "-" + std::string(to_string(dv.language)) + "-" +
         std::string(to_string(dv.provenance)) + "-" + strings::hex64(h).substr(0, 12);
}

}  // namespace mmlang
