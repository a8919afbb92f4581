#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entstd/binary_io.hpp"
#include "entstd/checkpoint.hpp"
#include "entstd/corpus.hpp"
#include "entstd/features.hpp"
#include "entstd/index.hpp"
#include "entstd/text.hpp"

namespace entstd {

struct TfidfConfig {
  NgramRange chars{2, 4};
  bool words = true;
  // ASCII lowercasing before term extraction.
  bool lowercase = true;

  friend bool operator==(const TfidfConfig&, const TfidfConfig&) = default;
};

// Terms are tagged so a one-word token and a character n-gram with the same
// spelling stay distinct columns.
inline constexpr char kWordTag = 'w';
inline constexpr char kCharTag = 'c';

inline std::vector<std::string> tfidf_terms(std::string_view text, const TfidfConfig& cfg) {
  std::string t = canonicalize(text);
  if (cfg.lowercase)
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::vector<std::string> terms;
  if (t.empty()) return terms;
  if (cfg.words)
    for (auto& w : split_words(t)) terms.push_back(kWordTag + w);
  for (auto& g : char_ngrams(t, cfg.chars)) terms.push_back(kCharTag + g);
  return terms;
}

struct TfidfModel {
  TfidfConfig config;
  std::size_t n_documents = 0;
  std::vector<std::string> terms;  // column order, sorted
  std::vector<double> idf;
  std::unordered_map<std::string, std::uint32_t> column;

  friend bool operator==(const TfidfModel& a, const TfidfModel& b) {
    return a.config == b.config && a.n_documents == b.n_documents && a.terms == b.terms &&
           a.idf == b.idf;
  }

  std::size_t dim() const noexcept { return terms.size(); }

  void rebuild_columns() {
    column.clear();
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (!column.emplace(terms[i], static_cast<std::uint32_t>(i)).second)
        throw InvalidArgument("duplicate TF-IDF term");
  }
};

// idf(t) = ln((1 + N) / (1 + df(t))) + 1, one document per surface.
inline TfidfModel fit_tfidf(std::span<const std::string> documents, const TfidfConfig& cfg = {}) {
  if (documents.empty()) throw InvalidArgument("cannot fit TF-IDF on an empty corpus");
  cfg.chars.validate();
  std::map<std::string, std::size_t> df;
  for (const auto& d : documents) {
    const auto terms = tfidf_terms(d, cfg);
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) ++df[t];
  }
  TfidfModel m;
  m.config = cfg;
  m.n_documents = documents.size();
  const double n = static_cast<double>(documents.size());
  for (const auto& [term, count] : df) {
    m.terms.push_back(term);
    m.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  m.rebuild_columns();
  return m;
}

// Canonical names, KB mentions and train surfaces.
inline std::vector<std::string> tfidf_documents(const Corpus& corpus) {
  std::vector<std::string> docs;
  for (const auto& e : corpus.entities) {
    docs.push_back(e.canonical_name);
    docs.insert(docs.end(), e.kb_mentions.begin(), e.kb_mentions.end());
  }
  for (const auto& m : corpus.train) docs.push_back(m.surface);
  return docs;
}

struct TfidfEncoding {
  SparseVector values;  // unit norm unless zero
  bool zero = false;    // no known term in the text
};

inline TfidfEncoding tfidf_encode(const TfidfModel& model, std::string_view text) {
  std::map<std::uint32_t, double> tf;
  for (const auto& t : tfidf_terms(text, model.config))
    if (auto it = model.column.find(t); it != model.column.end()) tf[it->second] += 1.0;
  TfidfEncoding enc;
  double norm = 0.0;
  for (auto& [col, v] : tf) {
    v *= model.idf[col];
    norm += v * v;
  }
  if (norm == 0.0) {
    enc.zero = true;
    return enc;
  }
  norm = std::sqrt(norm);
  for (const auto& [col, v] : tf) enc.values.push_back({col, v / norm});
  return enc;
}

// Dense adapter for the shared index and evaluation harness.
class TfidfEncoder {
 public:
  static constexpr ZeroQuery zero_query = ZeroQuery::rank_last;

  explicit TfidfEncoder(const TfidfModel& model) : model_(&model) {}

  std::vector<Vector> encode_batch(std::span<const std::string> texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      Vector v(model_->dim(), 0.0);
      for (const auto& [col, value] : tfidf_encode(*model_, t).values) v[col] = value;
      out.push_back(std::move(v));
    }
    return out;
  }
  std::size_t dim() const noexcept { return model_->dim(); }

 private:
  const TfidfModel* model_;
};

// Layout after the container header and type tag: u32 ngram lo, u32 ngram hi,
// u8 words, u8 lowercase, u64 document count, u64 term count, then per term
// the length-prefixed term and its f64 idf.
inline void save_tfidf(const TfidfModel& model, const std::filesystem::path& path) {
  binary::Writer w;
  binary::model_header(w, ModelKind::tfidf);
  w.u32(static_cast<std::uint32_t>(model.config.chars.lo));
  w.u32(static_cast<std::uint32_t>(model.config.chars.hi));
  w.u8(model.config.words ? 1 : 0);
  w.u8(model.config.lowercase ? 1 : 0);
  w.u64(model.n_documents);
  w.u64(model.terms.size());
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    w.str(model.terms[i]);
    w.f64(model.idf[i]);
  }
  w.seal();
  w.save(path);
}

inline TfidfModel load_tfidf(const std::filesystem::path& path) {
  auto r = binary::open_model(path, ModelKind::tfidf);
  TfidfModel m;
  m.config.chars.lo = static_cast<int>(r.u32());
  m.config.chars.hi = static_cast<int>(r.u32());
  m.config.words = r.u8() != 0;
  m.config.lowercase = r.u8() != 0;
  m.n_documents = r.u64();
  const std::uint64_t n_terms = r.u64();
  try {
    m.config.chars.validate();
    for (std::uint64_t i = 0; i < n_terms; ++i) {
      m.terms.push_back(r.str());
      const double idf = r.f64();
      if (!std::isfinite(idf) || idf < 0.0) throw InvalidArgument("invalid idf weight");
      m.idf.push_back(idf);
    }
    if (!r.at_end()) throw InvalidArgument("trailing bytes after term table");
    m.rebuild_columns();
  } catch (const InvalidArgument& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace entstd
