#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "entstd/errors.hpp"
#include "entstd/text.hpp"

namespace entstd {

struct Entity {
  std::string id;
  std::string canonical_name;
  std::vector<std::string> kb_mentions;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct MentionRecord {
  std::string surface;
  std::string entity_id;

  friend bool operator==(const MentionRecord&, const MentionRecord&) = default;
};

// Standard entities plus disjoint train/test query-mention splits.
struct Corpus {
  std::vector<Entity> entities;
  std::vector<MentionRecord> train;
  std::vector<MentionRecord> test;

  friend bool operator==(const Corpus&, const Corpus&) = default;

  // id -> position in `entities`. First occurrence wins on duplicates.
  std::unordered_map<std::string, std::size_t> entity_positions() const {
    std::unordered_map<std::string, std::size_t> pos;
    pos.reserve(entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) pos.emplace(entities[i].id, i);
    return pos;
  }
};

enum class FindingKind {
  empty_name,
  duplicate_id,
  empty_surface,
  dangling_entity,
  split_overlap,
  ambiguous_surface,
};

inline const char* to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::empty_name: return "empty canonical name";
    case FindingKind::duplicate_id: return "duplicate entity id";
    case FindingKind::empty_surface: return "empty mention surface";
    case FindingKind::dangling_entity: return "dangling entity id";
    case FindingKind::split_overlap: return "test surface overlaps train/KB mentions";
    case FindingKind::ambiguous_surface: return "surface maps to several entities within a split";
  }
  return "unknown";
}

struct Finding {
  FindingKind kind;
  std::vector<std::string> records;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const noexcept { return findings.empty(); }

  const Finding* find(FindingKind kind) const {
    for (const auto& f : findings)
      if (f.kind == kind) return &f;
    return nullptr;
  }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& f : findings) {
      os << entstd::to_string(f.kind) << ":";
      for (const auto& r : f.records) os << " [" << r << "]";
      os << "\n";
    }
    return os.str();
  }
};

namespace detail {

inline void add_finding(ValidationReport& report, FindingKind kind,
                        std::vector<std::string> records) {
  if (!records.empty()) report.findings.push_back({kind, std::move(records)});
}

inline void check_split(const std::vector<MentionRecord>& split, const char* name,
                        const std::set<std::string>& ids,
                        std::vector<std::string>& empty,
                        std::vector<std::string>& dangling,
                        std::vector<std::string>& ambiguous) {
  std::map<std::string, std::string> seen;
  std::set<std::string> reported;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& m = split[i];
    const std::string where = std::string(name) + "#" + std::to_string(i);
    const std::string surface = canonicalize(m.surface);
    if (surface.empty()) empty.push_back(where);
    if (!ids.contains(m.entity_id)) dangling.push_back(where + " -> " + m.entity_id);
    auto [it, inserted] = seen.emplace(surface, m.entity_id);
    if (!inserted && it->second != m.entity_id && reported.insert(surface).second)
      ambiguous.push_back(std::string(name) + ": " + surface);
  }
}

}  // namespace detail

// Lists every violated corpus invariant with the offending records.
// An empty report means the corpus is well formed.
inline ValidationReport validate_corpus(const Corpus& c) {
  ValidationReport report;
  std::set<std::string> ids;
  std::vector<std::string> empty_names, duplicate_ids;
  for (const auto& e : c.entities) {
    if (canonicalize(e.canonical_name).empty()) empty_names.push_back(e.id);
    if (!ids.insert(e.id).second) duplicate_ids.push_back(e.id);
  }
  detail::add_finding(report, FindingKind::empty_name, std::move(empty_names));
  detail::add_finding(report, FindingKind::duplicate_id, std::move(duplicate_ids));

  std::vector<std::string> empty, dangling, ambiguous;
  detail::check_split(c.train, "train", ids, empty, dangling, ambiguous);
  detail::check_split(c.test, "test", ids, empty, dangling, ambiguous);
  detail::add_finding(report, FindingKind::empty_surface, std::move(empty));
  detail::add_finding(report, FindingKind::dangling_entity, std::move(dangling));
  detail::add_finding(report, FindingKind::ambiguous_surface, std::move(ambiguous));

  std::set<std::string> known;
  for (const auto& m : c.train) known.insert(canonicalize(m.surface));
  for (const auto& e : c.entities)
    for (const auto& s : e.kb_mentions) known.insert(canonicalize(s));
  std::vector<std::string> overlap;
  std::set<std::string> reported;
  for (const auto& m : c.test) {
    const std::string s = canonicalize(m.surface);
    if (known.contains(s) && reported.insert(s).second) overlap.push_back(s);
  }
  detail::add_finding(report, FindingKind::split_overlap, std::move(overlap));
  return report;
}

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

inline std::string require_string(const nlohmann::json& rec, const char* key,
                                  const std::string& file, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string())
    throw ParseError(file, line, std::string("missing string field \"") + key + "\"");
  return canonicalize(it->get<std::string>());
}

template <class F>
void for_each_record(const std::filesystem::path& path, F&& on_record) {
  auto in = open_input(path);
  const std::string file = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (canonicalize(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(file, line_no, e.what());
    }
    if (!rec.is_object()) throw ParseError(file, line_no, "record is not an object");
    on_record(rec, file, line_no);
  }
}

}  // namespace detail

inline std::vector<Entity> read_kb(const std::filesystem::path& path) {
  std::vector<Entity> entities;
  detail::for_each_record(path, [&](const nlohmann::json& rec, const std::string& file,
                                    std::size_t line) {
    Entity e;
    e.id = detail::require_string(rec, "id", file, line);
    e.canonical_name = detail::require_string(rec, "name", file, line);
    if (e.canonical_name.empty()) throw ParseError(file, line, "empty entity name");
    if (auto it = rec.find("mentions"); it != rec.end()) {
      if (!it->is_array()) throw ParseError(file, line, "\"mentions\" is not an array");
      for (const auto& m : *it) {
        if (!m.is_string()) throw ParseError(file, line, "non-string mention");
        std::string s = canonicalize(m.get<std::string>());
        if (!s.empty()) e.kb_mentions.push_back(std::move(s));
      }
    }
    entities.push_back(std::move(e));
  });
  return entities;
}

inline std::vector<MentionRecord> read_split(const std::filesystem::path& path) {
  std::vector<MentionRecord> split;
  detail::for_each_record(path, [&](const nlohmann::json& rec, const std::string& file,
                                    std::size_t line) {
    MentionRecord m;
    m.surface = detail::require_string(rec, "surface", file, line);
    m.entity_id = detail::require_string(rec, "id", file, line);
    if (m.surface.empty()) throw ParseError(file, line, "empty surface");
    split.push_back(std::move(m));
  });
  return split;
}

// Throws CorpusError naming the first violated invariant class.
inline void require_valid(const Corpus& c) {
  const auto report = validate_corpus(c);
  if (report.ok()) return;
  const auto& first = report.findings.front();
  std::string what = to_string(first.kind);
  what += ":";
  for (const auto& r : first.records) what += " [" + r + "]";
  throw CorpusError(what, first.records);
}

// Loads the three line-delimited files; mention order is preserved.
inline Corpus load_corpus(const std::filesystem::path& kb_path,
                          const std::filesystem::path& train_path,
                          const std::filesystem::path& test_path) {
  Corpus c;
  c.entities = read_kb(kb_path);
  c.train = read_split(train_path);
  c.test = read_split(test_path);
  require_valid(c);
  return c;
}

inline void write_kb(const std::vector<Entity>& entities, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& e : entities) {
    nlohmann::json rec = {{"id", e.id}, {"name", e.canonical_name}, {"mentions", e.kb_mentions}};
    out << rec.dump() << '\n';
  }
}

inline void write_split(const std::vector<MentionRecord>& split,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& m : split) {
    nlohmann::json rec = {{"surface", m.surface}, {"id", m.entity_id}};
    out << rec.dump() << '\n';
  }
}

inline void save_corpus(const Corpus& c, const std::filesystem::path& kb_path,
                        const std::filesystem::path& train_path,
                        const std::filesystem::path& test_path) {
  write_kb(c.entities, kb_path);
  write_split(c.train, train_path);
  write_split(c.test, test_path);
}

// Conventional file names inside a dataset directory.
struct CorpusPaths {
  std::filesystem::path kb, train, test;

  static CorpusPaths in_directory(const std::filesystem::path& dir) {
    return {dir / "kb.jsonl", dir / "train.jsonl", dir / "test.jsonl"};
  }
};

}  // namespace entstd
