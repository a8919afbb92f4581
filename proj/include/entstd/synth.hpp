#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "entstd/corpus.hpp"
#include "entstd/errors.hpp"
#include "entstd/hash.hpp"
#include "entstd/text.hpp"

namespace entstd {

enum class Perturbation : std::uint8_t {
  case_flip = 1 << 0,
  token_drop = 1 << 1,
  token_swap = 1 << 2,
  suffix_append = 1 << 3,
  char_typo = 1 << 4,
};

inline constexpr std::array kAllPerturbations = {
    Perturbation::case_flip, Perturbation::token_drop, Perturbation::token_swap,
    Perturbation::suffix_append, Perturbation::char_typo};

struct SynthesisConfig {
  std::size_t n_entities = 30;
  std::size_t mentions_per_entity = 10;
  std::uint8_t perturbations = 0x1F;  // bit set of Perturbation
  std::uint64_t seed = 7;

  bool enabled(Perturbation p) const noexcept {
    return (perturbations & static_cast<std::uint8_t>(p)) != 0;
  }

  void validate() const {
    if (n_entities == 0 || mentions_per_entity == 0)
      throw InvalidArgument("synthesis counts must be positive");
    if ((perturbations & 0x1F) == 0) throw InvalidArgument("no perturbation enabled");
  }
};

namespace detail {

inline constexpr std::array<std::string_view, 8> kVendors = {
    "IBM", "Oracle", "Apache", "Microsoft", "Red Hat", "SAP", "Cisco", "VMware"};
inline constexpr std::array<std::string_view, 10> kCategories = {
    "Server", "Database", "Gateway", "Studio", "Runtime",
    "Manager", "Broker", "Platform", "Client", "Suite"};
inline constexpr std::array<std::string_view, 14> kOnsets = {
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
inline constexpr std::array<std::string_view, 6> kVowels = {"a", "e", "i", "o", "u", "y"};
inline constexpr std::array<std::string_view, 8> kCodas = {"", "", "n", "r", "x", "s", "l", "m"};
inline constexpr std::array<std::string_view, 6> kSuffixes = {"Server", "Enterprise", "Edition",
                                                              "Cloud", "Pro", "LTS"};

template <class Pool>
std::string_view pick(std::mt19937_64& rng, const Pool& pool) {
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

inline std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline std::string product_word(std::mt19937_64& rng) {
  std::string w;
  const std::size_t syllables = 2 + below(rng, 2);
  for (std::size_t i = 0; i < syllables; ++i) {
    w += pick(rng, kOnsets);
    w += pick(rng, kVowels);
    if (i + 1 == syllables) w += pick(rng, kCodas);
  }
  w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// Caps-lock inversion: every letter changes case.
inline std::string flip_case(std::string token) {
  for (char& c : token) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isupper(u)) c = static_cast<char>(std::tolower(u));
    else if (std::islower(u)) c = static_cast<char>(std::toupper(u));
  }
  return token;
}

inline std::string typo(std::string token, std::mt19937_64& rng) {
  if (token.size() < 2) return token + "x";
  const std::size_t pos = below(rng, token.size());
  switch (below(rng, 4)) {
    case 0:  // deletion
      token.erase(pos, 1);
      break;
    case 1:  // duplication
      token.insert(pos, 1, token[pos]);
      break;
    case 2:  // substitution
      token[pos] = static_cast<char>('a' + below(rng, 26));
      break;
    default:  // transposition
      if (pos + 1 < token.size()) std::swap(token[pos], token[pos + 1]);
      else std::swap(token[pos - 1], token[pos]);
      break;
  }
  return token;
}

inline std::string perturb(const std::string& name, const SynthesisConfig& cfg,
                           std::mt19937_64& rng) {
  std::vector<Perturbation> ops;
  for (auto p : kAllPerturbations)
    if (cfg.enabled(p)) ops.push_back(p);
  auto tokens = split_words(name);
  // Mentions are typed with caps lock on; a further case_flip op may
  // restore single tokens.
  if (cfg.enabled(Perturbation::case_flip))
    for (auto& t : tokens) t = flip_case(t);
  const std::size_t n_ops = below(rng, 3);
  for (std::size_t k = 0; k < n_ops; ++k) {
    switch (ops[below(rng, ops.size())]) {
      case Perturbation::case_flip: {
        auto& t = tokens[below(rng, tokens.size())];
        t = flip_case(t);
        break;
      }
      case Perturbation::token_drop:
        if (tokens.size() > 1) tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(below(rng, tokens.size())));
        break;
      case Perturbation::token_swap:
        if (tokens.size() > 1) {
          const std::size_t i = below(rng, tokens.size() - 1);
          std::swap(tokens[i], tokens[i + 1]);
        }
        break;
      case Perturbation::suffix_append:
        if (below(rng, 2) == 0)
          tokens.push_back(std::to_string(1 + below(rng, 12)) + "." + std::to_string(below(rng, 10)));
        else
          tokens.emplace_back(pick(rng, kSuffixes));
        break;
      case Perturbation::char_typo: {
        auto& t = tokens[below(rng, tokens.size())];
        t = typo(t, rng);
        break;
      }
    }
  }
  return canonicalize(join(tokens));
}

}  // namespace detail

// Desk-scale corpus: generated entity names, each with mentions derived from
// its name by the enabled perturbations. Mentions are unique corpus-wide and
// never equal a canonical name; per entity the first n - floor(0.4 n) go to
// train, the rest to test. Pure function of the config.
inline Corpus synthesize_corpus(const SynthesisConfig& cfg) {
  cfg.validate();
  auto rng = make_rng(cfg.seed, rng_stream::kSynthesis);
  Corpus c;
  std::set<std::string> used;

  for (std::size_t i = 0; i < cfg.n_entities; ++i) {
    std::string name;
    do {
      std::vector<std::string> tokens;
      tokens.emplace_back(detail::pick(rng, detail::kVendors));
      tokens.push_back(detail::product_word(rng));
      tokens.emplace_back(detail::pick(rng, detail::kCategories));
      name = detail::join(tokens);
    } while (used.contains(name));
    used.insert(name);
    char id[16];
    std::snprintf(id, sizeof id, "E%04zu", i);
    c.entities.push_back({id, name, {}});
  }

  for (const auto& e : c.entities) {
    std::vector<std::string> mentions;
    std::size_t attempts = 0;
    while (mentions.size() < cfg.mentions_per_entity) {
      std::string m = detail::perturb(e.canonical_name, cfg, rng);
      if (++attempts > 1000 * cfg.mentions_per_entity)
        m = e.canonical_name + " v" + std::to_string(attempts);
      if (m.empty() || used.contains(m)) continue;
      used.insert(m);
      mentions.push_back(std::move(m));
    }
    const std::size_t n_test = (cfg.mentions_per_entity * 2) / 5;
    const std::size_t n_train = cfg.mentions_per_entity - n_test;
    for (std::size_t j = 0; j < mentions.size(); ++j)
      (j < n_train ? c.train : c.test).push_back({mentions[j], e.id});
  }
  return c;
}

// Mentions of entities that are not in the corpus: fresh names perturbed
// like ordinary mentions, none equal to any surface of the corpus.
inline std::vector<std::string> synthesize_negatives(const SynthesisConfig& cfg, const Corpus& corpus,
                                                     std::size_t count) {
  cfg.validate();
  auto rng = make_rng(cfg.seed, rng_stream::kSynthesis, 1);
  std::set<std::string> used;
  for (const auto& e : corpus.entities) {
    used.insert(e.canonical_name);
    used.insert(e.kb_mentions.begin(), e.kb_mentions.end());
  }
  for (const auto* split : {&corpus.train, &corpus.test})
    for (const auto& m : *split) used.insert(m.surface);

  std::vector<std::string> out;
  while (out.size() < count) {
    std::vector<std::string> tokens;
    tokens.emplace_back(detail::pick(rng, detail::kVendors));
    tokens.push_back(detail::product_word(rng));
    tokens.emplace_back(detail::pick(rng, detail::kCategories));
    const std::string name = detail::join(tokens);
    if (used.contains(name)) continue;
    used.insert(name);
    std::string m = detail::perturb(name, cfg, rng);
    if (m.empty() || used.contains(m)) continue;
    used.insert(m);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace entstd
