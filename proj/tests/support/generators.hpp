#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "synlink/embedding_io.hpp"
#include "synlink/lexicon.hpp"

namespace synlink::testing {

inline WordEmbeddingTable make_table(const Table& words, std::size_t dim) {
  WordEmbeddingTable t("en", dim);
  for (const auto& [w, v] : words) t.insert(w, v);
  return t;
}

struct RandomLexicon {
  Table words;
  Lexicon lexicon{"en"};
};

// 200 synsets over a 300-word vocabulary with ~10% OOV members, space and
// underscore phrases, and repeated members.
inline RandomLexicon random_lexicon(std::uint64_t seed, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> val(0.0f, 1.0f);
  RandomLexicon out;
  for (int w = 0; w < 300; ++w) {
    std::vector<float> v(dim);
    for (auto& x : v) x = val(rng);
    out.words["w" + std::to_string(w)] = v;
  }
  auto word = [&] {
    return (rng() % 10 == 0) ? "oov" + std::to_string(rng() % 1000) : "w" + std::to_string(rng() % 300);
  };
  for (int s = 0; s < 200; ++s) {
    Synset syn{"s" + std::to_string(s), "en", Pos::Noun, {}, {}};
    const int m = 1 + static_cast<int>(rng() % 5);
    for (int j = 0; j < m; ++j) {
      switch (rng() % 6) {
        case 0: syn.members.push_back(word() + " " + word()); break;
        case 1: syn.members.push_back(word() + "_" + word() + "_" + word()); break;
        case 2: syn.members.push_back(syn.members.empty() ? word() : syn.members.front()); break;
        default: syn.members.push_back(word());
      }
    }
    out.lexicon.insert(std::move(syn));
  }
  return out;
}

}  // namespace synlink::testing
