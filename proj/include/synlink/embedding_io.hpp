#pragma once

// Word embedding tables and the word2vec text format.
//
// File layout (UTF-8, '\n' line ends, single spaces):
//   <vocab_count> <dimension>
//   <word> <c1> ... <c_dimension>
//
// Tables are immutable once built and safe for concurrent reads.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "synlink/error.hpp"

namespace synlink {

enum class CasePolicy { exact, fold_to_lower };

// Folds ASCII letters only; other code points (including Devanagari) pass
// through untouched.
inline std::string fold_case(std::string_view word) {
  std::string out(word);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

class WordEmbeddingTable {
 public:
  WordEmbeddingTable(std::string language_tag, std::size_t dimension,
                     CasePolicy case_policy = CasePolicy::exact)
      : language_tag_(std::move(language_tag)), dimension_(dimension), case_policy_(case_policy) {
    if (dimension_ == 0) throw InvalidArgument("embedding dimension must be positive");
  }

  // Adds a word. Returns false (and stores nothing) when the word is already
  // present under the table's case policy: the first occurrence wins.
  bool insert(std::string word, std::span<const float> values) {
    if (values.size() != dimension_) {
      throw DimensionMismatch("vector for '" + word + "' has " + std::to_string(values.size()) +
                              " components, table dimension is " + std::to_string(dimension_));
    }
    const auto& primary = case_policy_ == CasePolicy::exact ? exact_ : folded_;
    const std::string key = case_policy_ == CasePolicy::exact ? word : fold_case(word);
    if (primary.contains(key)) return false;

    const std::size_t index = words_.size();
    exact_.try_emplace(word, index);
    folded_.try_emplace(fold_case(word), index);
    values_.insert(values_.end(), values.begin(), values.end());
    words_.push_back(std::move(word));
    return true;
  }

  // Lookup under the table's own case policy.
  std::optional<std::span<const float>> lookup(std::string_view word) const {
    return lookup(word, case_policy_);
  }

  std::optional<std::span<const float>> lookup(std::string_view word, CasePolicy policy) const {
    const auto& index = policy == CasePolicy::exact ? exact_ : folded_;
    const auto it = policy == CasePolicy::exact ? index.find(std::string(word))
                                                : index.find(fold_case(word));
    if (it == index.end()) return std::nullopt;
    return vector(it->second);
  }

  std::span<const float> vector(std::size_t index) const {
    return {values_.data() + index * dimension_, dimension_};
  }

  const std::string& word(std::size_t index) const { return words_[index]; }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& language_tag() const { return language_tag_; }
  CasePolicy case_policy() const { return case_policy_; }

 private:
  std::string language_tag_;
  std::size_t dimension_;
  CasePolicy case_policy_;
  std::vector<std::string> words_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::size_t> folded_;
};

struct EmbeddingLoadReport {
  std::size_t declared_vocab = 0;
  std::size_t data_lines = 0;
  std::size_t loaded = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
};

// Vectors with a zero norm come back unchanged with zero_norm set.
template <class Vec>
struct Normalized {
  Vec vector;
  bool zero_norm = false;
};

template <class Vec>
Normalized<Vec> l2_normalize(const Vec& v) {
  double sq = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()); ++i) {
    sq += static_cast<double>(v[i]) * static_cast<double>(v[i]);
  }
  Normalized<Vec> out{v, false};
  if (sq == 0.0) {
    out.zero_norm = true;
    return out;
  }
  const double norm = std::sqrt(sq);
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()); ++i) {
    using Scalar = std::remove_cvref_t<decltype(out.vector[i])>;
    out.vector[i] = static_cast<Scalar>(static_cast<double>(v[i]) / norm);
  }
  return out;
}

namespace detail {

inline std::string_view trim_line_end(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
    line.remove_suffix(1);
  }
  return line;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Splits "word c1 ... cd" into the word and exactly `dimension` floats.
inline bool parse_vector_line(std::string_view line, std::size_t dimension, std::string& word,
                              std::vector<float>& values) {
  const auto space = line.find(' ');
  if (space == std::string_view::npos || space == 0) return false;
  word.assign(line.substr(0, space));
  values.clear();
  std::string_view rest = line.substr(space + 1);
  while (!rest.empty()) {
    const auto next = rest.find(' ');
    const auto token = rest.substr(0, next);
    float value = 0.0f;
    if (!parse_number(token, value)) return false;
    values.push_back(value);
    if (values.size() > dimension) return false;
    if (next == std::string_view::npos) break;
    rest.remove_prefix(next + 1);
  }
  return values.size() == dimension;
}

template <class T>
void append_number(std::string& out, T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace detail

// Lines with the wrong component count or unparsable numbers are skipped and
// counted. Fails when nothing loads or when more than 10% of lines are bad.
inline WordEmbeddingTable read_word2vec_text(std::istream& in, std::string language_tag,
                                             CasePolicy case_policy = CasePolicy::exact,
                                             EmbeddingLoadReport* report = nullptr) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embedding file is empty");
  const auto header = detail::trim_line_end(line);
  const auto space = header.find(' ');
  std::size_t declared = 0;
  std::size_t dimension = 0;
  if (space == std::string_view::npos || !detail::parse_number(header.substr(0, space), declared) ||
      !detail::parse_number(header.substr(space + 1), dimension) || dimension == 0) {
    throw FormatError("unparsable embedding header '" + std::string(header) +
                      "', expected '<vocab_count> <dimension>'");
  }

  WordEmbeddingTable table(std::move(language_tag), dimension, case_policy);
  EmbeddingLoadReport stats;
  stats.declared_vocab = declared;
  std::string word;
  std::vector<float> values;
  values.reserve(dimension + 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim_line_end(line);
    if (body.empty()) continue;
    ++stats.data_lines;
    if (!detail::parse_vector_line(body, dimension, word, values)) {
      ++stats.malformed;
      spdlog::debug("embedding line {} malformed, skipped", line_no);
      continue;
    }
    if (!table.insert(word, values)) {
      ++stats.duplicates;
      spdlog::warn("duplicate word '{}' on line {}; keeping first occurrence", word, line_no);
      continue;
    }
    ++stats.loaded;
  }

  if (stats.loaded == 0) throw FormatError("no valid entries in embedding file");
  if (stats.malformed * 10 > stats.data_lines) {
    throw FormatError("dimension mismatch on " + std::to_string(stats.malformed) + " of " +
                      std::to_string(stats.data_lines) +
                      " lines (>10%); not a word2vec text file of dimension " +
                      std::to_string(dimension));
  }
  if (stats.malformed > 0) {
    spdlog::warn("skipped {} malformed embedding lines", stats.malformed);
  }
  if (declared != stats.data_lines) {
    spdlog::info("header declares {} words, file has {} lines", declared, stats.data_lines);
  }
  if (report != nullptr) *report = stats;
  return table;
}

inline WordEmbeddingTable load_word2vec_text(const std::filesystem::path& path,
                                             std::string language_tag,
                                             CasePolicy case_policy = CasePolicy::exact,
                                             EmbeddingLoadReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embedding file " + path.string());
  return read_word2vec_text(in, std::move(language_tag), case_policy, report);
}

// Writes rows of (label, vector) in word2vec text format using the shortest
// representation that parses back to the identical value.
template <class Rows>
void write_word2vec_rows(std::ostream& out, std::size_t dimension, const Rows& rows) {
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& row : rows) ++count;
  std::string buf;
  buf.reserve(64 + dimension * 16);
  detail::append_number(buf, count);
  buf.push_back(' ');
  detail::append_number(buf, dimension);
  buf.push_back('\n');
  out << buf;
  for (const auto& [label, vec] : rows) {
    if (static_cast<std::size_t>(vec.size()) != dimension) {
      throw DimensionMismatch("row '" + std::string(label) + "' has wrong dimension");
    }
    buf.assign(label);
    for (std::size_t i = 0; i < dimension; ++i) {
      buf.push_back(' ');
      detail::append_number(buf, vec[i]);
    }
    buf.push_back('\n');
    out << buf;
  }
}

inline void write_word2vec_text(std::ostream& out, const WordEmbeddingTable& table) {
  std::vector<std::pair<std::string_view, std::span<const float>>> rows;
  rows.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) rows.emplace_back(table.word(i), table.vector(i));
  write_word2vec_rows(out, table.dimension(), rows);
}

inline void write_word2vec_text(const std::filesystem::path& path, const WordEmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_word2vec_text(out, table);
}

}  // namespace synlink
