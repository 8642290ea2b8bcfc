#pragma once

// Synsets of one wordnet and the gold cross-lingual link records.
//
// Synset TSV:  id<TAB>pos<TAB>member1|member2|...[<TAB>gloss]   pos in {n,a,v,r}
// Link TSV:    source_id<TAB>target_id<TAB>link_type

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "synlink/error.hpp"

namespace synlink {

enum class Pos { Noun, Adjective, Verb, Adverb };

inline constexpr std::array<Pos, 4> kAllPos{Pos::Noun, Pos::Adjective, Pos::Verb, Pos::Adverb};

inline std::optional<Pos> pos_from_code(std::string_view code) {
  if (code == "n") return Pos::Noun;
  if (code == "a") return Pos::Adjective;
  if (code == "v") return Pos::Verb;
  if (code == "r") return Pos::Adverb;
  return std::nullopt;
}

inline std::string_view pos_code(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "n";
    case Pos::Adjective: return "a";
    case Pos::Verb: return "v";
    case Pos::Adverb: return "r";
  }
  return "?";
}

inline std::string_view pos_name(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "Noun";
    case Pos::Adjective: return "Adjective";
    case Pos::Verb: return "Verb";
    case Pos::Adverb: return "Adverb";
  }
  return "?";
}

struct Synset {
  std::string id;
  std::string language_tag;
  Pos pos = Pos::Noun;
  std::vector<std::string> members;
  std::optional<std::string> gloss;

  friend bool operator==(const Synset&, const Synset&) = default;
};

enum class LinkKind { direct, hypernymy, other };

struct LinkType {
  LinkKind kind = LinkKind::direct;
  std::string raw;  // original spelling, kept for OTHER

  static LinkType parse(std::string_view text) {
    if (text == "DIRECT") return {LinkKind::direct, "DIRECT"};
    if (text == "HYPERNYMY") return {LinkKind::hypernymy, "HYPERNYMY"};
    return {LinkKind::other, std::string(text)};
  }

  friend bool operator==(const LinkType&, const LinkType&) = default;
};

struct LinkRecord {
  std::string source_id;
  std::string target_id;
  LinkType type;

  friend bool operator==(const LinkRecord&, const LinkRecord&) = default;
};

// Synsets of one language keyed by id. Iteration is in id order.
class Lexicon {
 public:
  explicit Lexicon(std::string language_tag) : language_tag_(std::move(language_tag)) {}

  // Returns false when the id is already taken.
  bool insert(Synset synset) {
    if (synset.members.empty()) throw InvalidArgument("synset '" + synset.id + "' has no members");
    for (const auto& m : synset.members) {
      if (m.empty()) throw InvalidArgument("synset '" + synset.id + "' has an empty lemma");
    }
    synset.language_tag = language_tag_;
    auto id = synset.id;
    return synsets_.try_emplace(std::move(id), std::move(synset)).second;
  }

  const Synset* find(std::string_view id) const {
    const auto it = synsets_.find(id);
    return it == synsets_.end() ? nullptr : &it->second;
  }
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  const std::string& language_tag() const { return language_tag_; }
  std::size_t size() const { return synsets_.size(); }
  bool empty() const { return synsets_.empty(); }
  auto begin() const { return synsets_.begin(); }
  auto end() const { return synsets_.end(); }

  friend bool operator==(const Lexicon&, const Lexicon&) = default;

 private:
  std::string language_tag_;
  std::map<std::string, Synset, std::less<>> synsets_;
};

struct LexiconLoadReport {
  std::size_t lines = 0;
  std::size_t loaded = 0;
  std::size_t malformed = 0;
  std::size_t unknown_pos = 0;
  std::size_t duplicate_ids = 0;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

inline Lexicon read_synsets(std::istream& in, std::string language_tag,
                            LexiconLoadReport* report = nullptr) {
  Lexicon lexicon(std::move(language_tag));
  LexiconLoadReport stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_cr(line);
    if (body.empty()) continue;
    ++stats.lines;
    const auto fields = detail::split(body, '\t');
    if (fields.size() < 3 || fields.size() > 4 || fields[0].empty()) {
      ++stats.malformed;
      spdlog::debug("synset line {}: expected 3 or 4 tab-separated fields", line_no);
      continue;
    }
    const auto pos = pos_from_code(fields[1]);
    if (!pos) {
      ++stats.malformed;
      ++stats.unknown_pos;
      spdlog::warn("synset line {}: unknown pos code '{}'", line_no, fields[1]);
      continue;
    }
    Synset synset;
    synset.id = std::string(fields[0]);
    synset.pos = *pos;
    bool ok = true;
    for (const auto member : detail::split(fields[2], '|')) {
      if (member.empty()) {
        ok = false;
        break;
      }
      synset.members.emplace_back(member);
    }
    if (!ok) {
      ++stats.malformed;
      spdlog::debug("synset line {}: empty member", line_no);
      continue;
    }
    if (fields.size() == 4 && !fields[3].empty()) synset.gloss = std::string(fields[3]);
    if (!lexicon.insert(std::move(synset))) {
      ++stats.malformed;
      ++stats.duplicate_ids;
      spdlog::warn("synset line {}: duplicate id '{}' skipped", line_no, fields[0]);
      continue;
    }
    ++stats.loaded;
  }
  if (stats.lines == 0) throw FormatError("synset file is empty");
  if (report != nullptr) *report = stats;
  return lexicon;
}

inline Lexicon load_synsets(const std::filesystem::path& path, std::string language_tag,
                            LexiconLoadReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open synset file " + path.string());
  return read_synsets(in, std::move(language_tag), report);
}

inline std::vector<LinkRecord> read_links(std::istream& in) {
  std::vector<LinkRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_cr(line);
    if (body.empty()) continue;
    const auto fields = detail::split(body, '\t');
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw FormatError("link line " + std::to_string(line_no) +
                        ": expected source_id<TAB>target_id<TAB>link_type");
    }
    records.push_back({std::string(fields[0]), std::string(fields[1]), LinkType::parse(fields[2])});
  }
  return records;
}

inline std::vector<LinkRecord> load_links(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open link file " + path.string());
  return read_links(in);
}

inline std::vector<LinkRecord> filter_direct(const std::vector<LinkRecord>& records) {
  std::vector<LinkRecord> out;
  for (const auto& r : records) {
    if (r.type.kind == LinkKind::direct) out.push_back(r);
  }
  return out;
}

struct PosPartition {
  std::map<Pos, std::vector<LinkRecord>> buckets;
  std::vector<LinkRecord> rejects;  // source id not in the lexicon

  std::size_t total() const {
    std::size_t n = rejects.size();
    for (const auto& [pos, bucket] : buckets) n += bucket.size();
    return n;
  }
};

// Buckets records by the part of speech of their source synset.
inline PosPartition partition_by_pos(const std::vector<LinkRecord>& records,
                                     const Lexicon& source_lexicon) {
  PosPartition out;
  for (const auto& r : records) {
    if (const Synset* s = source_lexicon.find(r.source_id)) {
      out.buckets[s->pos].push_back(r);
    } else {
      out.rejects.push_back(r);
    }
  }
  return out;
}

}  // namespace synlink
