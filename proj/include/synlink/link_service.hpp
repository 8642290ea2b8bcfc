#pragma once

// HTTP backend for lexicographer review.
//
// State on disk (state directory):
//   decisions.jsonl       append-only, one ReviewDecision JSON object per line
//   matrices/<ver>.txt    every matrix that has served
//   serving.json          {"model_version", "decisions_consumed"}
//
// Link state is rebuilt by replaying decisions.jsonl: for each
// (source, target) pair the latest verdict wins. Requests read one immutable
// snapshot (matrix, version, candidate pool); /retrain builds a new one off
// the request path and swaps it in.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Eigen first: httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen.
#include <Eigen/Dense>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "synlink/candidate_ranking.hpp"
#include "synlink/error.hpp"
#include "synlink/lexicon.hpp"
#include "synlink/linear_map.hpp"
#include "synlink/pipeline.hpp"
#include "synlink/synset_embedding.hpp"

namespace synlink {

enum class Verdict { accept, reject };

inline std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "accept") return Verdict::accept;
  if (text == "reject") return Verdict::reject;
  return std::nullopt;
}

inline std::string_view verdict_name(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

struct ReviewDecision {
  std::string source_id;
  std::string target_id;
  Verdict verdict = Verdict::accept;
  std::string reviewer;
  std::string timestamp;  // UTC, ISO 8601 with milliseconds
  std::string model_version;

  friend bool operator==(const ReviewDecision&, const ReviewDecision&) = default;
};

inline nlohmann::json to_json(const ReviewDecision& d) {
  return {{"source_id", d.source_id},
          {"target_id", d.target_id},
          {"verdict", verdict_name(d.verdict)},
          {"reviewer", d.reviewer},
          {"timestamp", d.timestamp},
          {"model_version", d.model_version}};
}

inline ReviewDecision decision_from_json(const nlohmann::json& j) {
  const auto verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (!verdict) throw FormatError("bad verdict in decision log");
  return {j.at("source_id").get<std::string>(), j.at("target_id").get<std::string>(), *verdict,
          j.at("reviewer").get<std::string>(), j.at("timestamp").get<std::string>(),
          j.value("model_version", std::string())};
}

inline std::string format_utc(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  if (ms % 1000 < 0) --secs;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char date[32];
  std::strftime(date, sizeof(date), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03dZ", date, static_cast<int>(((ms % 1000) + 1000) % 1000));
  return out;
}

using LinkKey = std::pair<std::string, std::string>;

// Latest verdict per (source, target) pair, in log order.
inline std::map<LinkKey, Verdict> replay_link_state(const std::vector<ReviewDecision>& log) {
  std::map<LinkKey, Verdict> state;
  for (const auto& d : log) state.insert_or_assign(LinkKey{d.source_id, d.target_id}, d.verdict);
  return state;
}

inline std::vector<ReviewDecision> read_decision_log(const std::filesystem::path& path) {
  std::vector<ReviewDecision> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(decision_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError("decision log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// Inputs the service serves from; never modified after construction.
struct ServiceData {
  WordEmbeddingTable source_table;
  Lexicon source_lexicon;
  SynsetEmbeddingSet source_embeddings;
  Lexicon target_lexicon;
  SynsetEmbeddingSet target_embeddings;
  std::vector<LinkRecord> gold;  // DIRECT links
  MapConfig map;
  Similarity similarity = Similarity::cosine;
};

struct ServiceSnapshot {
  TranslationMatrix matrix;
  std::string version;
  std::shared_ptr<const CandidateIndex> pool;
};

class LinkService {
 public:
  struct Response {
    int status = 200;
    nlohmann::json body;
  };
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  LinkService(std::shared_ptr<const ServiceData> data, std::filesystem::path state_dir,
              Clock clock = [] { return std::chrono::system_clock::now(); })
      : data_(std::move(data)), state_dir_(std::move(state_dir)), clock_(std::move(clock)) {
    if (data_->target_embeddings.empty()) throw InvalidArgument("empty target set");
    pool_ = std::make_shared<const CandidateIndex>(data_->target_embeddings);
  }

  // Loads the serving matrix (fitting one on the gold links on first start)
  // and replays the decision log.
  void initialize() {
    std::filesystem::create_directories(state_dir_ / "matrices");
    std::vector<ReviewDecision> log = read_decision_log(log_path());
    std::size_t consumed = 0;
    std::optional<TranslationMatrix> matrix;
    if (std::filesystem::exists(serving_path())) {
      std::ifstream in(serving_path());
      const auto serving = nlohmann::json::parse(in);
      const auto version = serving.at("model_version").get<std::string>();
      consumed = serving.at("decisions_consumed").get<std::size_t>();
      matrix = load_matrix(state_dir_ / "matrices" / (version + ".txt"));
    } else {
      matrix = fit_map(training_pairs(replay_link_state(log)), data_->map);
    }
    auto snapshot = make_snapshot(std::move(*matrix));
    persist(*snapshot, consumed);
    {
      std::lock_guard lock(decisions_mutex_);
      log_ = std::move(log);
      consumed_ = consumed;
      state_ = replay_link_state(log_);
    }
    {
      std::lock_guard lock(snapshot_mutex_);
      snapshot_ = std::move(snapshot);
    }
    ready_.store(true);
    spdlog::info("link service ready, model {}", current()->version);
  }

  bool ready() const { return ready_.load(); }

  std::shared_ptr<const ServiceSnapshot> current() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  // GET /synsets/unlinked?limit=L
  Response unlinked(std::size_t limit) const {
    if (!ready()) return not_ready();
    std::set<std::string, std::less<>> linked;
    for (const auto& g : data_->gold) linked.insert(g.source_id);
    {
      std::lock_guard lock(decisions_mutex_);
      for (const auto& [key, verdict] : state_) {
        if (verdict == Verdict::accept) linked.insert(key.first);
      }
    }
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [id, synset] : data_->source_lexicon) {
      if (items.size() >= limit) break;
      if (linked.contains(id)) continue;
      items.push_back(synset_json(synset));
    }
    return {200, std::move(items)};
  }

  // GET /candidates/{source_id}?n=N
  Response candidates(std::string_view source_id, std::size_t n) const {
    if (!ready()) return not_ready();
    if (n == 0) return error(400, "n must be at least 1");
    const Synset* source = data_->source_lexicon.find(source_id);
    if (source == nullptr) return error(404, "unknown source synset '" + std::string(source_id) + "'");
    const auto* e = data_->source_embeddings.find(source_id);
    if (e == nullptr) return error(422, "source synset has zero coverage and cannot be embedded");

    const auto snap = current();
    const auto list = snap->pool->rank(apply_map(snap->matrix, e->vector), n, data_->similarity,
                                       std::string(source_id));
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < list.candidates.size(); ++r) {
      const auto& c = list.candidates[r];
      auto row = synset_json(*data_->target_lexicon.find(c.target_id));
      row["rank"] = r + 1;
      row["target_id"] = c.target_id;
      row["score"] = c.score;
      rows.push_back(std::move(row));
    }
    return {200,
            {{"source", synset_json(*source)},
             {"source_id", list.source_id},
             {"similarity", similarity_name(list.similarity)},
             {"model_version", snap->version},
             {"candidates", std::move(rows)}}};
  }

  // POST /decisions. An exact duplicate (the latest decision by the same
  // reviewer on the same pair has the same verdict) returns the stored record.
  Response decide(const nlohmann::json& body) {
    if (!ready()) return not_ready();
    if (!body.is_object()) return error(400, "body must be a JSON object");
    for (const char* field : {"source_id", "target_id", "verdict", "reviewer"}) {
      if (!body.contains(field) || !body[field].is_string()) {
        return error(400, std::string("missing string field '") + field + "'");
      }
    }
    const auto verdict = parse_verdict(body["verdict"].get<std::string>());
    if (!verdict) return error(400, "verdict must be 'accept' or 'reject'");
    ReviewDecision d{body["source_id"].get<std::string>(), body["target_id"].get<std::string>(),
                     *verdict, body["reviewer"].get<std::string>(), {}, {}};
    if (d.reviewer.empty()) return error(400, "reviewer must not be empty");
    if (!data_->source_lexicon.contains(d.source_id)) return error(404, "unknown source synset '" + d.source_id + "'");
    if (!data_->target_lexicon.contains(d.target_id)) return error(404, "unknown target synset '" + d.target_id + "'");

    std::lock_guard lock(decisions_mutex_);
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
      if (it->source_id == d.source_id && it->target_id == d.target_id && it->reviewer == d.reviewer) {
        if (it->verdict == d.verdict) return {200, to_json(*it)};
        break;
      }
    }
    d.timestamp = format_utc(clock_());
    d.model_version = current()->version;
    append_to_log(d);
    log_.push_back(d);
    state_.insert_or_assign(LinkKey{d.source_id, d.target_id}, d.verdict);
    return {201, to_json(d)};
  }

  // POST /retrain
  Response retrain() {
    if (!ready()) return not_ready();
    std::lock_guard retrain_lock(retrain_mutex_);
    std::map<LinkKey, Verdict> state;
    std::size_t log_size = 0;
    std::size_t pending = 0;
    {
      std::lock_guard lock(decisions_mutex_);
      state = state_;
      log_size = log_.size();
      for (std::size_t i = consumed_; i < log_.size(); ++i) {
        if (log_[i].verdict == Verdict::accept) ++pending;
      }
    }
    if (pending == 0) return error(409, "no accepted decisions since the last retrain");

    const auto previous = current();
    std::shared_ptr<const ServiceSnapshot> next;
    double previous_residual = 0.0;
    std::vector<TrainingPair> pairs;
    try {
      pairs = training_pairs(state);
      previous_residual = objective(previous->matrix.values(), pairs);
      next = make_snapshot(fit_map(pairs, data_->map));
      persist(*next, log_size);
    } catch (const std::exception& e) {
      spdlog::error("retrain failed: {}", e.what());
      return error(500, std::string("retrain failed: ") + e.what());
    }
    {
      std::lock_guard lock(decisions_mutex_);
      consumed_ = log_size;
    }
    {
      std::lock_guard lock(snapshot_mutex_);
      snapshot_ = next;
    }
    spdlog::info("retrained on {} pairs: {} -> {}", pairs.size(), previous->version, next->version);
    return {200,
            {{"model_version", next->version},
             {"previous_version", previous->version},
             {"training_pairs", pairs.size()},
             {"residual", next->matrix.info().residual},
             {"previous_residual", previous_residual}}};
  }

  // Gold DIRECT links plus currently accepted decisions, each pair once,
  // restricted to pairs with embeddings on both sides.
  std::vector<TrainingPair> training_pairs(const std::map<LinkKey, Verdict>& state) const {
    std::set<LinkKey> seen;
    std::vector<LinkRecord> links;
    for (const auto& g : data_->gold) {
      if (seen.insert({g.source_id, g.target_id}).second) links.push_back(g);
    }
    for (const auto& [key, verdict] : state) {
      if (verdict == Verdict::accept && seen.insert(key).second) {
        links.push_back({key.first, key.second, LinkType::parse("DIRECT")});
      }
    }
    return make_training_pairs(links, data_->source_embeddings, data_->target_embeddings).pairs;
  }

  std::vector<ReviewDecision> decisions() const {
    std::lock_guard lock(decisions_mutex_);
    return log_;
  }

  std::map<LinkKey, Verdict> link_state() const {
    std::lock_guard lock(decisions_mutex_);
    return state_;
  }

  std::filesystem::path log_path() const { return state_dir_ / "decisions.jsonl"; }
  std::filesystem::path serving_path() const { return state_dir_ / "serving.json"; }

 private:
  static Response error(int status, std::string message) {
    return {status, {{"error", std::move(message)}}};
  }
  static Response not_ready() { return error(503, "service is initializing"); }

  static nlohmann::json synset_json(const Synset& s) {
    nlohmann::json j{{"id", s.id}, {"pos", pos_code(s.pos)}, {"members", s.members}};
    j["gloss"] = s.gloss ? nlohmann::json(*s.gloss) : nlohmann::json(nullptr);
    return j;
  }

  std::shared_ptr<const ServiceSnapshot> make_snapshot(TranslationMatrix matrix) const {
    auto version = matrix_version(matrix);
    return std::make_shared<const ServiceSnapshot>(
        ServiceSnapshot{std::move(matrix), std::move(version), pool_});
  }

  void persist(const ServiceSnapshot& snap, std::size_t consumed) const {
    const auto matrix_file = state_dir_ / "matrices" / (snap.version + ".txt");
    if (!std::filesystem::exists(matrix_file)) save_matrix(matrix_file, snap.matrix);
    const auto tmp = state_dir_ / "serving.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << nlohmann::json{{"model_version", snap.version}, {"decisions_consumed", consumed}}.dump()
          << '\n';
      if (!out) throw FormatError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, serving_path());
  }

  void append_to_log(const ReviewDecision& d) {
    std::ofstream out(log_path(), std::ios::binary | std::ios::app);
    out << to_json(d).dump() << '\n';
    out.flush();
    if (!out) throw FormatError("cannot append to " + log_path().string());
  }

  std::shared_ptr<const ServiceData> data_;
  std::filesystem::path state_dir_;
  Clock clock_;
  std::shared_ptr<const CandidateIndex> pool_;
  std::atomic<bool> ready_{false};

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const ServiceSnapshot> snapshot_;

  mutable std::mutex decisions_mutex_;
  std::vector<ReviewDecision> log_;
  std::map<LinkKey, Verdict> state_;
  std::size_t consumed_ = 0;

  std::mutex retrain_mutex_;
};

namespace detail {

inline void send(httplib::Response& res, const LinkService::Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline std::optional<std::size_t> size_param(const httplib::Request& req, const char* name,
                                             std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  std::size_t value = 0;
  if (!parse_number(req.get_param_value(name), value)) return std::nullopt;
  return value;
}

}  // namespace detail

inline void install_routes(httplib::Server& server, LinkService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  server.Get("/synsets/unlinked", [&service](const httplib::Request& req, httplib::Response& res) {
    const auto limit = detail::size_param(req, "limit", 50);
    if (!limit) return detail::send(res, {400, {{"error", "limit must be a nonnegative integer"}}});
    detail::send(res, service.unlinked(*limit));
  });

  server.Get(R"(/candidates/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    const auto n = detail::size_param(req, "n", 10);
    if (!n) return detail::send(res, {400, {{"error", "n must be a positive integer"}}});
    detail::send(res, service.candidates(req.matches[1].str(), *n));
  });

  server.Post("/decisions", [&service](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return detail::send(res, {400, {{"error", "body is not valid JSON"}}});
    detail::send(res, service.decide(body));
  });

  server.Post("/retrain", [&service](const httplib::Request&, httplib::Response& res) {
    detail::send(res, service.retrain());
  });

  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace synlink
