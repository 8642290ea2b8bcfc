#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "synlink/link_service.hpp"
#include "synlink/synthetic.hpp"

namespace synlink {
namespace {

using nlohmann::json;
using testing::TempDir;

std::shared_ptr<const ServiceData> service_data() {
  SyntheticOptions opt;
  opt.linked_synsets = 40;
  opt.source_dimension = 5;
  opt.target_dimension = 5;
  opt.noise_sigma = 0.3;
  opt.unlinked_sources = 8;
  opt.extra_targets = 6;
  opt.oov_sources = 1;
  opt.seed = 9;
  auto world = make_synthetic_world(opt);
  auto source = embed_lexicon(world.source, world.source_table);
  auto target = embed_lexicon(world.target, world.target_table);
  MapConfig map;
  map.ridge_lambda = 0.0;
  return std::make_shared<const ServiceData>(ServiceData{
      std::move(world.source_table), std::move(world.source), std::move(source.embeddings),
      std::move(world.target), std::move(target.embeddings), filter_direct(world.links), map,
      Similarity::cosine});
}

// Ticks one second per call from a fixed instant.
struct FakeClock {
  std::shared_ptr<int> ticks = std::make_shared<int>(0);
  std::chrono::system_clock::time_point operator()() const {
    return std::chrono::system_clock::time_point(std::chrono::seconds(1700000000 + (*ticks)++));
  }
};

json decision(const std::string& s, const std::string& t, const std::string& verdict,
              const std::string& reviewer = "rev1") {
  return {{"source_id", s}, {"target_id", t}, {"verdict", verdict}, {"reviewer", reviewer}};
}

class Service : public ::testing::Test {
 protected:
  std::shared_ptr<const ServiceData> data_ = service_data();
  TempDir dir_;
  FakeClock clock_;
  LinkService service_{data_, dir_.path(), clock_};
};

TEST(FormatUtc, MillisecondsAndZone) {
  const auto t = std::chrono::system_clock::time_point(std::chrono::milliseconds(1700000000123));
  EXPECT_EQ(format_utc(t), "2023-11-14T22:13:20.123Z");
}

TEST(ReplayLinkState, LatestVerdictPerPairWins) {
  const std::vector<ReviewDecision> log{{"s", "t", Verdict::accept, "a", "1", ""},
                                        {"s", "u", Verdict::accept, "a", "2", ""},
                                        {"s", "t", Verdict::reject, "b", "3", ""},
                                        {"s", "u", Verdict::reject, "a", "4", ""},
                                        {"s", "u", Verdict::accept, "b", "5", ""}};
  const auto state = replay_link_state(log);
  EXPECT_EQ(state.at({"s", "t"}), Verdict::reject);
  EXPECT_EQ(state.at({"s", "u"}), Verdict::accept);
  EXPECT_EQ(state.size(), 2u);
}

TEST_F(Service, NotReadyBeforeInitialize) {
  EXPECT_EQ(service_.unlinked(10).status, 503);
  EXPECT_EQ(service_.candidates("src_00000", 3).status, 503);
  EXPECT_EQ(service_.decide(decision("src_00000", "tgt_00000", "accept")).status, 503);
  EXPECT_EQ(service_.retrain().status, 503);
}

TEST_F(Service, UnlinkedListsSourcesWithoutLinksInIdOrder) {
  service_.initialize();
  const auto r = service_.unlinked(50);
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body.size(), 8u);
  EXPECT_EQ(r.body[0]["id"], "src_00040");
  EXPECT_EQ(r.body[7]["id"], "src_00047");
  EXPECT_TRUE(r.body[0]["members"].is_array());
  EXPECT_EQ(service_.unlinked(3).body.size(), 3u);
  EXPECT_EQ(service_.unlinked(0).body.size(), 0u);

  ASSERT_EQ(service_.decide(decision("src_00040", "tgt_00001", "accept")).status, 201);
  EXPECT_EQ(service_.unlinked(50).body[0]["id"], "src_00041");
  // A later reject unlinks it again.
  ASSERT_EQ(service_.decide(decision("src_00040", "tgt_00001", "reject", "rev2")).status, 201);
  EXPECT_EQ(service_.unlinked(50).body[0]["id"], "src_00040");
}

TEST_F(Service, CandidatesShapeAndErrors) {
  service_.initialize();
  const auto r = service_.candidates("src_00003", 4);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["source_id"], "src_00003");
  EXPECT_EQ(r.body["similarity"], "cosine");
  EXPECT_EQ(r.body["model_version"], service_.current()->version);
  ASSERT_EQ(r.body["candidates"].size(), 4u);
  double prev = 2.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& c = r.body["candidates"][i];
    EXPECT_EQ(c["rank"], i + 1);
    EXPECT_LE(c["score"].get<double>(), prev);
    prev = c["score"].get<double>();
    EXPECT_TRUE(c.contains("gloss"));
    EXPECT_TRUE(c.contains("members"));
    EXPECT_TRUE(c.contains("pos"));
  }
  EXPECT_EQ(service_.candidates("nope", 3).status, 404);
  EXPECT_EQ(service_.candidates("src_00039", 3).status, 422);  // the OOV source
  EXPECT_EQ(service_.candidates("src_00003", 0).status, 400);
}

TEST_F(Service, DecisionValidation) {
  service_.initialize();
  EXPECT_EQ(service_.decide(json::array()).status, 400);
  EXPECT_EQ(service_.decide({{"source_id", "src_00000"}}).status, 400);
  EXPECT_EQ(service_.decide(decision("src_00000", "tgt_00000", "maybe")).status, 400);
  EXPECT_EQ(service_.decide(decision("src_00000", "tgt_00000", "accept", "")).status, 400);
  EXPECT_EQ(service_.decide(decision("zzz", "tgt_00000", "accept")).status, 404);
  EXPECT_EQ(service_.decide(decision("src_00000", "zzz", "accept")).status, 404);
  EXPECT_TRUE(service_.decisions().empty());
}

TEST_F(Service, DuplicateDecisionReturnsStoredRecord) {
  service_.initialize();
  const auto first = service_.decide(decision("src_00041", "tgt_00002", "accept"));
  ASSERT_EQ(first.status, 201);
  EXPECT_EQ(first.body["timestamp"], "2023-11-14T22:13:20.000Z");
  EXPECT_EQ(first.body["model_version"], service_.current()->version);
  const auto again = service_.decide(decision("src_00041", "tgt_00002", "accept"));
  EXPECT_EQ(again.status, 200);
  EXPECT_EQ(again.body, first.body);
  EXPECT_EQ(service_.decisions().size(), 1u);

  // Changing the verdict is a new decision, and the latest one wins.
  EXPECT_EQ(service_.decide(decision("src_00041", "tgt_00002", "reject")).status, 201);
  EXPECT_EQ(service_.decide(decision("src_00041", "tgt_00002", "accept")).status, 201);
  EXPECT_EQ(service_.decisions().size(), 3u);
  EXPECT_EQ(service_.link_state().at({"src_00041", "tgt_00002"}), Verdict::accept);
  EXPECT_EQ(read_decision_log(service_.log_path()), service_.decisions());
}

TEST_F(Service, RetrainNeedsAcceptedDecisions) {
  service_.initialize();
  EXPECT_EQ(service_.retrain().status, 409);
  ASSERT_EQ(service_.decide(decision("src_00042", "tgt_00003", "reject")).status, 201);
  EXPECT_EQ(service_.retrain().status, 409);
}

TEST_F(Service, RetrainSwapsModelAndPersists) {
  service_.initialize();
  const auto v0 = service_.current()->version;
  ASSERT_EQ(service_.decide(decision("src_00042", "tgt_00003", "accept")).status, 201);
  ASSERT_EQ(service_.decide(decision("src_00043", "tgt_00004", "accept")).status, 201);
  const auto r = service_.retrain();
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["previous_version"], v0);
  EXPECT_NE(r.body["model_version"], v0);
  EXPECT_EQ(r.body["training_pairs"], 39u + 2u);  // 40 gold minus the OOV source, plus 2 accepted
  EXPECT_LE(r.body["residual"].get<double>(), r.body["previous_residual"].get<double>());
  EXPECT_EQ(service_.current()->version, r.body["model_version"]);
  EXPECT_EQ(service_.candidates("src_00000", 1).body["model_version"], r.body["model_version"]);
  EXPECT_EQ(service_.retrain().status, 409);

  // A fresh process on the same state directory serves the same model and state.
  LinkService restarted(data_, dir_.path(), clock_);
  restarted.initialize();
  EXPECT_EQ(restarted.current()->version, r.body["model_version"]);
  EXPECT_EQ(restarted.current()->matrix.values(), service_.current()->matrix.values());
  EXPECT_EQ(restarted.link_state(), service_.link_state());
  EXPECT_EQ(restarted.retrain().status, 409);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "matrices" / (v0 + ".txt")));
}

TEST_F(Service, RestartWithoutRetrainKeepsPendingDecisions) {
  service_.initialize();
  ASSERT_EQ(service_.decide(decision("src_00044", "tgt_00005", "accept")).status, 201);
  LinkService restarted(data_, dir_.path(), clock_);
  restarted.initialize();
  EXPECT_EQ(restarted.current()->version, service_.current()->version);
  EXPECT_EQ(restarted.retrain().status, 200);
}

TEST_F(Service, OverHttp) {
  service_.initialize();
  httplib::Server server;
  install_routes(server, service_);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/synsets/unlinked?limit=2");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).size(), 2u);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");

  res = client.Get("/synsets/unlinked?limit=abc");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = client.Get("/candidates/src_00001?n=3");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["candidates"].size(), 3u);

  res = client.Get("/candidates/src_00001");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["candidates"].size(), 10u);

  res = client.Get("/candidates/unknown");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = client.Post("/decisions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = client.Post("/decisions", decision("src_00045", "tgt_00000", "accept").dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);

  res = client.Post("/retrain", "", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  res = client.Options("/decisions");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);

  server.stop();
  thread.join();
}

}  // namespace
}  // namespace synlink
