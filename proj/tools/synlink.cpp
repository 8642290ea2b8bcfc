// synlink: embed synsets, train the translation matrix, rank candidate links,
// cross-validate, and serve candidates for review.

#include <algorithm>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "synlink/commands.hpp"
#include "synlink/link_service.hpp"
#include "synlink/log.hpp"
#include "synlink/synthetic.hpp"

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

void add_data_flags(CLI::App& cmd, synlink::RunConfig& cfg, bool needs_target, bool needs_links) {
  cmd.add_option("--src-emb", cfg.source_embeddings, "source word embeddings (word2vec text)")
      ->required();
  cmd.add_option("--src-syn", cfg.source_synsets, "source synsets TSV")->required();
  auto* te = cmd.add_option("--tgt-emb", cfg.target_embeddings, "target word embeddings (word2vec text)");
  auto* ts = cmd.add_option("--tgt-syn", cfg.target_synsets, "target synsets TSV");
  if (needs_target) {
    te->required();
    ts->required();
  }
  if (needs_links) {
    cmd.add_option("--links", cfg.links, "gold links TSV")->required();
    cmd.add_flag("--links-reversed", cfg.reverse_links,
                 "link file lists the target-language id first");
  }
  cmd.add_option("--src-lang", cfg.source_language, "source language tag")->capture_default_str();
  cmd.add_option("--tgt-lang", cfg.target_language, "target language tag")->capture_default_str();

  const std::map<std::string, synlink::CasePolicy> cases{{"exact", synlink::CasePolicy::exact},
                                                         {"lower", synlink::CasePolicy::fold_to_lower}};
  const std::map<std::string, synlink::OovHandling> oov{{"skip", synlink::OovHandling::skip_member},
                                                        {"fail", synlink::OovHandling::fail_synset}};
  const std::map<std::string, synlink::PhraseHandling> phrase{
      {"split", synlink::PhraseHandling::split_and_average},
      {"skip", synlink::PhraseHandling::skip_member}};
  cmd.add_option("--case", cfg.policy.case_policy, "word lookup case policy {exact|lower}")
      ->transform(CLI::CheckedTransformer(cases, CLI::ignore_case));
  cmd.add_option("--oov", cfg.policy.oov_handling, "out-of-vocabulary members {skip|fail}")
      ->transform(CLI::CheckedTransformer(oov, CLI::ignore_case));
  cmd.add_option("--phrase", cfg.policy.phrase_handling, "multiword members {split|skip}")
      ->transform(CLI::CheckedTransformer(phrase, CLI::ignore_case));
  cmd.add_option("--min-coverage", cfg.policy.min_coverage_fraction,
                 "minimum fraction of members with vectors")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_flag("--normalize", cfg.normalize, "unit-normalize synset vectors");
  cmd.add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
}

void add_model_flags(CLI::App& cmd, synlink::RunConfig& cfg) {
  const std::map<std::string, synlink::Solver> solvers{{"closed", synlink::Solver::closed_form},
                                                       {"gd", synlink::Solver::gradient_descent}};
  cmd.add_option("--solver", cfg.map.solver, "least-squares solver {closed|gd}")
      ->transform(CLI::CheckedTransformer(solvers, CLI::ignore_case));
  cmd.add_option("--lambda", cfg.map.ridge_lambda, "ridge regularization strength")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--lr", cfg.map.gd.learning_rate, "gradient descent learning rate")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--epochs", cfg.map.gd.epochs, "gradient descent epochs")->check(CLI::PositiveNumber);
  cmd.add_flag("--per-pos", cfg.map.per_pos, "fit one map per word class");
}

void add_rank_flags(CLI::App& cmd, synlink::RunConfig& cfg) {
  const std::map<std::string, synlink::Similarity> sims{{"cosine", synlink::Similarity::cosine},
                                                        {"dot", synlink::Similarity::dot}};
  cmd.add_option("--sim", cfg.similarity, "similarity {cosine|dot}")
      ->transform(CLI::CheckedTransformer(sims, CLI::ignore_case));
  cmd.add_option("--n", cfg.n_values, "cutoffs, comma separated")->delimiter(',');
}

void add_seed_flag(CLI::App& cmd, synlink::RunConfig& cfg) {
  cmd.add_option("--seed", cfg.seed, "seed for every random choice")->required();
}

std::shared_ptr<const synlink::ServiceData> load_service_data(const synlink::RunConfig& cfg) {
  auto source = synlink::load_source(cfg);
  auto target = synlink::load_target(cfg);
  auto gold = synlink::load_direct_links(cfg);
  auto map = cfg.map;
  map.gd.seed = cfg.seed.value_or(0);
  return std::make_shared<const synlink::ServiceData>(synlink::ServiceData{
      std::move(source.table), std::move(source.lexicon), std::move(source.embedded.embeddings),
      std::move(target.lexicon), std::move(target.embedded.embeddings), std::move(gold), map,
      cfg.similarity});
}

}  // namespace

int main(int argc, char** argv) {
  synlink::init_logging();

  CLI::App app{"Link synsets across two wordnets through a linear map between embedding spaces"};
  app.set_config("--config", "", "read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);

  synlink::RunConfig cfg;

  auto* embed = app.add_subcommand("embed", "write synset embeddings and skip reports");
  add_data_flags(*embed, cfg, false, false);

  auto* train = app.add_subcommand("train", "fit the translation matrix on DIRECT links");
  add_data_flags(*train, cfg, true, true);
  add_model_flags(*train, cfg);
  add_seed_flag(*train, cfg);

  std::filesystem::path matrix_path;
  auto* link = app.add_subcommand("link", "rank target candidates for every source synset");
  add_data_flags(*link, cfg, true, false);
  add_rank_flags(*link, cfg);
  link->add_option("--matrix", matrix_path, "matrix written by `train`")->required();

  auto* eval = app.add_subcommand("eval", "k-fold cross-validated accuracy@n report");
  add_data_flags(*eval, cfg, true, true);
  add_model_flags(*eval, cfg);
  add_rank_flags(*eval, cfg);
  add_seed_flag(*eval, cfg);
  eval->add_option("--k", cfg.k, "number of folds")->check(CLI::Range(2, 1000000))->capture_default_str();

  int port = 8080;
  std::string host = "127.0.0.1";
  std::filesystem::path state_dir = "state";
  auto* serve = app.add_subcommand("serve", "HTTP service for candidate review");
  add_data_flags(*serve, cfg, true, true);
  add_model_flags(*serve, cfg);
  add_rank_flags(*serve, cfg);
  serve->add_option("--seed", cfg.seed, "seed for the iterative solver");
  serve->add_option("--port", port, "listen port")->capture_default_str();
  serve->add_option("--host", host, "listen address")->capture_default_str();
  serve->add_option("--state-dir", state_dir, "decision log and matrix directory")->capture_default_str();

  synlink::SyntheticOptions synth_opt;
  std::filesystem::path synth_out = "synthetic";
  auto* synth = app.add_subcommand("synth", "generate a synthetic bilingual dataset with a known map");
  synth->add_option("--synsets", synth_opt.linked_synsets, "linked synsets")->capture_default_str();
  synth->add_option("--src-dim", synth_opt.source_dimension)->capture_default_str();
  synth->add_option("--tgt-dim", synth_opt.target_dimension)->capture_default_str();
  synth->add_option("--noise", synth_opt.noise_sigma, "target-side Gaussian noise")->capture_default_str();
  synth->add_option("--unlinked", synth_opt.unlinked_sources, "source synsets without links");
  synth->add_option("--extra-targets", synth_opt.extra_targets, "distractor target synsets");
  synth->add_option("--hypernymy", synth_opt.hypernymy_links, "non-DIRECT link rows");
  synth->add_option("--seed", synth_opt.seed)->required();
  synth->add_option("--out", synth_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (embed->parsed()) {
      const auto r = synlink::cmd_embed(cfg);
      spdlog::info("wrote {} files, {} synsets skipped", r.written.size(), r.skipped);
    } else if (train->parsed()) {
      const auto r = synlink::cmd_train(cfg);
      spdlog::info("matrix written to {}", r.matrix_path.string());
    } else if (link->parsed()) {
      const auto n = *std::max_element(cfg.n_values.begin(), cfg.n_values.end());
      const auto r = synlink::cmd_link(cfg, matrix_path, n);
      spdlog::info("{} sources ranked, {} skipped", r.linked, r.skipped);
    } else if (eval->parsed()) {
      const auto r = synlink::cmd_eval(cfg);
      spdlog::info("report written to {}", r.markdown_path.string());
    } else if (serve->parsed()) {
      synlink::LinkService service(load_service_data(cfg), state_dir);
      httplib::Server server;
      synlink::install_routes(server, service);
      service.initialize();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::warn("listening on {}:{}", host, port);
      if (!server.listen(host, port)) {
        spdlog::error("cannot listen on {}:{}", host, port);
        return 1;
      }
    } else if (synth->parsed()) {
      const auto world = synlink::make_synthetic_world(synth_opt);
      synlink::write_synthetic_world(synth_out, world);
      spdlog::info("synthetic dataset written to {}", synth_out.string());
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
