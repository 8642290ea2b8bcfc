#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "synlink/commands.hpp"
#include "synlink/synthetic.hpp"

namespace synlink {
namespace {

using testing::read_file;
using testing::TempDir;

struct RunOutput {
  int exit_code = -1;
  std::string output;  // stdout and stderr
};

RunOutput run_cli(const std::string& args) {
  const std::string cmd = std::string(SYNLINK_CLI_PATH) + " " + args + " 2>&1";
  RunOutput out;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return out;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.output.append(buf, got);
  const int status = ::pclose(pipe);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

RunConfig config_for(const SyntheticFiles& f, const std::filesystem::path& out) {
  RunConfig c;
  c.source_embeddings = f.source_embeddings;
  c.target_embeddings = f.target_embeddings;
  c.source_synsets = f.source_synsets;
  c.target_synsets = f.target_synsets;
  c.links = f.links;
  c.output_dir = out;
  c.seed = 7;
  return c;
}

std::string data_flags(const SyntheticFiles& f) {
  return "--src-emb " + q(f.source_embeddings) + " --tgt-emb " + q(f.target_embeddings) +
         " --src-syn " + q(f.source_synsets) + " --tgt-syn " + q(f.target_synsets);
}

SyntheticOptions demo_options(double sigma = 0.0) {
  SyntheticOptions opt;
  opt.linked_synsets = 60;
  opt.source_dimension = 6;
  opt.target_dimension = 5;
  opt.noise_sigma = sigma;
  opt.extra_targets = 10;
  opt.unlinked_sources = 5;
  opt.hypernymy_links = 5;
  opt.oov_sources = 2;
  opt.seed = 3;
  return opt;
}

TEST(Commands, IdentityLinksRecoverIdentityMatrix) {
  TempDir dir;
  // Same words, vectors and synsets on both sides, each synset linked to itself.
  const auto vec = dir.write("e.vec", "4 3\na 1 0 0\nb 0 1 0\nc 0 0 1\nd 1 1 2\n");
  const auto syn = dir.write("s.tsv", "x1\tn\ta\nx2\tn\tb|d\nx3\tv\tc\nx4\ta\td|a\nx5\tn\ta|b|c\n");
  const auto links = dir.write("l.tsv", "x1\tx1\tDIRECT\nx2\tx2\tDIRECT\nx3\tx3\tDIRECT\nx4\tx4\tDIRECT\n");
  RunConfig c;
  c.source_embeddings = c.target_embeddings = vec;
  c.source_synsets = c.target_synsets = syn;
  c.links = links;
  c.output_dir = dir / "out";
  c.seed = 1;
  c.map.ridge_lambda = 0.0;
  const auto r = cmd_train(c);
  EXPECT_TRUE((r.matrix.values() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
  const auto loaded = load_matrix(dir / "out" / "matrix.txt");
  EXPECT_EQ(loaded.values(), r.matrix.values());
  EXPECT_NE(read_file(dir / "out" / "train_summary.tsv").find("pairs\t4\n"), std::string::npos);
}

TEST(Commands, NoiselessTrainRecoversGroundTruth) {
  TempDir dir;
  const auto world = make_synthetic_world(demo_options());
  const auto files = write_synthetic_world(dir / "data", world);
  const auto r = cmd_train(config_for(files, dir / "out"));
  EXPECT_LT(relative_frobenius(r.matrix.values(), world.ground_truth), 1e-3);
  EXPECT_EQ(r.missing_source, 2u);  // the two OOV sources
}

TEST(Commands, EmbedWritesVectorsAndSkips) {
  TempDir dir;
  const auto files = write_synthetic_world(dir / "data", make_synthetic_world(demo_options()));
  const auto r = cmd_embed(config_for(files, dir / "out"));
  EXPECT_EQ(r.written.size(), 4u);
  EXPECT_EQ(r.skipped, 2u);
  const auto src = load_word2vec_text(dir / "out" / "src.synsets.vec", "src");
  EXPECT_EQ(src.size(), 63u);
  EXPECT_TRUE(src.lookup("src_00000").has_value());
  const auto skips = read_file(dir / "out" / "src.skips.tsv");
  EXPECT_NE(skips.find("src_00058"), std::string::npos);
  EXPECT_NE(skips.find("src_00059"), std::string::npos);
}

TEST(Commands, LinkPrefixAcrossN) {
  TempDir dir;
  const auto files = write_synthetic_world(dir / "data", make_synthetic_world(demo_options(0.3)));
  auto c = config_for(files, dir / "out");
  const auto trained = cmd_train(c);
  c.output_dir = dir / "n1";
  const auto r1 = cmd_link(c, trained.matrix_path, 1);
  c.output_dir = dir / "n5";
  const auto r5 = cmd_link(c, trained.matrix_path, 5);
  EXPECT_EQ(r1.linked, 63u);
  EXPECT_EQ(r1.skipped, 2u);
  std::istringstream one(read_file(r1.candidates_path));
  std::istringstream five(read_file(r5.candidates_path));
  std::map<std::string, std::string> first_of;
  std::string line;
  while (std::getline(five, line)) {
    const auto tab = line.find('\t');
    if (line.compare(tab + 1, 2, "1\t") == 0) first_of[line.substr(0, tab)] = line;
  }
  std::size_t count = 0;
  while (std::getline(one, line)) {
    ++count;
    EXPECT_EQ(first_of.at(line.substr(0, line.find('\t'))), line);
  }
  EXPECT_EQ(count, 63u);
  EXPECT_EQ(first_of.size(), 63u);
}

TEST(Commands, EmptyTargetSetIsAnError) {
  TempDir dir;
  const auto files = write_synthetic_world(dir / "data", make_synthetic_world(demo_options()));
  const auto syn = dir.write("none.tsv", "t1\tn\tnot_a_word\n");
  auto c = config_for(files, dir / "out");
  const auto trained = cmd_train(c);
  c.target_synsets = syn;
  EXPECT_THROW(cmd_link(c, trained.matrix_path, 3), InvalidArgument);
}

TEST(Commands, EvalIsByteIdenticalAcrossRuns) {
  TempDir dir;
  const auto files = write_synthetic_world(dir / "data", make_synthetic_world(demo_options(0.4)));
  auto c = config_for(files, dir / "a");
  cmd_eval(c);
  c.output_dir = dir / "b";
  cmd_eval(c);
  for (const char* name : {"report.md", "report.tsv"}) {
    const auto a = read_file(dir / "a" / name);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read_file(dir / "b" / name)) << name;
  }
}

TEST(Commands, RequiresSeed) {
  TempDir dir;
  const auto files = write_synthetic_world(dir / "data", make_synthetic_world(demo_options()));
  auto c = config_for(files, dir / "out");
  c.seed.reset();
  EXPECT_THROW(cmd_train(c), InvalidArgument);
  EXPECT_THROW(cmd_eval(c), InvalidArgument);
}

TEST(Commands, ReversedLinkFile) {
  TempDir dir;
  const auto world = make_synthetic_world(demo_options());
  const auto files = write_synthetic_world(dir / "data", world);
  std::ofstream(files.links, std::ios::binary | std::ios::trunc) << [&] {
    std::string s;
    for (const auto& l : world.links) s += l.target_id + "\t" + l.source_id + "\t" + l.type.raw + "\n";
    return s;
  }();
  auto c = config_for(files, dir / "out");
  c.reverse_links = true;
  const auto r = cmd_train(c);
  EXPECT_LT(relative_frobenius(r.matrix.values(), world.ground_truth), 1e-3);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto synth = run_cli("synth --synsets 40 --src-dim 5 --tgt-dim 5 --noise 0.1 --seed 2 --out " +
                               q(dir_ / "data"));
    ASSERT_EQ(synth.exit_code, 0) << synth.output;
    files_ = {dir_ / "data" / "src.vec", dir_ / "data" / "tgt.vec", dir_ / "data" / "src.synsets.tsv",
              dir_ / "data" / "tgt.synsets.tsv", dir_ / "data" / "links.tsv"};
  }

  TempDir dir_;
  SyntheticFiles files_;
};

TEST_F(Cli, TrainLinkEvalSucceed) {
  const auto train = run_cli("train " + data_flags(files_) + " --links " + q(files_.links) +
                             " --seed 1 --out " + q(dir_ / "out"));
  ASSERT_EQ(train.exit_code, 0) << train.output;
  const auto link = run_cli("link " + data_flags(files_) + " --matrix " + q(dir_ / "out" / "matrix.txt") +
                            " --n 1,3 --out " + q(dir_ / "out"));
  ASSERT_EQ(link.exit_code, 0) << link.output;
  const auto eval = run_cli("eval " + data_flags(files_) + " --links " + q(files_.links) +
                            " --seed 1 --k 4 --n 1,10 --out " + q(dir_ / "out"));
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  const auto md = read_file(dir_ / "out" / "report.md");
  EXPECT_EQ(md.substr(0, md.find('\n')), "| Word Class | Acc@1 | Acc@10 |");
}

TEST_F(Cli, GradientDescentSolver) {
  const auto train = run_cli("train " + data_flags(files_) + " --links " + q(files_.links) +
                             " --solver gd --lr 0.2 --epochs 3000 --seed 1 --out " + q(dir_ / "gd"));
  ASSERT_EQ(train.exit_code, 0) << train.output;
  EXPECT_NE(read_file(dir_ / "gd" / "train_summary.tsv").find("solver\tgd\n"), std::string::npos);
}

// Subcommand options live in the section named after the subcommand.
TEST_F(Cli, ConfigFileSuppliesOptions) {
  const auto cfg = dir_.write("run.ini", "[train]\nsrc-emb=" + files_.source_embeddings.string() +
                                             "\ntgt-emb=" + files_.target_embeddings.string() +
                                             "\nsrc-syn=" + files_.source_synsets.string() +
                                             "\ntgt-syn=" + files_.target_synsets.string() +
                                             "\nlinks=" + files_.links.string() + "\nseed=4\n");
  const auto train = run_cli("--config " + q(cfg) + " train --out " + q(dir_ / "cfg"));
  ASSERT_EQ(train.exit_code, 0) << train.output;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "cfg" / "matrix.txt"));
}

TEST_F(Cli, DegenerateSystemFailsWithSingularMessage) {
  const auto links = dir_.write("two.tsv", "src_00000\ttgt_00000\tDIRECT\nsrc_00001\ttgt_00001\tDIRECT\n");
  const auto r = run_cli("train " + data_flags(files_) + " --links " + q(links) +
                         " --lambda 0 --seed 1 --out " + q(dir_ / "deg"));
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("singular"), std::string::npos) << r.output;
  EXPECT_FALSE(std::filesystem::exists(dir_ / "deg" / "matrix.txt"));
}

TEST_F(Cli, FoldsMoreThanLinksFails) {
  const auto links = dir_.write("few.tsv", "src_00000\ttgt_00000\tDIRECT\nsrc_00001\ttgt_00001\tDIRECT\n");
  const auto r = run_cli("eval " + data_flags(files_) + " --links " + q(links) + " --k 3 --seed 1 --out " +
                         q(dir_ / "few"));
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("exceeds the number of links"), std::string::npos) << r.output;
}

TEST_F(Cli, MissingSeedAndBadArguments) {
  EXPECT_NE(run_cli("train " + data_flags(files_) + " --links " + q(files_.links)).exit_code, 0);
  EXPECT_NE(run_cli("eval " + data_flags(files_) + " --links " + q(files_.links) + " --seed 1 --sim euclid")
                .exit_code,
            0);
  EXPECT_NE(run_cli("").exit_code, 0);
  const auto missing = run_cli("train --src-emb /nope.vec --tgt-emb /nope.vec --src-syn /nope --tgt-syn /nope "
                               "--links /nope --seed 1");
  EXPECT_NE(missing.exit_code, 0);
  EXPECT_NE(missing.output.find("not found"), std::string::npos) << missing.output;
}

}  // namespace
}  // namespace synlink
