#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "cscg/error.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "experiments.hpp"

namespace fs = std::filesystem;
using namespace cscg::cli;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cscg_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int run_cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST(Config, OverridesParseJsonOrFallBackToString) {
  Json j = Json::object();
  apply_override(j, "a.b=3");
  apply_override(j, "a.c=[1,2]");
  apply_override(j, "name=digit:3");
  EXPECT_EQ(j["a"]["b"], 3);
  EXPECT_EQ(j["a"]["c"], Json::array({1, 2}));
  EXPECT_EQ(j["name"], "digit:3");
  EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(j, "a..b=1"), ConfigError);
  EXPECT_THROW(apply_override(j, "a.b.c=1"), ConfigError);
}

TEST(Config, HashIgnoresKeyOrder) {
  EXPECT_EQ(config_hash(Json::parse(R"({"a":1,"b":2})")), config_hash(Json::parse(R"({"b":2,"a":1})")));
  EXPECT_NE(config_hash(Json::parse(R"({"a":1})")), config_hash(Json::parse(R"({"a":2})")));
  EXPECT_EQ(hex64(0xabc), "0000000000000abc");
}

TEST(Config, TypedAccessAndUnknownKeys) {
  Config c(Json::parse(R"({"n": 3, "em": {"max_iters": 5, "typo": 1}, "s": "x"})"));
  EXPECT_EQ(c.get<std::size_t>("n", 0), 3u);
  EXPECT_EQ(c.get<std::size_t>("missing", 7), 7u);
  EXPECT_THROW(c.get<std::size_t>("s", 0), ConfigError);
  EXPECT_EQ(c.child("em").get<std::size_t>("max_iters", 0), 5u);
  EXPECT_THROW(c.check_unknown(), ConfigError);
  c.child("em").get<int>("typo", 0);
  EXPECT_NO_THROW(c.check_unknown());
}

TEST(Csv, ProvenanceHeaderAndFormatting) {
  const fs::path dir = scratch_dir("csv");
  {
    CsvWriter w(dir / "x.csv", Provenance{7, 0x10, "demo"}, {"a", "b", "c"});
    w.row(std::size_t{1}, 0.5, std::string("s"));
    w.row(2, std::numeric_limits<double>::infinity(), true);
    EXPECT_THROW(w.row(1, 2), std::logic_error);
  }
  const auto l = lines(slurp(dir / "x.csv"));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0].rfind("# cscg ", 0), 0u);
  EXPECT_NE(l[0].find("command=demo seed=7 config=0000000000000010"), std::string::npos);
  EXPECT_EQ(l[1], "a,b,c");
  EXPECT_EQ(l[2], "1,0.5,s");
  EXPECT_EQ(l[3], "2,inf,1");
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Aggregate, MeanSemAndInterval) {
  const std::string csv = "# header\ng,v\na,1\na,3\nb,2\n";
  const auto rows = aggregate(csv, {"g"}, "v");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].group, std::vector<std::string>{"a"});
  EXPECT_DOUBLE_EQ(rows[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].sem, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].ci95, 1.96);
  EXPECT_EQ(rows[1].n, 1u);
  EXPECT_DOUBLE_EQ(rows[1].sem, 0.0);
  EXPECT_THROW(aggregate(csv, {"nope"}, "v"), cscg::InvalidArgument);
  EXPECT_THROW(aggregate("g,v\na,x\n", {"g"}, "v"), cscg::FormatError);
  EXPECT_THROW(aggregate("g,v\na\n", {"g"}, "v"), cscg::FormatError);
}

TEST(RoomSelector, ParsesAllForms) {
  EXPECT_EQ(room_from("digit:4", "", 0), cscg::digit_room(4));
  EXPECT_EQ(room_from("torus", "large", 0), cscg::builtin_room(cscg::RoomType::torus, cscg::SizeClass::large));
  EXPECT_EQ(room_from("torus", "medium", 2), cscg::grown_room(cscg::RoomType::torus, 2));
  EXPECT_THROW(room_from("digit:x", "", 0), cscg::InvalidArgument);
  EXPECT_THROW(room_from("blob", "small", 0), cscg::InvalidArgument);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("exit");
  EXPECT_EQ(run_cli({"--help"}), kOk);
  EXPECT_EQ(run_cli({}), kValidationError);
  EXPECT_EQ(run_cli({"nosuch"}), kValidationError);
  EXPECT_EQ(run_cli({"train", "--workers", "0"}), kValidationError);
  EXPECT_EQ(run_cli({"train", "--config", (dir / "missing.json").string()}), kValidationError);
  std::string err;
  EXPECT_EQ(run_cli({"train", "--override", "bogus=1", "--out-dir", dir.string()}, &err), kValidationError);
  EXPECT_NE(err.find("bogus"), std::string::npos);
  EXPECT_EQ(run_cli({"train", "--override", "room=hexagon", "--out-dir", dir.string()}), kValidationError);
  EXPECT_EQ(run_cli({"bind", "--override", "schema=/no/such/model", "--out-dir", dir.string()}), kValidationError);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{ not json";
  }
  EXPECT_EQ(run_cli({"train", "--config", (dir / "bad.json").string()}), kValidationError);
  {
    std::ofstream junk(dir / "junk.cscg");
    junk << "not a model";
  }
  EXPECT_EQ(run_cli({"bind", "--override", "schema=" + (dir / "junk.cscg").string(), "--out-dir", dir.string()}),
            kValidationError);
}

TEST(Cli, TrainThenBindProducesModelsAndTraces) {
  const fs::path dir = scratch_dir("train");
  const std::vector<std::string> train{"train", "--out-dir", (dir / "a").string(), "--override", "room=rectangle",
                                       "--override", "size=small", "--override", "walk_length=2000",
                                       "--override", "em.max_iters=20", "--seed", "3"};
  ASSERT_EQ(run_cli(train), kOk);
  auto again = train;
  again[2] = (dir / "b").string();
  ASSERT_EQ(run_cli(again), kOk);
  EXPECT_EQ(slurp(dir / "a" / "schema.cscg"), slurp(dir / "b" / "schema.cscg"));
  EXPECT_EQ(slurp(dir / "a" / "train_trace.csv"), slurp(dir / "b" / "train_trace.csv"));
  EXPECT_EQ(lines(slurp(dir / "a" / "train_trace.csv"))[1], "iteration,nll");

  ASSERT_EQ(run_cli({"bind", "--out-dir", (dir / "bind").string(), "--override",
                     "schema=" + (dir / "a" / "schema.cscg").string(), "--override", "size=small",
                     "--override", "walk_length=300", "--override", "em.max_iters=20"}),
            kOk);
  EXPECT_TRUE(fs::exists(dir / "bind" / "bound.cscg"));
  EXPECT_EQ(lines(slurp(dir / "bind" / "bind_trace.csv"))[1], "iteration,nll,ground_truth_nll");
}

TEST(Cli, CsvHeadersAreStable) {
  const fs::path dir = scratch_dir("golden");
  const struct {
    std::vector<std::string> args;
    std::string file;
    std::string header;
  } cases[] = {
      {{"compose", "--override", "lengths=[200]", "--override", "seeds=1", "--override", "test_walks=1",
        "--override", "test_length=100", "--override", "transition_em.max_iters=3", "--override",
        "scratch_em.max_iters=3", "--override", "emission_em.max_iters=3"},
       "compose.csv", "length,mode,seed,nll,ground_truth_nll"},
      {{"mpg", "--override", "learn_episodes=1", "--override", "episodes=1", "--override", "rounds=2"},
       "mpg_summary.csv",
       "episodes,mean_reward,sem_reward,ci95_reward,mean_first_task_steps,optimal_fraction,later_tasks"},
  };
  for (const auto& c : cases) {
    auto args = c.args;
    args.push_back("--out-dir");
    args.push_back(dir.string());
    ASSERT_EQ(run_cli(args), kOk) << c.file;
    EXPECT_EQ(lines(slurp(dir / c.file))[1], c.header);
  }
  ASSERT_EQ(run_cli({"report", "--input", (dir / "compose.csv").string(), "--group-by", "length,mode",
                     "--value", "nll", "--out-dir", dir.string()}),
            kOk);
  const auto rep = lines(slurp(dir / "report.csv"));
  EXPECT_EQ(rep[1], "length,mode,n,mean,sem,ci95");
  EXPECT_EQ(rep.size(), 4u);
}
