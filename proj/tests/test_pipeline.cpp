#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace cnl;
namespace p = cnl::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(std::string_view stage, const p::RunConfig& c, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = p::run(stage, c, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

json read(const fs::path& p) { return json::parse(fixture::slurp(p)); }

}  // namespace

TEST(Pipeline, FullRunProducesEveryArtifact) {
  const auto dir = fixture::scratch("full");
  const auto c = fixture::two_block_config(dir);
  std::string err;
  ASSERT_EQ(run("run", c, &err), 0) << err;
  for (const char* name : {"events.json", "row_errors.csv", "graph.json", "metrics.json", "embedding.json",
                           "embedding.csv", "embedding.svg", "aggression.json", "aggression.csv", "geo.json",
                           "year_table.csv", "chains.geojson", "scenario.json", "report.json",
                           "metrics_negative_degree.csv"}) {
    EXPECT_TRUE(fs::exists(c.out_dir / name)) << name;
  }
  for (const auto& f : fixture::files_in(c.out_dir)) EXPECT_NE(f.extension(), ".tmp");

  const json report = read(c.out_dir / "report.json");
  EXPECT_EQ(report["schema_version"], "1");
  EXPECT_EQ(report["config_digest"], c.digest());
  EXPECT_EQ(report["artifacts"]["ingest"]["events"], 120);
  EXPECT_EQ(report["artifacts"]["graph"]["nodes"].size(), 10u);
}

TEST(Pipeline, AttackersAreRed) {
  const auto dir = fixture::scratch("red");
  const auto c = fixture::two_block_config(dir, 11);
  ASSERT_EQ(run("run", c), 0);
  const json agg = read(c.out_dir / "aggression.json");
  ASSERT_EQ(agg["scores"].size(), 10u);
  for (const auto& s : agg["scores"]) {
    const std::string actor = s["actor"];
    if (actor.starts_with("Raiders")) {
      EXPECT_EQ(s["class"], "red") << actor;
    } else {
      EXPECT_EQ(s["class"], "green") << actor;
      EXPECT_EQ(s["outaggression"], 0.0);
    }
  }
  // Ranked by net aggression, so the raiders come first.
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(agg["scores"][i]["actor"].get<std::string>().starts_with("Raiders"));

  const json metrics = read(c.out_dir / "metrics.json");
  EXPECT_DOUBLE_EQ(metrics["layers"]["negative"]["ei"]["index"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(metrics["layers"]["positive"]["ei"]["index"].get<double>(), -1.0);
}

TEST(Pipeline, Deterministic) {
  const auto a = fixture::scratch("det_a");
  const auto b = fixture::scratch("det_b");
  auto ca = fixture::two_block_config(a);
  auto cb = ca;
  cb.out_dir = b / "out";
  ASSERT_EQ(run("run", ca), 0);
  ASSERT_EQ(run("run", cb), 0);
  const auto files = fixture::files_in(ca.out_dir);
  ASSERT_EQ(files, fixture::files_in(cb.out_dir));
  for (const auto& f : files) EXPECT_EQ(fixture::slurp(ca.out_dir / f), fixture::slurp(cb.out_dir / f)) << f;
}

TEST(Pipeline, SeedOnlyAffectsPermutationTest) {
  const auto dir = fixture::scratch("seed");
  auto c1 = fixture::two_block_config(dir);
  auto c2 = c1;
  c1.out_dir = dir / "s1";
  c2.out_dir = dir / "s2";
  c2.seed = 99;
  ASSERT_EQ(run("run", c1), 0);
  ASSERT_EQ(run("run", c2), 0);
  json r1 = read(c1.out_dir / "report.json"), r2 = read(c2.out_dir / "report.json");
  for (auto* r : {&r1, &r2}) {
    r->erase("config");
    r->erase("config_digest");
    r->erase("seed");
    for (const char* layer : {"negative", "positive"}) {
      auto& ei = (*r)["artifacts"]["metrics"]["layers"][layer]["ei"];
      ei.erase("p_value");
      ei.erase("seed");
    }
  }
  EXPECT_EQ(r1, r2);
}

TEST(Pipeline, MissingInputIsIoErrorWithoutOutputs) {
  const auto dir = fixture::scratch("missing");
  p::RunConfig c;
  c.events_csv = dir / "nope.csv";
  c.out_dir = dir / "out";
  EXPECT_EQ(run("ingest", c), 3);
  EXPECT_TRUE(fixture::files_in(c.out_dir).empty());
  // No path at all is a configuration problem, not an I/O failure.
  c.events_csv.reset();
  EXPECT_EQ(run("ingest", c), 2);
}

TEST(Pipeline, MalformedHeaderIsPipelineError) {
  const auto dir = fixture::scratch("header");
  fixture::write(dir / "bad.csv", "a,b,c\n1,2,3\n");
  p::RunConfig c;
  c.events_csv = dir / "bad.csv";
  c.out_dir = dir / "out";
  EXPECT_EQ(run("ingest", c), 4);
}

TEST(Pipeline, BadCatalogIsConfigError) {
  const auto dir = fixture::scratch("catalog");
  auto c = fixture::two_block_config(dir);
  fixture::write(dir / "catalog.json", R"({"schema_version": "1", "fallback_category": "militias",
    "actors": {"A": {"aliases": ["x"], "category": "rebels"}, "B": {"aliases": ["X"], "category": "rebels"}}})");
  EXPECT_EQ(run("ingest", c), 2);
}

TEST(Pipeline, NoTiesFailsAtEmbed) {
  const auto dir = fixture::scratch("noties");
  fixture::write(dir / "events.csv", std::string(fixture::kHeader) +
                                         "1X,01 May 2012,Violence against civilians,Mali,16,1,Raiders 1,,,,2\n");
  p::RunConfig c;
  c.events_csv = dir / "events.csv";
  c.out_dir = dir / "out";
  EXPECT_EQ(run("ingest", c), 0);
  EXPECT_EQ(run("graph", c), 0);
  std::string err;
  EXPECT_EQ(run("embed", c, &err), 4);
  EXPECT_NE(err.find("EmptyAfterIsolateRemoval"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(c.out_dir / "embedding.json"));
}

TEST(Pipeline, MissingUpstreamArtifact) {
  const auto dir = fixture::scratch("upstream");
  const auto c = fixture::two_block_config(dir);
  ASSERT_EQ(run("ingest", c), 0);
  ASSERT_EQ(run("graph", c), 0);
  std::string err;
  EXPECT_EQ(run("aggression", c, &err), 4);
  EXPECT_NE(err.find("embedding.json"), std::string::npos);
}

TEST(Pipeline, SchemaMismatch) {
  const auto dir = fixture::scratch("schema");
  const auto c = fixture::two_block_config(dir);
  ASSERT_EQ(run("ingest", c), 0);
  ASSERT_EQ(run("graph", c), 0);
  json g = read(c.out_dir / "graph.json");
  g["schema_version"] = "0";
  fixture::write(c.out_dir / "graph.json", g.dump());
  std::string err;
  EXPECT_EQ(run("metrics", c, &err), 4);
  EXPECT_NE(err.find("SchemaMismatch"), std::string::npos) << err;
  fixture::write(c.out_dir / "graph.json", "{ not json");
  EXPECT_EQ(run("metrics", c), 4);
}

TEST(Pipeline, StagesRerunInIsolation) {
  const auto dir = fixture::scratch("rerun");
  auto c = fixture::two_block_config(dir);
  ASSERT_EQ(run("run", c), 0);
  const auto before = fixture::slurp(c.out_dir / "aggression.json");
  ASSERT_EQ(run("aggression", c), 0);
  EXPECT_EQ(fixture::slurp(c.out_dir / "aggression.json"), before);
}

TEST(Pipeline, YearTableBorderColumnOnlyWithBorders) {
  const auto dir = fixture::scratch("year_table");
  auto with = fixture::two_block_config(dir);
  ASSERT_EQ(run("ingest", with), 0);
  ASSERT_EQ(run("geo", with), 0);
  const auto header_with = fixture::slurp(with.out_dir / "year_table.csv");
  EXPECT_NE(header_with.find("Average distance to borders (km)"), std::string::npos);

  auto without = with;
  without.borders.reset();
  ASSERT_EQ(run("geo", without), 0);
  const auto text = fixture::slurp(without.out_dir / "year_table.csv");
  EXPECT_EQ(text.find("borders"), std::string::npos);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "Year,Number of events,Cross-border movements (%),Number of victims,"
            "Average distance between events (km),Average time between events (days)");
  const json geo = read(without.out_dir / "geo.json");
  EXPECT_EQ(geo["years"].size(), 3u);
  EXPECT_EQ(geo["located_events"], 120);
}

TEST(Pipeline, ScopeKeepsTaggedActors) {
  const auto dir = fixture::scratch("scope");
  auto c = fixture::two_block_config(dir);
  ASSERT_EQ(run("ingest", c), 0);
  c.scope = "Atlantis";
  ASSERT_EQ(run("graph", c), 0);
  EXPECT_TRUE(read(c.out_dir / "graph.json")["nodes"].empty());
}

TEST(Pipeline, FilterByEventType) {
  const auto dir = fixture::scratch("filter");
  auto c = fixture::two_block_config(dir);
  c.event_types = {EventType::RiotsProtests};
  ASSERT_EQ(run("ingest", c), 0);
  EXPECT_EQ(read(c.out_dir / "events.json")["counts"]["events"], 0);
  EXPECT_EQ(read(c.out_dir / "events.json")["counts"]["records"], 120);
}

TEST(Config, FileFlagsAndEnvironmentPrecedence) {
  const auto dir = fixture::scratch("config");
  fixture::write(dir / "run.json", R"({"schema_version": "1", "paths": {"events_csv": "data/e.csv", "out": "o"},
    "tie_mode": "paper_literal", "embedding": {"k": 3}, "ei": {"seed": 5}, "geo": {"gap_mode": "cross_year"},
    "filter": {"event_types": ["Battle-Government regains territory"], "date_from": "2012-01-01"}})");
  p::Overrides o;
  o.seed = 9;
  const auto c = p::load_config(dir / "run.json", o);
  EXPECT_EQ(*c.events_csv, dir / "data/e.csv");
  EXPECT_EQ(c.out_dir, dir / "o");
  EXPECT_EQ(c.tie_mode, TieMode::PaperLiteral);
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.gap_mode, GapMode::CrossYear);
  EXPECT_EQ(c.event_types.size(), 1u);
  ASSERT_TRUE(c.date_from);
  EXPECT_EQ(format_iso(*c.date_from), "2012-01-01");

  ::setenv("CNL_OUT", "/tmp/from_env", 1);
  EXPECT_EQ(p::load_config(dir / "run.json", {}).out_dir, "/tmp/from_env");
  p::Overrides flag;
  flag.out = "/tmp/from_flag";
  EXPECT_EQ(p::load_config(dir / "run.json", flag).out_dir, "/tmp/from_flag");
  ::unsetenv("CNL_OUT");
}

TEST(Config, InvalidValuesAreConfigErrors) {
  const auto dir = fixture::scratch("config_bad");
  for (const char* text : {R"({"schema_version": "1", "embedding": {"k": 0}})",
                           R"({"schema_version": "1", "tie_mode": "sideways"})",
                           R"({"schema_version": "2"})", R"({"schema_version": "1", "ei": {"permutations": "many"}})",
                           "not json"}) {
    fixture::write(dir / "run.json", text);
    try {
      p::load_config(dir / "run.json", {});
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(p::exit_code_for(e.code()), 2) << text;
    }
  }
  try {
    p::load_config(dir / "absent.json", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
}

TEST(Config, DigestIgnoresOutputDirectory) {
  p::RunConfig a, b;
  b.out_dir = "elsewhere";
  EXPECT_EQ(a.digest(), b.digest());
  b.k = 3;
  EXPECT_NE(a.digest(), b.digest());
  EXPECT_EQ(a.digest().size(), 16u);
}

TEST(Pipeline, UnknownCommand) { EXPECT_EQ(run("bogus", p::RunConfig{}), 2); }

TEST(Pipeline, PerActorScenariosForRequestedActors) {
  const auto dir = fixture::scratch("per_actor");
  auto c = fixture::two_block_config(dir);
  c.actors = std::vector<std::string>{"Raiders 1", "Raiders 2"};
  ASSERT_EQ(run("ingest", c), 0);
  ASSERT_EQ(run("geo", c), 0);
  const json per_actor = read(c.out_dir / "scenario.json")["per_actor"];
  ASSERT_EQ(per_actor.size(), 2u);
  EXPECT_TRUE(per_actor.contains("Raiders 1"));
  EXPECT_TRUE(per_actor["Raiders 2"].contains("verdict"));
}

TEST(Pipeline, JsonArtifactsCarrySchemaAndDigest) {
  const auto dir = fixture::scratch("stamps");
  const auto c = fixture::two_block_config(dir);
  ASSERT_EQ(run("run", c), 0);
  for (const auto& f : fixture::files_in(c.out_dir)) {
    if (f.extension() != ".json" && f.extension() != ".geojson") continue;
    const json doc = read(c.out_dir / f);
    EXPECT_EQ(doc["schema_version"], "1") << f;
    EXPECT_EQ(doc["config_digest"], c.digest()) << f;
  }
  const auto degree = fixture::slurp(c.out_dir / "metrics_negative_degree.csv");
  EXPECT_NE(degree.find("\nMean,"), std::string::npos);
  EXPECT_NE(degree.find("\nStd. Dev.,"), std::string::npos);
}
