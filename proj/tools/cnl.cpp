// cnl: conflict-network pipeline driver.
//
//   cnl <stage> --config run.json [--out DIR] [--k 2] [--seed 42] ...
//
// Stages: ingest, graph, metrics, embed, aggression, geo, report, run (all).

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cnl/pipeline.hpp"

int main(int argc, char** argv) {
  namespace p = cnl::pipeline;
  CLI::App app{"Signed conflict-network and event-chain analysis"};
  app.require_subcommand(1, 1);

  std::optional<std::string> config;
  p::Overrides o;
  std::optional<std::string> out, events, catalog, mapping, borders;

  std::vector<CLI::App*> subs;
  for (const auto& stage : p::stage_names()) subs.push_back(app.add_subcommand(stage, "run the " + stage + " stage"));
  subs.push_back(app.add_subcommand("run", "run every stage in order"));
  for (auto* sub : subs) {
    sub->add_option("--config", config, "run configuration JSON");
    sub->add_option("--tie-mode", o.tie_mode, "full | paper_literal");
    sub->add_option("--k", o.k, "embedding dimension");
    sub->add_option("--seed", o.seed, "E/I permutation seed");
    sub->add_option("--permutations", o.permutations, "E/I permutations");
    sub->add_option("--workers", o.workers, "E/I permutation workers");
    sub->add_option("--scope", o.scope, "restrict the graph to actors tagged with this country");
    sub->add_option("--out", out, "output directory (overrides CNL_OUT)");
    sub->add_option("--events", events, "events CSV");
    sub->add_option("--catalog", catalog, "actor catalog JSON");
    sub->add_option("--mapping", mapping, "column mapping JSON");
    sub->add_option("--borders", borders, "borders GeoJSON");
  }
  CLI11_PARSE(app, argc, argv);

  if (out) o.out = *out;
  if (events) o.events = *events;
  if (catalog) o.catalog = *catalog;
  if (mapping) o.mapping = *mapping;
  if (borders) o.borders = *borders;

  p::RunConfig cfg;
  try {
    cfg = p::load_config(config ? std::optional<std::filesystem::path>(*config) : std::nullopt, o);
  } catch (const cnl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return p::exit_code_for(e.code());
  }
  return p::run(app.get_subcommands().front()->get_name(), cfg, std::cout, std::cerr);
}
