#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "langspace/catalog.hpp"
#include "langspace/embedding.hpp"
#include "langspace/errors.hpp"
#include "langspace/evalharness.hpp"
#include "langspace/metalearner.hpp"
#include "langspace/metrics.hpp"
#include "langspace/version.hpp"
#include "langspace/zeroshot.hpp"

namespace {

using namespace langspace;
using json = nlohmann::json;

std::string num(double v) { return json(v).dump(); }

struct GlobalOpts {
  std::uint64_t seed = 42;  // default for every per-command --seed
  bool quiet = false;
};

struct CatalogOpts {
  std::string catalog;
  std::string inventories;
};

void add_catalog_opts(CLI::App* cmd, CatalogOpts& opts) {
  cmd->add_option("--catalog", opts.catalog, "Languages file (JSON)")
      ->required();
  cmd->add_option("--inventories", opts.inventories,
                  "Inventories file (JSON object id -> [phonemes])");
}

// Accepts either the two-file form (array of language records + optional
// inventories object) or the canonical single-file form.
Catalog open_catalog(const CatalogOpts& opts, LoadReport* report = nullptr) {
  if (!opts.inventories.empty())
    return load_catalog(opts.catalog, opts.inventories, report);
  std::ifstream in(opts.catalog);
  char first = 0;
  in >> first;
  if (first == '{') return load_catalog_canonical(opts.catalog);
  return load_catalog(opts.catalog, report);
}

void print_warnings(const LoadReport& report, const GlobalOpts& g) {
  if (g.quiet) return;
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<int> parse_k_range(const std::string& text) {
  auto parse_int = [&](const std::string& s) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != s.size())
      throw ValidationError("bad k value '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<int> ks;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = parse_int(text.substr(0, dots));
    const int hi = parse_int(text.substr(dots + 2));
    if (lo > hi) throw ValidationError("empty k range '" + text + "'");
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    ks.push_back(parse_int(piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ks;
}

std::optional<double> parse_threshold(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size())
    throw ValidationError("threshold must be a number or 'auto', got '" +
                          text + "'");
  return v;
}

bool file_exists(const std::string& path) {
  return std::ifstream(path).good();
}

// ---------------------------------------------------------------- commands

struct ValidateOpts {
  CatalogOpts cat;
};

int run_catalog_validate(const ValidateOpts& o, const GlobalOpts& g) {
  LoadReport report;
  Catalog catalog = open_catalog(o.cat, &report);
  print_warnings(report, g);
  if (!g.quiet)
    std::cout << "catalog OK: " << catalog.size() << " languages, "
              << catalog.phoneme_universe().size() << " phonemes, "
              << report.warnings.size() << " warnings\n";
  return 0;
}

struct MetricsOpts {
  CatalogOpts cat;
  std::string pairs = "all";
  std::string out;
};

int run_metrics_compute(const MetricsOpts& o, const GlobalOpts& g) {
  LoadReport report;
  Catalog catalog = open_catalog(o.cat, &report);
  print_warnings(report, g);

  std::vector<std::pair<std::string, std::string>> pairs;
  if (o.pairs == "all") {
    const auto& langs = catalog.languages();
    for (std::size_t i = 0; i < langs.size(); ++i)
      for (std::size_t j = i + 1; j < langs.size(); ++j)
        pairs.emplace_back(langs[i].id, langs[j].id);
  } else {
    std::ifstream in(o.pairs);
    if (!in) throw ParseError("cannot open '" + o.pairs + "'");
    json jp;
    try {
      in >> jp;
    } catch (const json::exception& e) {
      throw ParseError("invalid JSON in '" + o.pairs + "': " + e.what());
    }
    if (!jp.is_array())
      throw ParseError(o.pairs + ": expected a JSON array of [id_a, id_b]");
    for (const auto& row : jp) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_string() ||
          !row[1].is_string())
        throw ParseError(o.pairs + ": each pair must be two id strings");
      pairs.emplace_back(row[0].get<std::string>(), row[1].get<std::string>());
    }
  }

  std::ofstream out(o.out);
  if (!out) throw InternalError("cannot write '" + o.out + "'");
  out << "id_a,id_b,tree,map,inv_asp,mean\n";
  for (const auto& [a, b] : pairs) {
    const MetricVector m = metric_vector(catalog, a, b);
    out << a << "," << b << "," << num(m.tree) << "," << num(m.map) << ","
        << num(m.inv_asp) << "," << num(m.mean()) << "\n";
  }
  if (!g.quiet)
    std::cout << "wrote " << o.out << " (" << pairs.size() << " pairs)\n";
  return 0;
}

struct FitOpts {
  CatalogOpts cat;
  int dim = 16;
  LessConfig cfg;
  std::string sampling = "all";
  std::string out;
};

int run_less_fit(const FitOpts& o, const GlobalOpts& g) {
  LoadReport report;
  Catalog catalog = open_catalog(o.cat, &report);
  print_warnings(report, g);

  LessConfig cfg = o.cfg;
  if (o.sampling == "all") {
    cfg.pair_sampling = LessConfig::PairSampling::all_pairs;
  } else if (o.sampling == "uniform") {
    cfg.pair_sampling = LessConfig::PairSampling::uniform_k_per_language;
  } else {
    throw ValidationError("--sampling must be 'all' or 'uniform'");
  }

  FitReport fit;
  EmbeddingTable table = fit_embeddings(catalog, o.dim, cfg, &fit);
  save_table(table, o.out);
  if (!g.quiet)
    std::cout << "fitted dim-" << o.dim << " embeddings for " << catalog.size()
              << " languages: loss " << fit.initial_loss << " -> "
              << fit.final_loss << " (" << fit.pair_count << " pairs, "
              << fit.epochs << " epochs)\n";
  return 0;
}

struct SynthOpts {
  CatalogOpts cat;
  int dim = 16;
  std::uint64_t seed = 42;
  double noise = 0.05;
  std::string out;
};

int run_less_synth(const SynthOpts& o, const GlobalOpts& g) {
  LoadReport report;
  Catalog catalog = open_catalog(o.cat, &report);
  print_warnings(report, g);
  EmbeddingTable table = synthesize_embeddings(catalog, o.dim, o.seed, o.noise);
  save_table(table, o.out);
  if (!g.quiet)
    std::cout << "synthesized dim-" << o.dim << " embeddings for "
              << catalog.size() << " languages (seed " << o.seed << ", noise "
              << o.noise << ")\n";
  return 0;
}

struct TrainOpts {
  CatalogOpts cat;
  std::string embeddings;
  TrainConfig cfg;
  std::string out;
};

int run_meta_train(const TrainOpts& o, const GlobalOpts& g) {
  LoadReport report;
  Catalog catalog = open_catalog(o.cat, &report);
  print_warnings(report, g);
  EmbeddingTable table = load_table(o.embeddings);
  TrainReport train_report;
  MetaLearner ml = train(catalog, table, o.cfg, &train_report);
  save_model(ml, o.out, &train_report);
  if (!g.quiet)
    std::cout << "trained model: best val MSE " << train_report.best_val_loss
              << " at epoch " << train_report.best_epoch << " ("
              << train_report.epochs_run << " epochs run, "
              << train_report.halvings << " halvings)\n";
  return 0;
}

struct ApproximateOpts {
  CatalogOpts cat;
  std::string embeddings;
  std::string model;
  std::string target;
  NeighborPolicy policy;
  std::string threshold = "auto";
  std::string out;
};

int run_zeroshot_approximate(const ApproximateOpts& o, const GlobalOpts& g) {
  LoadReport report;
  Catalog catalog = open_catalog(o.cat, &report);
  print_warnings(report, g);
  EmbeddingTable table = load_table(o.embeddings);
  MetaLearner ml = load_model(o.model);

  NeighborPolicy policy = o.policy;
  policy.threshold = parse_threshold(o.threshold);

  std::set<std::string> supervised;
  for (const auto& lang : catalog.languages())
    if (table.entries.count(lang.id)) supervised.insert(lang.id);

  NeighborSelection sel;
  if (catalog.contains(o.target)) {
    sel = select_neighbors(catalog, ml, supervised, table, o.target, policy);
  } else if (file_exists(o.target)) {
    const Language target = load_language(o.target);
    sel = select_neighbors(catalog, ml, supervised, table, target, policy);
  } else {
    throw ValidationError("--target '" + o.target +
                          "' is neither a catalog id nor a readable file");
  }

  json jout;
  jout["target"] = sel.target;
  jout["threshold_used"] = sel.threshold_used;
  jout["neighbors"] = json::array();
  for (const auto& [id, dist] : sel.neighbors)
    jout["neighbors"].push_back({{"id", id}, {"distance", dist}});
  jout["approximated"] = sel.approximated;
  std::ofstream out(o.out);
  if (!out) throw InternalError("cannot write '" + o.out + "'");
  out << jout.dump(2) << "\n";

  if (!g.quiet)
    std::cout << "approximated '" << sel.target << "' from "
              << sel.neighbors.size() << " neighbors (threshold "
              << sel.threshold_used << ")\n";
  return 0;
}

struct ReconstructOpts {
  CatalogOpts cat;
  std::string embeddings;
  std::string model;
  std::string policies = "all";
  std::string k = "1..30";
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "auto";
};

int run_eval_reconstruct(const ReconstructOpts& o, const GlobalOpts& g) {
  LoadReport load_report;
  Catalog catalog = open_catalog(o.cat, &load_report);
  print_warnings(load_report, g);
  EmbeddingTable table = load_table(o.embeddings);

  std::vector<std::string> names;
  if (o.policies == "all") {
    names = {"random", "inv_asp", "tree", "map", "avg", "learned"};
  } else {
    std::size_t start = 0;
    while (start <= o.policies.size()) {
      const auto comma = o.policies.find(',', start);
      names.push_back(o.policies.substr(
          start,
          comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  MetaLearner ml;
  bool model_loaded = false;
  std::vector<Policy> policies;
  for (const auto& name : names) {
    Policy p;
    if (name == "random") {
      p.kind = Policy::Kind::random_pick;
      p.seed = o.seed;
    } else if (name == "inv_asp") {
      p.kind = Policy::Kind::inv_asp;
    } else if (name == "tree") {
      p.kind = Policy::Kind::tree;
    } else if (name == "map") {
      p.kind = Policy::Kind::map;
    } else if (name == "avg") {
      p.kind = Policy::Kind::avg;
    } else if (name == "learned") {
      if (o.model.empty())
        throw ValidationError("policy 'learned' needs --model");
      if (!model_loaded) {
        ml = load_model(o.model);
        model_loaded = true;
      }
      p.kind = Policy::Kind::learned;
      p.model = &ml;
    } else {
      throw ValidationError("unknown policy '" + name + "'");
    }
    policies.push_back(p);
  }

  ReconstructionReport report =
      reconstruct_all(catalog, table, policies, parse_k_range(o.k));
  report.seed = o.seed;
  report.catalog_file = o.cat.catalog;
  report.table_file = o.embeddings;

  ReportFormat format;
  if (o.format == "csv") {
    format = ReportFormat::csv;
  } else if (o.format == "json") {
    format = ReportFormat::json;
  } else if (o.format == "auto") {
    format = o.out.size() >= 5 && o.out.substr(o.out.size() - 5) == ".json"
                 ? ReportFormat::json
                 : ReportFormat::csv;
  } else {
    throw ValidationError("--format must be csv, json or auto");
  }
  export_report(report, o.out, format);

  if (!g.quiet) {
    std::cout << "wrote " << o.out << ": " << policies.size()
              << " policies x " << report.k_range.size() << " ks over "
              << catalog.size() << " languages\n";
    for (const auto& [name, area] : policy_mse_ordering(report))
      std::cout << "  auc " << name << " " << area << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language embedding space toolkit"};
  app.set_version_flag("--version", std::string("langspace ") + kToolVersion +
                                        " (file format " +
                                        kFileFormatVersion + ")");
  app.require_subcommand(1);
  app.fallthrough();

  auto global = std::make_shared<GlobalOpts>();
  app.add_option("--seed", global->seed,
                 "Default seed for every stochastic subcommand");
  app.add_flag("--quiet", global->quiet, "Suppress warnings and summaries");

  auto* catalog_cmd = app.add_subcommand("catalog", "Catalog inspection");
  catalog_cmd->require_subcommand(1);
  auto validate_opts = std::make_shared<ValidateOpts>();
  auto* validate_cmd =
      catalog_cmd->add_subcommand("validate", "Load and validate a catalog");
  add_catalog_opts(validate_cmd, validate_opts->cat);

  auto* metrics_cmd = app.add_subcommand("metrics", "Pairwise distances");
  metrics_cmd->require_subcommand(1);
  auto metrics_opts = std::make_shared<MetricsOpts>();
  auto* compute_cmd = metrics_cmd->add_subcommand(
      "compute", "Compute tree/map/inv_asp distances to CSV");
  add_catalog_opts(compute_cmd, metrics_opts->cat);
  compute_cmd->add_option("--pairs", metrics_opts->pairs,
                          "'all' or a JSON file of [id_a, id_b] pairs");
  compute_cmd->add_option("--out", metrics_opts->out, "Output CSV")
      ->required();

  auto* less_cmd = app.add_subcommand("less", "Embedding-space structure");
  less_cmd->require_subcommand(1);
  auto fit_opts = std::make_shared<FitOpts>();
  auto* fit_cmd = less_cmd->add_subcommand(
      "fit", "Fit embeddings to the metric means by gradient descent");
  add_catalog_opts(fit_cmd, fit_opts->cat);
  fit_cmd->add_option("--dim", fit_opts->dim, "Embedding dimension");
  fit_cmd->add_option("--epochs", fit_opts->cfg.epochs, "Training epochs");
  fit_cmd->add_option("--lr", fit_opts->cfg.learning_rate, "Learning rate");
  auto* fit_seed = fit_cmd->add_option("--seed", fit_opts->cfg.seed, "PRNG seed");
  fit_cmd->add_option("--sampling", fit_opts->sampling,
                      "'all' pairs or 'uniform' k per language");
  fit_cmd->add_option("--sample-k", fit_opts->cfg.sample_k,
                      "Pairs per language under uniform sampling");
  fit_cmd->add_option("--out", fit_opts->out, "Output table JSON")->required();

  auto synth_opts = std::make_shared<SynthOpts>();
  auto* synth_cmd = less_cmd->add_subcommand(
      "synth", "Synthesize a ground-truth embedding table");
  add_catalog_opts(synth_cmd, synth_opts->cat);
  synth_cmd->add_option("--dim", synth_opts->dim, "Embedding dimension");
  auto* synth_seed = synth_cmd->add_option("--seed", synth_opts->seed, "PRNG seed");
  synth_cmd->add_option("--noise", synth_opts->noise,
                        "Pairwise distance noise scale");
  synth_cmd->add_option("--out", synth_opts->out, "Output table JSON")
      ->required();

  auto* meta_cmd = app.add_subcommand("meta", "Learned distance function");
  meta_cmd->require_subcommand(1);
  auto train_opts = std::make_shared<TrainOpts>();
  auto* train_cmd = meta_cmd->add_subcommand(
      "train", "Train the perceptron on catalog pair distances");
  add_catalog_opts(train_cmd, train_opts->cat);
  train_cmd->add_option("--embeddings", train_opts->embeddings,
                        "Embedding table JSON")
      ->required();
  train_cmd->add_option("--epochs", train_opts->cfg.epochs, "Training epochs");
  train_cmd->add_option("--lr", train_opts->cfg.learning_rate,
                        "Learning rate");
  auto* train_seed =
      train_cmd->add_option("--seed", train_opts->cfg.seed, "PRNG seed");
  train_cmd->add_option("--val-fraction", train_opts->cfg.validation_fraction,
                        "Validation split fraction");
  train_cmd->add_option("--patience", train_opts->cfg.patience,
                        "Early-stop patience (epochs)");
  train_cmd->add_option("--out", train_opts->out, "Output model JSON")
      ->required();

  auto* zeroshot_cmd = app.add_subcommand("zeroshot", "Unseen languages");
  zeroshot_cmd->require_subcommand(1);
  auto approx_opts = std::make_shared<ApproximateOpts>();
  auto* approx_cmd = zeroshot_cmd->add_subcommand(
      "approximate", "Approximate an embedding from nearest neighbors");
  add_catalog_opts(approx_cmd, approx_opts->cat);
  approx_cmd->add_option("--embeddings", approx_opts->embeddings,
                         "Embedding table JSON")
      ->required();
  approx_cmd->add_option("--model", approx_opts->model, "Model JSON")
      ->required();
  approx_cmd->add_option("--target", approx_opts->target,
                         "Catalog id or JSON file with a language record")
      ->required();
  approx_cmd->add_option("--k-min", approx_opts->policy.k_min,
                         "Minimum neighbors");
  approx_cmd->add_option("--k-max", approx_opts->policy.k_max,
                         "Maximum neighbors");
  approx_cmd->add_option("--threshold", approx_opts->threshold,
                         "Distance threshold or 'auto'");
  approx_cmd->add_flag("--weighted", approx_opts->policy.distance_weighted,
                       "Inverse-distance weighted mean");
  approx_cmd->add_option("--out", approx_opts->out, "Output JSON")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Benchmarks");
  eval_cmd->require_subcommand(1);
  auto recon_opts = std::make_shared<ReconstructOpts>();
  auto* recon_cmd = eval_cmd->add_subcommand(
      "reconstruct", "Leave-one-out reconstruction benchmark");
  add_catalog_opts(recon_cmd, recon_opts->cat);
  recon_cmd->add_option("--embeddings", recon_opts->embeddings,
                        "Embedding table JSON")
      ->required();
  recon_cmd->add_option("--model", recon_opts->model,
                        "Model JSON (for the learned policy)");
  recon_cmd->add_option("--policies", recon_opts->policies,
                        "'all' or comma-separated policy names");
  recon_cmd->add_option("--k", recon_opts->k, "k range, e.g. 1..30 or 5,10");
  auto* recon_seed = recon_cmd->add_option(
      "--seed", recon_opts->seed, "Master seed for the random policy");
  recon_cmd->add_option("--out", recon_opts->out, "Output report")->required();
  recon_cmd->add_option("--format", recon_opts->format,
                        "csv, json, or auto (by extension)");

  validate_cmd->callback(
      [validate_opts, global] { run_catalog_validate(*validate_opts, *global); });
  compute_cmd->callback(
      [metrics_opts, global] { run_metrics_compute(*metrics_opts, *global); });
  fit_cmd->callback([fit_opts, fit_seed, global] {
    if (fit_seed->count() == 0) fit_opts->cfg.seed = global->seed;
    run_less_fit(*fit_opts, *global);
  });
  synth_cmd->callback([synth_opts, synth_seed, global] {
    if (synth_seed->count() == 0) synth_opts->seed = global->seed;
    run_less_synth(*synth_opts, *global);
  });
  train_cmd->callback([train_opts, train_seed, global] {
    if (train_seed->count() == 0) train_opts->cfg.seed = global->seed;
    run_meta_train(*train_opts, *global);
  });
  approx_cmd->callback(
      [approx_opts, global] { run_zeroshot_approximate(*approx_opts, *global); });
  recon_cmd->callback([recon_opts, recon_seed, global] {
    if (recon_seed->count() == 0) recon_opts->seed = global->seed;
    run_eval_reconstruct(*recon_opts, *global);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const MetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
