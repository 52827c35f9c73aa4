/*
 * Copyright 2026 The Propagator Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.h"

#include <csignal>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "propagator/classify.h"
#include "propagator/corpus.h"
#include "propagator/features.h"
#include "propagator/http_api.h"
#include "propagator/metrics.h"
#include "propagator/personality.h"
#include "propagator/preprocess.h"
#include "propagator/recommend.h"
#include "propagator/service.h"
#include "propagator/simulate.h"
#include "propagator/util.h"
#include "propagator/waittime.h"

namespace propagator::cli {

namespace fs = std::filesystem;

namespace {

// Rejects output paths whose directory does not exist, before any work runs.
const CLI::Validator kWritablePath(
    [](std::string& p) -> std::string {
      const auto parent = fs::path(p).parent_path();
      if (!parent.empty() && !fs::is_directory(parent)) return "directory does not exist: " + parent.string();
      return {};
    },
    "PATH");

// Runs a module parser at argument-parse time so bad values are usage errors.
template <typename F>
CLI::Validator parses_as(F parse, std::string name) {
  return CLI::Validator(
      [parse](std::string& v) -> std::string {
        try {
          parse(v);
        } catch (const Error& e) {
          return e.what();
        }
        return {};
      },
      name);
}

const CLI::Validator kImbalance = parses_as([](const std::string& v) { ImbalanceSetting::parse(v); }, "SETTING");
const CLI::Validator kModelKind = parses_as([](const std::string& v) { parse_model_kind(v); }, "KIND");
const CLI::Validator kDuration = parses_as([](const std::string& v) { parse_duration(v); }, "DURATION");
const CLI::Validator kStrategies = parses_as(
    [](const std::string& v) {
      if (parse_strategies(v).size() < 2) throw Error("InvalidStrategy", "need at least two strategies");
    },
    "LIST");

struct Resources {
  std::string lexicon_path;
  std::string traits_path;
  std::unique_ptr<Lexicon> lexicon;
  std::unique_ptr<TraitMapping> mapping;

  void load() {
    lexicon = std::make_unique<Lexicon>(lexicon_path.empty() ? default_lexicon() : load_lexicon(lexicon_path));
    mapping = std::make_unique<TraitMapping>(traits_path.empty() ? default_trait_mapping()
                                                                 : load_trait_mapping(traits_path));
  }
};

void add_resources(CLI::App* cmd, Resources& r) {
  cmd->add_option("--lexicon", r.lexicon_path, "Lexicon file (default: bundled)")->check(CLI::ExistingFile);
  cmd->add_option("--traits", r.traits_path, "Trait mapping JSON (default: bundled)")->check(CLI::ExistingFile);
}

void emit(std::ostream& out, const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") out << content;
  else write_file_atomic(path, content);
}

std::vector<std::string> read_mask(const std::string& path) {
  return path.empty() ? std::vector<std::string>{} : parse_feature_list(read_file(path));
}

struct TrainArgs {
  std::string data, out, kind = "random_forest", imbalance = "basic", features;
  uint64_t seed = 0;
  int trees = 100;
};

struct EvaluateArgs {
  std::string model, data, train, out, features, csv;
  bool grid = false;
  double threshold = 0.5;
  uint64_t seed = 0;
  bool no_svm_row = false;
};

struct SelectArgs {
  std::string data, out, selected_out;
  int bins = kDefaultChiSquaredBins;
};

struct SimulateArgs {
  std::string config, out, train_out, test_out;
  uint64_t seed = 0;
  int n_users = 0;
  double train_fraction = 2.0 / 3.0;
};

struct ExperimentArgs {
  std::string config, strategies = "random,popular:100,predicted,predicted_waittime:24h:0.7", out,
                      model_kind = "random_forest", imbalance = "weighted:30", deadline = "24h";
  uint64_t seed = 0;
  std::size_t budget = 100;
};

struct RecommendArgs {
  std::string model, data, out, deadline = "24h";
  double cutoff = kDefaultCutoff;
  std::size_t top_n = 10;
  Timestamp request_time = 0;
};

struct ServeArgs {
  std::string host = "127.0.0.1", log_dir, simulate_config;
  int port = 8080;
  uint64_t seed = 0;
  Timestamp simulated_start = 0;
  std::size_t message_limit = kDefaultMessageLimit;
};

int do_train(const TrainArgs& a, Resources& r, std::ostream& out) {
  r.load();
  FeatureExtractor extractor(*r.lexicon, *r.mapping);
  const auto ds = load_dataset(a.data);
  ModelSpec spec;
  spec.kind = parse_model_kind(a.kind);
  spec.imbalance = ImbalanceSetting::parse(a.imbalance);
  spec.seed = a.seed;
  spec.trees = a.trees;
  const auto model = train(spec, build_table(ds, extractor), read_mask(a.features));
  save_model(model, a.out);
  out << "model " << model.id << " (" << model_display_name(spec.kind) << ", " << a.imbalance << ", "
      << ds.size() << " users) written to " << a.out << '\n';
  return 0;
}

int do_evaluate(const EvaluateArgs& a, Resources& r, std::ostream& out) {
  r.load();
  FeatureExtractor extractor(*r.lexicon, *r.mapping);
  const auto test = build_table(load_dataset(a.data), extractor);
  std::vector<ReportGroup> groups;
  if (a.grid) {
    GridOptions g;
    g.seed = a.seed;
    g.mask = read_mask(a.features);
    groups = evaluate_grid(build_table(load_dataset(a.train), extractor), test, g);
  } else {
    const auto model = load_model(a.model);
    groups.push_back({"Model", {evaluate(model, test, a.threshold)}});
  }
  const auto table = render_report_table(groups, a.grid && !a.no_svm_row);
  emit(out, a.out, table);
  if (!a.csv.empty()) write_file_atomic(a.csv, render_report_csv(groups));
  return 0;
}

int do_select(const SelectArgs& a, Resources& r, std::ostream& out) {
  r.load();
  FeatureExtractor extractor(*r.lexicon, *r.mapping);
  const auto scores = chi_squared_scores(build_table(load_dataset(a.data), extractor), a.bins);
  emit(out, a.out, feature_scores_csv(scores));
  if (!a.selected_out.empty()) {
    std::string list;
    for (const auto& n : selected_features(scores)) list += n + "\n";
    write_file_atomic(a.selected_out, list);
  }
  return 0;
}

PopulationConfig load_config(const std::string& path) {
  return path.empty() ? PopulationConfig{} : load_population_config(path);
}

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  auto config = load_config(a.config);
  config.seed = a.seed;
  if (a.n_users > 0) config.n_users = a.n_users;
  config.validate();
  const auto users = generate_population(config);
  const auto ds = label_population(users, config.request_time, derive_seed(a.seed, "label"), "simulated");
  emit(out, a.out, dataset_to_jsonl(ds));
  if (!a.train_out.empty() || !a.test_out.empty()) {
    const auto [tr, te] = stratified_split(ds, a.train_fraction, derive_seed(a.seed, "split"));
    if (!a.train_out.empty()) save_dataset(tr, a.train_out);
    if (!a.test_out.empty()) save_dataset(te, a.test_out);
  }
  return 0;
}

int do_experiment(const ExperimentArgs& a, Resources& r, std::ostream& out) {
  r.load();
  auto config = load_config(a.config);
  config.seed = a.seed;
  ExperimentOptions o;
  o.strategies = parse_strategies(a.strategies);
  o.budget = a.budget;
  o.window = parse_duration(a.deadline);
  o.seed = a.seed;
  o.model_spec.kind = parse_model_kind(a.model_kind);
  o.model_spec.imbalance = ImbalanceSetting::parse(a.imbalance);
  const auto result = run_experiment(config, o, *r.lexicon, *r.mapping);
  std::ostringstream s;
  s << result.table.text() << "held-out AUC " << format_fixed(result.test_auc, 3) << " (train " << result.train_size
    << ", test " << result.test_size << ")\n";
  out << s.str();
  if (!a.out.empty()) write_file_atomic(a.out, result.table.csv());
  return 0;
}

int do_recommend(const RecommendArgs& a, Resources& r, std::ostream& out) {
  r.load();
  FeatureExtractor extractor(*r.lexicon, *r.mapping);
  const auto model = load_model(a.model);
  const auto users = load_users(a.data);
  Timestamp now = a.request_time;
  if (now == 0)
    for (const auto& u : users) {
      now = std::max(now, u.created_at);
      if (!u.timeline.empty()) now = std::max(now, u.timeline.back().timestamp);
    }
  std::vector<WaitTimeModel> waits;
  for (const auto& u : users) waits.push_back(fit_wait_time(u, kDefaultFallbackWait));
  const double fallback = population_fallback(waits);
  std::vector<ScoredCandidate> cs;
  for (std::size_t i = 0; i < users.size(); ++i) {
    ScoredCandidate c;
    c.user_id = users[i].user_id;
    c.retweet_probability = predict_proba(model, extractor.assemble(users[i], now));
    c.followers_count = users[i].followers_count;
    c.mean_wait = waits[i].source == WaitSource::kHistory ? waits[i].mean_wait : fallback;
    cs.push_back(std::move(c));
  }
  const auto ranked = rank_candidates(std::move(cs), parse_duration(a.deadline), a.cutoff, a.top_n);
  emit(out, a.out, candidates_to_json(ranked).dump(2) + "\n");
  return 0;
}

HttpServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

int do_serve(const ServeArgs& a, Resources& r, std::ostream& out) {
  r.load();
  auto extractor = std::make_shared<const FeatureExtractor>(*r.lexicon, *r.mapping);
  ServiceOptions o;
  o.log_dir = a.log_dir;
  o.extractor = extractor;
  o.message_limit = a.message_limit;
  std::shared_ptr<SimulatedClock> sim_clock;
  if (a.simulated_start > 0) {
    sim_clock = std::make_shared<SimulatedClock>(a.simulated_start);
    o.clock = sim_clock;
  }
  if (!a.simulate_config.empty()) {
    auto config = load_population_config(a.simulate_config);
    config.seed = a.seed;
    o.backend = std::make_shared<SimulatorBackend>(generate_population(config), derive_seed(a.seed, "dispatch"));
  }
  CampaignService service(std::move(o));
  HttpServer server(service, sim_clock.get());
  const int port = server.bind(a.host, a.port);
  out << "listening on http://" << a.host << ":" << port << std::endl;
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retweeter recommendation toolkit"};
  app.name("propagator");
  app.require_subcommand(1);
  Resources res;

  TrainArgs train_a;
  auto* train_cmd = app.add_subcommand("train", "Train a retweeter classifier");
  train_cmd->add_option("--data", train_a.data, "Labeled JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_a.out, "Model file")->required()->check(kWritablePath);
  train_cmd->add_option("--model-kind", train_a.kind, "random_forest|naive_bayes|logistic|adaboost")
      ->capture_default_str()
      ->check(kModelKind);
  train_cmd->add_option("--imbalance", train_a.imbalance, "basic|smote|weighted:R")
      ->capture_default_str()
      ->check(kImbalance);
  train_cmd->add_option("--seed", train_a.seed, "Random seed")->required();
  train_cmd->add_option("--features", train_a.features, "Selected feature list")->check(CLI::ExistingFile);
  train_cmd->add_option("--trees", train_a.trees, "Forest size")->capture_default_str()->check(CLI::PositiveNumber);
  add_resources(train_cmd, res);

  EvaluateArgs eval_a;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model (or the full grid) on a test set");
  eval_cmd->add_option("--data", eval_a.data, "Labeled test JSONL")->required()->check(CLI::ExistingFile);
  auto* model_opt = eval_cmd->add_option("--model", eval_a.model, "Model file")->check(CLI::ExistingFile);
  auto* grid_flag = eval_cmd->add_flag("--grid", eval_a.grid, "Train and compare every kind and setting");
  eval_cmd->add_option("--train", eval_a.train, "Training JSONL for --grid")->check(CLI::ExistingFile);
  eval_cmd->add_option("--seed", eval_a.seed, "Random seed for --grid");
  eval_cmd->add_option("--features", eval_a.features, "Selected feature list for --grid")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--threshold", eval_a.threshold, "Decision threshold")->capture_default_str();
  eval_cmd->add_option("--out", eval_a.out, "Report table path")->check(kWritablePath);
  eval_cmd->add_option("--csv", eval_a.csv, "Also write CSV here")->check(kWritablePath);
  eval_cmd->add_flag("--no-svm-row", eval_a.no_svm_row, "Omit the placeholder SMO row");
  model_opt->excludes(grid_flag);
  add_resources(eval_cmd, res);

  SelectArgs sel_a;
  auto* sel_cmd = app.add_subcommand("select-features", "Rank features by chi-squared");
  sel_cmd->add_option("--data", sel_a.data, "Labeled training JSONL")->required()->check(CLI::ExistingFile);
  sel_cmd->add_option("--bins", sel_a.bins, "Equal-frequency bins")->capture_default_str()->check(
      CLI::Range(2, 1000));
  sel_cmd->add_option("--out", sel_a.out, "Scores CSV (default stdout)")->check(kWritablePath);
  sel_cmd->add_option("--selected-out", sel_a.selected_out, "Selected feature names")->check(kWritablePath);
  add_resources(sel_cmd, res);

  SimulateArgs sim_a;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a labeled synthetic population");
  sim_cmd->add_option("--config", sim_a.config, "Population config JSON")->check(CLI::ExistingFile);
  sim_cmd->add_option("--seed", sim_a.seed, "Random seed")->required();
  sim_cmd->add_option("--n-users", sim_a.n_users, "Override population size");
  sim_cmd->add_option("--out", sim_a.out, "Labeled JSONL (default stdout)")->check(kWritablePath);
  sim_cmd->add_option("--train-out", sim_a.train_out, "Stratified training split")->check(kWritablePath);
  sim_cmd->add_option("--test-out", sim_a.test_out, "Stratified test split")->check(kWritablePath);
  sim_cmd->add_option("--train-fraction", sim_a.train_fraction, "Training share")->check(CLI::Range(0.0, 1.0));

  ExperimentArgs exp_a;
  auto* exp_cmd = app.add_subcommand("experiment", "Compare contact strategies on a synthetic population");
  exp_cmd->add_option("--config", exp_a.config, "Population config JSON")->check(CLI::ExistingFile);
  exp_cmd->add_option("--strategies", exp_a.strategies, "Comma-separated strategies")
      ->capture_default_str()
      ->check(kStrategies);
  exp_cmd->add_option("--budget", exp_a.budget, "Users contacted per strategy")->capture_default_str();
  exp_cmd->add_option("--deadline", exp_a.deadline, "Window for the windowed rate")
      ->capture_default_str()
      ->check(kDuration);
  exp_cmd->add_option("--model-kind", exp_a.model_kind, "Classifier")->capture_default_str()->check(kModelKind);
  exp_cmd->add_option("--imbalance", exp_a.imbalance, "basic|smote|weighted:R")
      ->capture_default_str()
      ->check(kImbalance);
  exp_cmd->add_option("--seed", exp_a.seed, "Random seed")->required();
  exp_cmd->add_option("--out", exp_a.out, "Comparison CSV")->check(kWritablePath);
  add_resources(exp_cmd, res);

  RecommendArgs rec_a;
  auto* rec_cmd = app.add_subcommand("recommend", "Rank candidate users for a retweet request");
  rec_cmd->add_option("--model", rec_a.model, "Model file")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--data", rec_a.data, "Candidate users JSONL")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--deadline", rec_a.deadline, "Deadline, e.g. 24h")->capture_default_str()->check(kDuration);
  rec_cmd->add_option("--cutoff", rec_a.cutoff, "Minimum probability within the deadline")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  rec_cmd->add_option("--top-n", rec_a.top_n, "Candidates returned")->capture_default_str()->check(
      CLI::PositiveNumber);
  rec_cmd->add_option("--request-time", rec_a.request_time, "Epoch seconds (default: latest activity)");
  rec_cmd->add_option("--out", rec_a.out, "JSON output (default stdout)")->check(kWritablePath);
  add_resources(rec_cmd, res);

  ServeArgs srv_a;
  auto* srv_cmd = app.add_subcommand("serve", "Run the campaign HTTP service");
  srv_cmd->add_option("--port", srv_a.port, "TCP port (0 = any)")->capture_default_str()->check(
      CLI::Range(0, 65535));
  srv_cmd->add_option("--host", srv_a.host, "Bind address")->capture_default_str();
  srv_cmd->add_option("--log-dir", srv_a.log_dir, "Event log directory")->required();
  srv_cmd->add_option("--simulate-config", srv_a.simulate_config, "Answer dispatches from this population")
      ->check(CLI::ExistingFile);
  srv_cmd->add_option("--seed", srv_a.seed, "Seed for the simulated population");
  srv_cmd->add_option("--simulated-start", srv_a.simulated_start, "Run on a simulated clock from this time");
  srv_cmd->add_option("--message-limit", srv_a.message_limit, "Maximum message length")->capture_default_str();
  add_resources(srv_cmd, res);

  try {
    app.parse(argc, argv);
    if (eval_cmd->parsed()) {
      if (!eval_a.grid && eval_a.model.empty()) throw CLI::ValidationError("--model", "required unless --grid");
      if (eval_a.grid && (eval_a.train.empty() || eval_cmd->count("--seed") == 0))
        throw CLI::ValidationError("--grid", "needs --train and --seed");
    }
    if (srv_cmd->parsed() && !srv_a.simulate_config.empty() && srv_cmd->count("--seed") == 0)
      throw CLI::ValidationError("--simulate-config", "needs --seed");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run 'propagator --help' for usage\n";
    return 2;
  }

  try {
    if (train_cmd->parsed()) return do_train(train_a, res, out);
    if (eval_cmd->parsed()) return do_evaluate(eval_a, res, out);
    if (sel_cmd->parsed()) return do_select(sel_a, res, out);
    if (sim_cmd->parsed()) return do_simulate(sim_a, out);
    if (exp_cmd->parsed()) return do_experiment(exp_a, res, out);
    if (rec_cmd->parsed()) return do_recommend(rec_a, res, out);
    if (srv_cmd->parsed()) return do_serve(srv_a, res, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace propagator::cli
