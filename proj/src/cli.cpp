#include "intentbench/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "intentbench/error.hpp"
#include "intentbench/pipelines.hpp"
#include "jsonl.hpp"

namespace intentbench {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string conversations, embeddings, test_set, test_embeddings, training_set_path, assignment, scores;
  std::vector<std::string> training_sets, encoders, metrics{kDefaultRankMetrics}, datasets;
  std::string out_dir;
  std::uint64_t seed = 0;
  int k_min = 5, k_max = 50, trials = 40, min_count = 1;
  bool exhaustive = false, no_normalize = false;
  double lambda = 1e-4;
  std::string nmi_mode = "arithmetic", noise_mode = "single_cluster", format = "both", metric = "euclidean",
              speaker = "customer";
};

void require_file(const std::string& flag, const std::string& path) {
  if (path.empty()) throw ConfigError(flag + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(flag + ": no such file: " + path);
}

fs::path output_dir(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec || !fs::is_directory(config.out_dir)) throw ConfigError("--out: cannot create directory " + config.out_dir);
  return config.out_dir;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = detail::open_output(path);
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

bool want_json(const RunConfig& c) { return c.format == "json" || c.format == "both"; }
bool want_markdown(const RunConfig& c) { return c.format == "markdown" || c.format == "both"; }

void write_report(const RunConfig& config, const fs::path& dir, const std::string& stem,
                  const nlohmann::ordered_json& json, const std::string& markdown) {
  if (want_json(config)) write_text(dir / (stem + ".json"), json.dump(2) + "\n");
  if (want_markdown(config)) write_text(dir / (stem + ".md"), markdown);
}

void emit_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

SearchConfig search_config(const RunConfig& c) {
  SearchConfig search;
  search.k_min = c.k_min;
  search.k_max = c.k_max;
  search.n_trials = c.trials;
  search.exhaustive = c.exhaustive;
  search.metric = parse_silhouette_metric(c.metric);
  search.seed = c.seed;
  search.validate();
  return search;
}

EmbeddingStore load_store(const std::string& flag, const std::string& path) {
  require_file(flag, path);
  return load_embeddings(path);
}

EvalOptions eval_options(const RunConfig& c) {
  return EvalOptions{parse_nmi_mode(c.nmi_mode), parse_noise_mode(c.noise_mode)};
}

Task2EvalConfig task2_config(const RunConfig& c) {
  Task2EvalConfig config;
  if (!(c.lambda >= 0)) throw ConfigError("--lambda must be non-negative");
  config.classifier.l2_lambda = c.lambda;
  config.normalize = !c.no_normalize;
  config.eval = eval_options(c);
  return config;
}

std::string metrics_row(const MetricsReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << r.acc << "  " << r.precision << "  " << r.recall << "  " << r.f1
      << "  " << r.nmi << "  " << r.ari;
  return out.str();
}

void print_metrics(std::ostream& out, const std::string& title, const MetricsReport& report) {
  out << title << '\n';
  out << "ACC     P       R       F1      NMI     ARI\n";
  out << metrics_row(report) << '\n';
  out << "clusters=" << report.n_predicted_clusters << " intents=" << report.n_reference_intents
      << " items=" << report.n_items << '\n';
}

int cmd_cluster(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file("--conversations", c.conversations);
  const auto store = load_store("--embeddings", c.embeddings);
  PipelineConfig config;
  config.search = search_config(c);
  config.normalize = !c.no_normalize;
  const auto dir = output_dir(c);
  const Corpus corpus = load_conversations(c.conversations);
  const auto result = run_task1_baseline(corpus, store, config);
  emit_warnings(err, result.warnings);

  std::ostringstream assignment, trials;
  write_assignment(result.assignment, assignment);
  write_trial_history(result.selection.history, trials);
  write_text(dir / "assignment.jsonl", assignment.str());
  write_text(dir / "trials.jsonl", trials.str());
  write_text(dir / "search.json", search_summary(result.selection, config.search).dump(2) + "\n");
  out << std::fixed << std::setprecision(4) << "dataset=" << corpus.dataset_name
      << " items=" << result.assignment.entries.size() << " k=" << result.selection.clustering.k
      << " silhouette=" << result.selection.history.best_score << '\n';
  return 0;
}

int cmd_induce(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file("--conversations", c.conversations);
  const auto store = load_store("--embeddings", c.embeddings);
  PipelineConfig config;
  config.search = search_config(c);
  config.normalize = !c.no_normalize;
  if (c.speaker == "any") {
    config.inform_role = std::nullopt;
  } else {
    try {
      config.inform_role = parse_speaker_role(c.speaker);
    } catch (const DataError&) {
      throw ConfigError("--speaker must be agent, customer or any");
    }
  }
  const auto dir = output_dir(c);
  const Corpus corpus = load_conversations(c.conversations);
  const auto result = run_task2_baseline(corpus, store, config);
  emit_warnings(err, result.warnings);

  std::ostringstream training, trials;
  write_training_set(result.training_set, training);
  write_trial_history(result.selection.history, trials);
  write_text(dir / "training_set.jsonl", training.str());
  write_text(dir / "trials.jsonl", trials.str());
  write_text(dir / "search.json", search_summary(result.selection, config.search).dump(2) + "\n");
  out << "dataset=" << corpus.dataset_name << " utterances=" << result.training_set.items.size()
      << " intents=" << result.training_set.intent_count() << '\n';
  return 0;
}

int cmd_eval_task1(const RunConfig& c, std::ostream& out, std::ostream&) {
  require_file("--conversations", c.conversations);
  require_file("--assignment", c.assignment);
  const auto options = eval_options(c);
  const auto dir = output_dir(c);
  const Corpus corpus = load_conversations(c.conversations);
  const auto report = score_task1_submission(c.assignment, task1_reference(corpus), options);
  write_report(c, dir, "report", to_json(report), render_markdown(report, corpus.dataset_name));
  print_metrics(out, "task1 " + corpus.dataset_name, report);
  return 0;
}

int cmd_eval_task2(const RunConfig& c, std::ostream& out, std::ostream&) {
  require_file("--training-set", c.training_set_path);
  require_file("--test-set", c.test_set);
  const auto train_store = load_store("--embeddings", c.embeddings);
  const auto test_store = load_store("--test-embeddings", c.test_embeddings);
  const auto config = task2_config(c);
  const auto dir = output_dir(c);
  const auto training = load_training_set(c.training_set_path);
  const auto test = load_test_set(c.test_set);
  const auto report = evaluate_task2(training, train_store, test, test_store, config);
  write_report(c, dir, "report", to_json(report), render_markdown(report, training.source_dataset));
  print_metrics(out, "task2 " + training.source_dataset, report);
  return 0;
}

int cmd_propagate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file("--assignment", c.assignment);
  const auto store = load_store("--embeddings", c.embeddings);
  PropagationConfig config;
  if (!(c.lambda >= 0)) throw ConfigError("--lambda must be non-negative");
  config.classifier.l2_lambda = c.lambda;
  config.normalize = !c.no_normalize;
  const auto options = eval_options(c);
  if (!c.conversations.empty()) require_file("--conversations", c.conversations);
  const auto dir = output_dir(c);

  const auto before = load_assignment(c.assignment);
  const auto result = propagate_noise_labels(before, store, config);
  emit_warnings(err, result.warnings);
  std::ostringstream assignment;
  write_assignment(result.assignment, assignment);
  write_text(dir / "assignment.jsonl", assignment.str());

  nlohmann::ordered_json summary;
  summary["propagated"] = result.propagated;
  summary["items"] = result.assignment.entries.size();
  summary["lambda"] = c.lambda;
  out << "propagated=" << result.propagated << " items=" << result.assignment.entries.size() << '\n';
  if (!c.conversations.empty()) {
    const auto reference = task1_reference(load_conversations(c.conversations));
    const auto score_before = evaluate(before, reference, options);
    const auto score_after = evaluate(result.assignment, reference, options);
    summary["before"] = to_json(score_before);
    summary["after"] = to_json(score_after);
    print_metrics(out, "before", score_before);
    print_metrics(out, "after", score_after);
  }
  write_text(dir / "propagation.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_sensitivity(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (c.training_sets.empty()) throw ConfigError("--training-set is required");
  require_file("--test-set", c.test_set);
  for (const auto& path : c.training_sets) require_file("--training-set", path);
  std::vector<EncoderStores> encoders;
  for (const auto& spec : c.encoders) {
    const auto eq = spec.find('=');
    const auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || comma == std::string::npos || eq == 0) {
      throw ConfigError("--encoder expects NAME=TRAIN_EMBEDDINGS,TEST_EMBEDDINGS, got \"" + spec + "\"");
    }
    encoders.push_back({spec.substr(0, eq), load_store("--encoder", spec.substr(eq + 1, comma - eq - 1)),
                        load_store("--encoder", spec.substr(comma + 1))});
  }
  if (encoders.size() < 2) throw ConfigError("--encoder must be given at least twice");
  const auto config = task2_config(c);
  const auto dir = output_dir(c);

  std::vector<Submission> submissions;
  std::set<std::string> names;
  for (const auto& path : c.training_sets) {
    auto training = load_training_set(path);
    if (!names.insert(training.source_dataset).second) {
      throw ConfigError("--training-set: duplicate submission name \"" + training.source_dataset + "\"");
    }
    submissions.push_back({training.source_dataset, std::move(training)});
  }
  const auto test = load_test_set(c.test_set);
  const auto report = classifier_sensitivity(submissions, test, encoders, config);
  const auto markdown = render_markdown(report);
  write_report(c, dir, "sensitivity", to_json(report), markdown);
  out << markdown;
  return 0;
}

int cmd_diversity(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.conversations.empty() == c.test_set.empty()) {
    throw ConfigError("exactly one of --conversations or --test-set is required");
  }
  const auto store = load_store("--embeddings", c.embeddings);
  if (c.min_count < 1) throw ConfigError("--min-count must be at least 1");
  std::vector<std::pair<std::string, std::string>> labeled;
  if (!c.conversations.empty()) {
    require_file("--conversations", c.conversations);
    const auto dir_check = output_dir(c);
    labeled = intentful_gold_labels(load_conversations(c.conversations));
  } else {
    require_file("--test-set", c.test_set);
    const auto dir_check = output_dir(c);
    for (const auto& item : load_test_set(c.test_set)) labeled.emplace_back(item.utterance_id, item.gold_intent);
  }
  const auto report = semantic_diversity(labeled, store, c.min_count);
  emit_warnings(err, report.warnings);
  const auto markdown = render_markdown(report);
  write_report(c, output_dir(c), "diversity", to_json(report), markdown);
  out << markdown;
  return 0;
}

int cmd_rank(const RunConfig& c, std::ostream& out, std::ostream&) {
  require_file("--scores", c.scores);
  const auto dir = output_dir(c);
  detail::json parsed;
  {
    auto in = detail::open_input(c.scores);
    try {
      parsed = detail::json::parse(in);
    } catch (const detail::json::exception& e) {
      throw DataError(c.scores + ": malformed JSON: " + e.what());
    }
  }
  if (!parsed.is_object()) throw DataError(c.scores + ": expected {team: {dataset: {metric: value}}}");
  TeamScores scores;
  std::set<std::string> all_datasets;
  for (const auto& [team, datasets] : parsed.items()) {
    if (!datasets.is_object()) throw DataError(c.scores + ": team \"" + team + "\" must map datasets to objects");
    auto& cells = scores[team];
    for (const auto& [dataset, metrics] : datasets.items()) {
      if (!metrics.is_object()) throw DataError(c.scores + ": \"" + team + "/" + dataset + "\" must be an object");
      all_datasets.insert(dataset);
      for (const auto& [metric, value] : metrics.items()) {
        if (!value.is_number()) {
          throw DataError(c.scores + ": \"" + team + "/" + dataset + "/" + metric + "\" must be a number");
        }
        cells[{dataset, metric}] = value.get<double>();
      }
    }
  }
  if (scores.empty()) throw DataError(c.scores + ": no teams");
  const std::vector<std::string> datasets =
      c.datasets.empty() ? std::vector<std::string>(all_datasets.begin(), all_datasets.end()) : c.datasets;
  const auto board = mrr_leaderboard(scores, c.metrics, datasets);

  nlohmann::ordered_json json;
  json["metrics"] = c.metrics;
  json["datasets"] = datasets;
  json["tie_rule"] = kTieRule;
  auto& rows = json["leaderboard"] = nlohmann::ordered_json::array();
  std::ostringstream md;
  md << std::fixed << std::setprecision(4) << "| Rank | Team | MRR |\n|---|---|---|\n";
  for (std::size_t i = 0; i < board.size(); ++i) {
    nlohmann::ordered_json row;
    row["team"] = board[i].team;
    row["mrr"] = board[i].mrr;
    rows.push_back(std::move(row));
    md << "| " << i + 1 << " | " << board[i].team << " | " << board[i].mrr << " |\n";
  }
  write_report(c, dir, "leaderboard", json, md.str());
  out << md.str();
  return 0;
}

void add_output_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--out", c.out_dir, "Output directory");
  cmd->add_option("--format", c.format, "Report files to write")->check(CLI::IsMember({"json", "markdown", "both"}));
}

void add_search_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--k-min", c.k_min, "Smallest cluster count");
  cmd->add_option("--k-max", c.k_max, "Largest cluster count");
  cmd->add_option("--trials", c.trials, "Search budget");
  cmd->add_flag("--exhaustive", c.exhaustive, "Try every k instead of searching");
  cmd->add_option("--metric", c.metric, "Silhouette geometry (euclidean|cosine)");
  cmd->add_flag("--no-normalize", c.no_normalize, "Keep raw embedding norms");
}

void add_eval_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--nmi-mode", c.nmi_mode, "NMI normalizer (min|geometric|arithmetic|max)");
  cmd->add_option("--noise-mode", c.noise_mode, "Noise handling (single_cluster|singletons)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intent-induction baselines, metrics and analyses", "intentbench"};
  app.require_subcommand(1);
  RunConfig c;

  auto* cluster = app.add_subcommand("cluster", "Task 1 baseline: cluster intentful turns");
  cluster->add_option("--conversations", c.conversations, "Conversations JSONL");
  cluster->add_option("--embeddings", c.embeddings, "Turn embeddings");
  add_search_flags(cluster, c);
  add_output_flags(cluster, c);

  auto* induce = app.add_subcommand("induce", "Task 2 baseline: induce a training set from InformIntent turns");
  induce->add_option("--conversations", c.conversations, "Conversations JSONL");
  induce->add_option("--embeddings", c.embeddings, "Turn embeddings");
  induce->add_option("--speaker", c.speaker, "InformIntent speaker filter (customer|agent|any)");
  add_search_flags(induce, c);
  add_output_flags(induce, c);

  auto* eval1 = app.add_subcommand("eval-task1", "Score a Task 1 assignment");
  eval1->add_option("--conversations", c.conversations, "Conversations JSONL with gold intents");
  eval1->add_option("--assignment", c.assignment, "Assignment JSONL");
  add_eval_flags(eval1, c);
  add_output_flags(eval1, c);

  auto* eval2 = app.add_subcommand("eval-task2", "Score a Task 2 training set through the classifier");
  eval2->add_option("--training-set", c.training_set_path, "Induced training set JSONL");
  eval2->add_option("--embeddings", c.embeddings, "Training utterance embeddings (content-hash ids)");
  eval2->add_option("--test-set", c.test_set, "Test set JSONL");
  eval2->add_option("--test-embeddings", c.test_embeddings, "Test utterance embeddings");
  eval2->add_option("--lambda", c.lambda, "L2 strength");
  eval2->add_flag("--no-normalize", c.no_normalize, "Keep raw embedding norms");
  add_eval_flags(eval2, c);
  add_output_flags(eval2, c);

  auto* propagate = app.add_subcommand("propagate", "Assign noise instances by classifier propagation");
  propagate->add_option("--assignment", c.assignment, "Assignment JSONL");
  propagate->add_option("--embeddings", c.embeddings, "Turn embeddings");
  propagate->add_option("--conversations", c.conversations, "Optional gold conversations for before/after scores");
  propagate->add_option("--lambda", c.lambda, "L2 strength");
  propagate->add_flag("--no-normalize", c.no_normalize, "Keep raw embedding norms");
  add_eval_flags(propagate, c);
  add_output_flags(propagate, c);

  auto* sensitivity = app.add_subcommand("sensitivity", "Task 2 scores across encoders");
  sensitivity->add_option("--training-set", c.training_sets, "Induced training set JSONL (repeatable)");
  sensitivity->add_option("--test-set", c.test_set, "Test set JSONL");
  sensitivity->add_option("--encoder", c.encoders, "NAME=TRAIN_EMBEDDINGS,TEST_EMBEDDINGS (repeatable)");
  sensitivity->add_option("--lambda", c.lambda, "L2 strength");
  sensitivity->add_flag("--no-normalize", c.no_normalize, "Keep raw embedding norms");
  add_eval_flags(sensitivity, c);
  add_output_flags(sensitivity, c);

  auto* diversity = app.add_subcommand("diversity", "Semantic diversity of labelled utterances");
  diversity->add_option("--conversations", c.conversations, "Conversations JSONL (gold intents of intentful turns)");
  diversity->add_option("--test-set", c.test_set, "Test set JSONL");
  diversity->add_option("--embeddings", c.embeddings, "Embeddings for the labelled utterances");
  diversity->add_option("--min-count", c.min_count, "Drop intents with fewer utterances");
  add_output_flags(diversity, c);

  auto* rank = app.add_subcommand("rank", "MRR leaderboard across datasets and metrics");
  rank->add_option("--scores", c.scores, "JSON {team: {dataset: {metric: value}}}");
  rank->add_option("--metrics", c.metrics, "Metrics to rank on")->delimiter(',');
  rank->add_option("--datasets", c.datasets, "Datasets to rank on (default: all)")->delimiter(',');
  add_output_flags(rank, c);

  std::vector<std::string> argv_storage{"intentbench"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (cluster->parsed()) return cmd_cluster(c, out, err);
    if (induce->parsed()) return cmd_induce(c, out, err);
    if (eval1->parsed()) return cmd_eval_task1(c, out, err);
    if (eval2->parsed()) return cmd_eval_task2(c, out, err);
    if (propagate->parsed()) return cmd_propagate(c, out, err);
    if (sensitivity->parsed()) return cmd_sensitivity(c, out, err);
    if (diversity->parsed()) return cmd_diversity(c, out, err);
    if (rank->parsed()) return cmd_rank(c, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << "error: no command given\n";
  return 1;
}

}  // namespace intentbench
