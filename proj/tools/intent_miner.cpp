// intent-miner: command-line front end.
//
// Exit status: 0 success, 1 invalid input or usage, 2 I/O or transport failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "intent_miner/codeblock.hpp"
#include "intent_miner/core_model.hpp"
#include "intent_miner/cv.hpp"
#include "intent_miner/embedding.hpp"
#include "intent_miner/errors.hpp"
#include "intent_miner/features.hpp"
#include "intent_miner/head.hpp"
#include "intent_miner/metrics.hpp"
#include "intent_miner/preprocess.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace intent_miner;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitIo = 2;
constexpr int kReportSchemaVersion = 1;

// Values gathered from --config and then overridden by flags.
struct RunConfig {
  std::uint64_t seed = 42;
  head::HeadConfig head;
  embedding::ProviderSpec provider;
  std::string sidecar_address;
  std::optional<fs::path> lexicon;
  std::optional<fs::path> codeblock_model;
  std::optional<fs::path> codeblock_corpus;
  bool refit_per_fold = false;
  std::size_t folds = cv::kDefaultFolds;
  double validation_fraction = cv::kDefaultValidationFraction;
  std::size_t jobs = 1;
  std::optional<std::size_t> only_fold;
  codeblock::TrainingOptions codeblock;
};

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("head")) c.head = head::HeadConfig::from_json(j.at("head"));
    if (j.contains("provider")) c.provider = embedding::ProviderSpec::from_json(j.at("provider"));
    c.sidecar_address = j.value("sidecar_address", c.sidecar_address);
    if (j.contains("lexicon")) c.lexicon = j.at("lexicon").get<std::string>();
    if (j.contains("codeblock_model")) c.codeblock_model = j.at("codeblock_model").get<std::string>();
    if (j.contains("codeblock_corpus")) c.codeblock_corpus = j.at("codeblock_corpus").get<std::string>();
    c.refit_per_fold = j.value("refit_per_fold", c.refit_per_fold);
    c.folds = j.value("folds", c.folds);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("only_fold") && !j.at("only_fold").is_null()) c.only_fold = j.at("only_fold").get<std::size_t>();
    if (auto it = j.find("codeblock"); it != j.end()) {
      c.codeblock.alpha_grid = it->value("alpha_grid", c.codeblock.alpha_grid);
      c.codeblock.smote_k = it->value("smote_k", c.codeblock.smote_k);
      c.codeblock.use_smote = it->value("use_smote", c.codeblock.use_smote);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return c;
}

// Flag overrides; unset flags leave the config value alone.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  std::optional<std::string> provider_kind;
  std::optional<std::size_t> dimension;
  std::optional<std::size_t> max_tokens;
  std::optional<std::string> mode;
  std::optional<std::string> sidecar;

  std::optional<std::size_t> merge_dim, fusion_dim, batch_size, epochs, patience;
  std::optional<double> lr_head, lr_pooler, threshold;
  bool fine_tune_pooler = false;

  std::optional<std::string> lexicon, codeblock_model, codeblock_corpus;
  bool refit_per_fold = false;
  std::optional<std::size_t> folds, jobs, only_fold;
  std::optional<double> validation_fraction;

  std::optional<std::vector<double>> alpha_grid;
  std::optional<std::size_t> smote_k;
  bool no_smote = false;
};

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    json j;
    try {
      j = json::parse(read_file(o.config_path));
    } catch (const json::parse_error& e) {
      throw ValidationError("config " + o.config_path + ": " + e.what());
    }
    c = config_from_json(j);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.provider_kind) c.provider.kind = embedding::parse_provider_kind(*o.provider_kind);
  if (o.dimension) c.provider.dimension = *o.dimension;
  if (o.max_tokens) c.provider.max_tokens = *o.max_tokens;
  if (o.mode) c.provider.mode = embedding::parse_pooling_mode(*o.mode);
  if (o.sidecar) c.sidecar_address = *o.sidecar;
  c.head.embedding_dim = c.provider.dimension;
  if (o.merge_dim) c.head.merge_dim = *o.merge_dim;
  if (o.fusion_dim) c.head.fusion_dim = *o.fusion_dim;
  if (o.batch_size) c.head.batch_size = *o.batch_size;
  if (o.epochs) c.head.max_epochs = *o.epochs;
  if (o.patience) c.head.patience = *o.patience;
  if (o.lr_head) c.head.lr_head = *o.lr_head;
  if (o.lr_pooler) c.head.lr_pooler = *o.lr_pooler;
  if (o.threshold) c.head.threshold = *o.threshold;
  if (o.fine_tune_pooler) c.head.fine_tune_pooler = true;
  if (o.lexicon) c.lexicon = *o.lexicon;
  if (o.codeblock_model) c.codeblock_model = *o.codeblock_model;
  if (o.codeblock_corpus) c.codeblock_corpus = *o.codeblock_corpus;
  if (o.refit_per_fold) c.refit_per_fold = true;
  if (o.folds) c.folds = *o.folds;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.only_fold) c.only_fold = *o.only_fold;
  if (o.validation_fraction) c.validation_fraction = *o.validation_fraction;
  if (o.alpha_grid) c.codeblock.alpha_grid = *o.alpha_grid;
  if (o.smote_k) c.codeblock.smote_k = *o.smote_k;
  if (o.no_smote) c.codeblock.use_smote = false;

  // One seed drives every random choice.
  c.head.seed = c.seed;
  c.codeblock.seed = c.seed;
  c.provider.validate();
  c.head.validate();
  return c;
}

void add_seed_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Seed for every random choice (default 42)");
}

void add_provider_flags(CLI::App* app, Overrides& o) {
  app->add_option("--provider", o.provider_kind, "Embedding provider: hashed | sidecar");
  app->add_option("--dimension", o.dimension, "Embedding dimension (default 768)");
  app->add_option("--max-tokens", o.max_tokens, "Head-only truncation length (default 256)");
  app->add_option("--mode", o.mode, "Sidecar vector: raw_cls | pooled");
  app->add_option("--sidecar", o.sidecar, "Sidecar host:port (INTENT_MINER_SIDECAR overrides)");
}

void add_codeblock_flags(CLI::App* app, Overrides& o) {
  app->add_option("--alpha-grid", o.alpha_grid, "NB smoothing values to search")->delimiter(',');
  app->add_option("--smote-k", o.smote_k, "SMOTE neighbour count (default 5)");
  app->add_flag("--no-smote", o.no_smote, "Train without oversampling");
}

void add_model_flags(CLI::App* app, Overrides& o) {
  add_seed_flags(app, o);
  add_provider_flags(app, o);
  add_codeblock_flags(app, o);
  app->add_option("--merge-dim", o.merge_dim);
  app->add_option("--fusion-dim", o.fusion_dim);
  app->add_option("--batch-size", o.batch_size);
  app->add_option("--epochs", o.epochs, "Maximum epochs (default 100)");
  app->add_option("--patience", o.patience, "Early-stopping patience (default 10)");
  app->add_option("--lr-head", o.lr_head);
  app->add_option("--lr-pooler", o.lr_pooler);
  app->add_option("--threshold", o.threshold, "Refinement threshold (default 0.5)");
  app->add_flag("--fine-tune-pooler", o.fine_tune_pooler, "Train the shared tanh pooler");
  app->add_option("--lexicon", o.lexicon, "Sentiment lexicon TSV (default: bundled)");
  app->add_option("--codeblock-model", o.codeblock_model, "Pre-trained code-block classifier JSON");
  app->add_option("--codeblock-corpus", o.codeblock_corpus, "Code-block corpus JSONL to train from");
  app->add_option("--validation-fraction", o.validation_fraction, "Share of training data held out (default 1/8)");
}

void emit(const std::optional<std::string>& output, const std::string& text) {
  if (output) {
    write_file(*output, text);
  } else {
    std::cout << text;
  }
}

features::Lexicon lexicon_for(const RunConfig& c) {
  return c.lexicon ? features::Lexicon::load(*c.lexicon) : features::Lexicon::bundled();
}

cv::CvOptions cv_options(const RunConfig& c) {
  cv::CvOptions opt;
  opt.head = c.head;
  opt.provider = c.provider;
  opt.sidecar_address = c.sidecar_address;
  opt.lexicon = lexicon_for(c);
  opt.codeblock_training = c.codeblock;
  opt.jobs = c.jobs;
  opt.only_fold = c.only_fold;
  if (c.refit_per_fold) {
    if (!c.codeblock_corpus) throw ValidationError("--refit-per-fold needs --codeblock-corpus");
    opt.codeblock_mode = cv::CodeBlockMode::kRefitPerFold;
    opt.corpus = codeblock::load_corpus(*c.codeblock_corpus);
  } else if (c.codeblock_model) {
    opt.codeblock_mode = cv::CodeBlockMode::kPretrained;
    opt.pretrained = codeblock::classifier_from_json(json::parse(read_file(*c.codeblock_model)));
  } else if (c.codeblock_corpus) {
    opt.codeblock_mode = cv::CodeBlockMode::kPretrained;
    opt.pretrained = codeblock::train_classifier(codeblock::load_corpus(*c.codeblock_corpus), c.codeblock, nullptr);
  }
  return opt;
}

ordered_json report_header() {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["version"] = version_string();
  return j;
}

// ---- subcommands -------------------------------------------------------------

int cmd_preprocess(const std::string& input, const std::optional<std::string>& output) {
  std::ostringstream os;
  for (const auto& post : load_posts(input)) {
    const auto c = preprocess::clean(post);
    ordered_json j;
    j["id"] = c.id;
    j["title_text"] = c.title_text;
    j["description_text"] = c.description_text;
    j["code_blocks"] = c.code_blocks;
    os << j.dump() << '\n';
  }
  emit(output, os.str());
  return kExitOk;
}

int cmd_codeblock_train(const Overrides& o, const std::string& corpus_path, const std::string& output,
                        const std::optional<std::string>& report_path) {
  const auto c = resolve(o);
  const auto corpus = codeblock::load_corpus(corpus_path);
  codeblock::TrainingReport report;
  const auto clf = codeblock::train_classifier(corpus, c.codeblock, &report);
  write_file(output, codeblock::to_json(clf).dump() + "\n");

  auto j = report_header();
  j["seed"] = c.seed;
  j["samples"] = corpus.size();
  j["train_size"] = report.train_size;
  j["validation_size"] = report.validation_size;
  j["test_size"] = report.test_size;
  j["synthetic_count"] = report.synthetic_count;
  j["best_alpha"] = report.best_alpha;
  j["validation_accuracy"] = ordered_json::array();
  for (const auto& [alpha, acc] : report.validation_accuracy) {
    j["validation_accuracy"].push_back({{"alpha", alpha}, {"accuracy", acc}});
  }
  j["test_accuracy"] = report.test_accuracy;
  emit(report_path, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_codeblock_eval(const std::string& model_path, const std::string& corpus_path,
                       const std::optional<std::string>& output) {
  const auto clf = codeblock::classifier_from_json(json::parse(read_file(model_path)));
  const auto corpus = codeblock::load_corpus(corpus_path);
  auto j = report_header();
  j["samples"] = corpus.size();
  j["accuracy"] = codeblock::evaluate_classifier(clf, corpus);
  emit(output, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_train(const Overrides& o, const std::string& dataset, const std::string& output,
              const std::optional<std::string>& log_path) {
  const auto c = resolve(o);
  const auto data = load_dataset(dataset);
  const auto options = cv_options(c);
  auto provider = embedding::make_provider(c.provider, c.sidecar_address);
  const auto split = cv::holdout_split(data.size(), c.seed, c.validation_fraction);
  const auto result = cv::train_model(data, split, options, *provider);
  head::save_model(output, result.model);

  auto j = report_header();
  j["train_size"] = split.train.size();
  j["validation_size"] = split.validation.size();
  j["best_epoch"] = result.log.best_epoch;
  j["best_validation_loss"] = result.log.best_validation_loss;
  j["stopped_early"] = result.log.stopped_early;
  j["epochs"] = ordered_json::array();
  for (const auto& e : result.log.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}});
  }
  emit(log_path, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input, const std::optional<std::string>& sidecar,
                const std::optional<std::string>& output) {
  const auto model = head::load_model(model_path);
  auto provider = embedding::make_provider(model.head.provider, sidecar.value_or(""));
  std::ostringstream os;
  for (const auto& post : load_posts(input)) {
    const auto pred = head::predict(model, preprocess::clean(post), *provider);
    ordered_json j;
    j["id"] = post.id;
    j["scores"] = pred.scores;
    j["labels"] = pred.labels.codes();
    os << j.dump() << '\n';
  }
  emit(output, os.str());
  return kExitOk;
}

int cmd_crossval(const Overrides& o, const std::string& dataset, const std::string& output_dir) {
  const auto c = resolve(o);
  const auto data = load_dataset(dataset);
  const auto plan = cv::make_folds(data, c.seed, c.folds, c.validation_fraction);
  const auto result = cv::run_cv(data, plan, cv_options(c));
  cv::write_run_directory(output_dir, plan, result);
  const auto& micro = result.report["metrics"]["micro"];
  std::cout << "pooled " << result.pooled.size() << " predictions; micro-F1 " << micro["f1"].get<double>()
            << "; report " << (fs::path(output_dir) / "report.json").string() << '\n';
  return kExitOk;
}

std::vector<metrics::RankedPrediction> parse_predictions(std::string_view jsonl) {
  std::vector<metrics::RankedPrediction> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      metrics::RankedPrediction p;
      const auto& scores = j.at("scores");
      if (!scores.is_array() || scores.size() != kNumIntentions) throw ValidationError("'scores' must hold 7 numbers");
      for (std::size_t i = 0; i < kNumIntentions; ++i) p.scores[i] = scores[i].get<double>();
      for (const auto& l : j.at("labels")) p.ground_truth.insert(parse_intention(l.get<std::string>()));
      out.push_back(p);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

int cmd_evaluate(const std::string& predictions, double threshold, const std::optional<std::string>& output) {
  const auto preds = parse_predictions(read_file(predictions));
  auto j = report_header();
  j["metrics"] = metrics::evaluation_report(preds, threshold);
  emit(output, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_agreement(const std::string& a_path, const std::string& b_path, const std::optional<std::string>& output) {
  const auto a = load_dataset(a_path);
  const auto b = load_dataset(b_path);
  const auto table = metrics::agreement_table(a, b);
  auto j = report_header();
  j["items"] = table.item_ids.size();
  ordered_json cats = ordered_json::object();
  for (auto intention : all_intentions()) {
    const auto alpha = metrics::krippendorff_alpha(table, intention);
    cats[std::string(to_code(intention))] = alpha ? ordered_json(*alpha) : ordered_json();
  }
  j["alpha"] = cats;
  emit(output, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_stats(const std::string& dataset, const std::optional<std::string>& output) {
  const auto s = dataset_stats(load_dataset(dataset));
  auto j = report_header();
  j["posts"] = s.post_count;
  ordered_json labels = ordered_json::object();
  std::size_t total = 0;
  for (auto intention : all_intentions()) {
    labels[std::string(to_code(intention))] = s.label_counts[index_of(intention)];
    total += s.label_counts[index_of(intention)];
  }
  j["labels"] = labels;
  j["total_labels"] = total;
  ordered_json card = ordered_json::object();
  for (std::size_t k = 1; k < s.cardinality_counts.size(); ++k) {
    if (s.cardinality_counts[k] > 0) card[std::to_string(k)] = s.cardinality_counts[k];
  }
  j["cardinality"] = card;
  j["description_tokens"] = {{"mean", s.description_tokens_mean},
                             {"median", s.description_tokens_median},
                             {"max", s.description_tokens_max}};
  emit(output, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label intention classifier for technical forum posts"};
  app.set_version_flag("--version", std::string(version_string()));
  app.require_subcommand(1);

  Overrides o;
  std::string input, output_path, dataset, corpus, model, predictions, a_path, b_path, output_dir;
  std::optional<std::string> output, report, sidecar, log;
  double threshold = 0.5;

  auto* pre = app.add_subcommand("preprocess", "Clean posts into title, description and code blocks");
  pre->add_option("--input", input, "Posts JSONL")->required()->check(CLI::ExistingFile);
  pre->add_option("--output", output, "CleanPost JSONL (default stdout)");

  auto* cbt = app.add_subcommand("codeblock-train", "Train the code-block content classifier");
  cbt->add_option("--corpus", corpus, "Code-block corpus JSONL")->required()->check(CLI::ExistingFile);
  cbt->add_option("--output", output_path, "Classifier JSON")->required();
  cbt->add_option("--report", report, "Training report JSON (default stdout)");
  add_seed_flags(cbt, o);
  add_codeblock_flags(cbt, o);

  auto* cbe = app.add_subcommand("codeblock-eval", "Accuracy of a code-block classifier on a corpus");
  cbe->add_option("--model", model, "Classifier JSON")->required()->check(CLI::ExistingFile);
  cbe->add_option("--corpus", corpus, "Code-block corpus JSONL")->required()->check(CLI::ExistingFile);
  cbe->add_option("--output", output, "Report JSON (default stdout)");

  auto* tr = app.add_subcommand("train", "Train an intention model on an annotated dataset");
  tr->add_option("--dataset", dataset, "Annotated posts JSONL")->required()->check(CLI::ExistingFile);
  tr->add_option("--output", output_path, "Model JSON")->required();
  tr->add_option("--log", log, "Training log JSON (default stdout)");
  add_model_flags(tr, o);

  auto* pr = app.add_subcommand("predict", "Score posts with a trained model");
  pr->add_option("--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
  pr->add_option("--input", input, "Posts JSONL")->required()->check(CLI::ExistingFile);
  pr->add_option("--sidecar", sidecar, "Sidecar host:port for sidecar models");
  pr->add_option("--output", output, "Predictions JSONL (default stdout)");

  auto* cvc = app.add_subcommand("crossval", "Five-fold cross-validation with pooled evaluation");
  cvc->add_option("--dataset", dataset, "Annotated posts JSONL")->required()->check(CLI::ExistingFile);
  cvc->add_option("--output-dir", output_dir, "Run directory")->required();
  cvc->add_option("--folds", o.folds, "Number of folds (default 5)");
  cvc->add_option("--only-fold", o.only_fold, "Run a single fold (0-based)");
  cvc->add_option("--jobs", o.jobs, "Folds trained in parallel");
  cvc->add_flag("--refit-per-fold", o.refit_per_fold, "Retrain the code-block classifier inside each fold");
  add_model_flags(cvc, o);

  auto* ev = app.add_subcommand("evaluate", "Metrics over a predictions JSONL");
  ev->add_option("--predictions", predictions, "JSONL with id, scores, labels")->required()->check(CLI::ExistingFile);
  ev->add_option("--threshold", threshold, "Refinement threshold (default 0.5)");
  ev->add_option("--output", output, "Report JSON (default stdout)");

  auto* ag = app.add_subcommand("agreement", "Per-category Krippendorff alpha between two annotation files");
  ag->add_option("--a", a_path, "First annotator JSONL")->required()->check(CLI::ExistingFile);
  ag->add_option("--b", b_path, "Second annotator JSONL")->required()->check(CLI::ExistingFile);
  ag->add_option("--output", output, "Report JSON (default stdout)");

  auto* st = app.add_subcommand("stats", "Label and length statistics of a dataset");
  st->add_option("--dataset", dataset, "Annotated posts JSONL")->required()->check(CLI::ExistingFile);
  st->add_option("--output", output, "Report JSON (default stdout)");

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
    std::cerr << app.help();
    return kExitInvalid;
  }

  try {
    if (pre->parsed()) return cmd_preprocess(input, output);
    if (cbt->parsed()) return cmd_codeblock_train(o, corpus, output_path, report);
    if (cbe->parsed()) return cmd_codeblock_eval(model, corpus, output);
    if (tr->parsed()) return cmd_train(o, dataset, output_path, log);
    if (pr->parsed()) return cmd_predict(model, input, sidecar, output);
    if (cvc->parsed()) return cmd_crossval(o, dataset, output_dir);
    if (ev->parsed()) return cmd_evaluate(predictions, threshold, output);
    if (ag->parsed()) return cmd_agreement(a_path, b_path, output);
    if (st->parsed()) return cmd_stats(dataset, output);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ProtocolError& e) {
    std::cerr << "sidecar protocol error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitInvalid;
}
