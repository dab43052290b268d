#include "dbaug/cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "dbaug/error.hpp"
#include "dbaug/model/checkpoint.hpp"
#include "dbaug/pipeline/report.hpp"
#include "json.hpp"

namespace dbaug::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad invocation detected after parsing (missing inputs and the like).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct StrategyFlags {
  std::string name = "mid_k";
  std::size_t k = 10;
  std::size_t k_prime = 2;
  double threshold = 0.7;
  std::size_t beam_width = 4;
  bool literal = false;
  double temperature = 1.0;
};

decoding::DecodingStrategy make_strategy(const StrategyFlags& f, std::size_t max_len) {
  decoding::DecodingStrategy s = decoding::strategy_from_name(f.name);
  if (f.name == "beam") s.variant = decoding::Beam{f.beam_width};
  if (f.name == "top_k") s.variant = decoding::TopK{f.k};
  if (f.name == "mid_k") s.variant = decoding::MidK{f.k, f.k_prime, f.threshold, f.literal};
  s.max_len = max_len;
  s.temperature = f.temperature;
  return s;
}

json config_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  return json{
      {"corpus", c.corpus},
      {"checkpoint", c.checkpoint},
      {"augmented", c.augmented},
      {"out_dir", c.out_dir},
      {"n_per_class", c.n_per_class},
      {"model",
       {{"embed_dim", m.embed_dim},
        {"latent_dim", m.latent_dim},
        {"encoder_hidden", m.encoder_hidden},
        {"decoder_hidden", m.decoder_hidden},
        {"position_dim", m.position_dim},
        {"max_len", m.max_len},
        {"pooling", model::to_string(m.pooling)},
        {"embed_init", m.embed_init}}},
      {"train",
       {{"eps_cls", t.eps_cls},
        {"eps_recon", t.eps_recon},
        {"learning_rate", t.learning_rate},
        {"epochs_stage1", t.epochs_stage1},
        {"epochs_stage2", t.epochs_stage2},
        {"batch_size", t.batch_size}}},
      {"modification", {{"n", c.modification.steps}, {"lambda", c.modification.lambda}}},
      {"strategy", c.strategy.describe()},
      {"temperature", c.strategy.temperature},
      {"multiplier", c.multiplier},
      {"label_mode", pipeline::to_string(c.label_mode)},
      {"curriculum", c.curriculum ? "on" : "off"},
      {"seed", c.seed},
      {"seeds", c.seeds},
      {"train_fraction", c.train_fraction},
      {"low_resource_fraction", c.low_resource_fraction},
      {"floor_per_class", c.floor_per_class},
      {"downstream",
       {{"epochs", c.downstream.epochs},
        {"learning_rate", c.downstream.learning_rate},
        {"batch_size", c.downstream.batch_size},
        {"embed_init", c.downstream.embed_init}}},
      {"attack", {{"budget", c.attack.budget}, {"neutrality", c.attack.neutrality}}},
      {"threads", c.threads}};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

struct Context {
  std::string command;
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  json manifest;
  std::vector<std::string> outputs;

  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return fs::path(cfg.out_dir) / name;
  }
  void warn(const std::string& msg) { err << "dbaug: " << command << ": warning: " << msg << '\n'; }
};

std::vector<pipeline::CorpusRecord> load_corpus(Context& ctx) {
  if (ctx.cfg.corpus.empty()) {
    ctx.manifest["corpus_source"] = "toy(n_per_class=" + std::to_string(ctx.cfg.n_per_class) +
                                    ",seed=" + std::to_string(ctx.cfg.seed) + ")";
    return pipeline::generate_toy_corpus(ctx.cfg.n_per_class, ctx.cfg.seed);
  }
  ctx.manifest["corpus_source"] = ctx.cfg.corpus;
  return pipeline::ingest(ctx.cfg.corpus);
}

model::Model load_model(Context& ctx) {
  if (ctx.cfg.checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (!fs::exists(ctx.cfg.checkpoint)) {
    throw UsageError("checkpoint not found: " + ctx.cfg.checkpoint);
  }
  return model::load_checkpoint(ctx.cfg.checkpoint);
}

void cmd_gen_corpus(Context& ctx) {
  const auto corpus = pipeline::generate_toy_corpus(ctx.cfg.n_per_class, ctx.cfg.seed);
  pipeline::write_corpus(ctx.output("corpus.jsonl"), corpus);
  ctx.manifest["records"] = corpus.size();
  ctx.out << "wrote " << corpus.size() << " records\n";
}

void cmd_train(Context& ctx) {
  if (ctx.cfg.corpus.empty()) throw UsageError("--corpus is required");
  const auto corpus = pipeline::ingest(ctx.cfg.corpus);
  const auto vocab = pipeline::build_vocabulary(corpus);
  model::ModelConfig mc = ctx.cfg.model;
  mc.vocab_size = vocab.size();
  mc.num_classes = pipeline::num_classes_of(corpus);
  training::TrainConfig tc = ctx.cfg.train;
  tc.seed = ctx.cfg.seed;
  const auto seqs = pipeline::to_sequences(corpus, vocab);
  auto s1 = training::train_stage1(seqs, mc, tc);
  auto s2 = training::train_stage2(seqs, s1.encoder, mc, tc);

  std::vector<training::EpochMetrics> rows = s1.history;
  rows.insert(rows.end(), s2.history.begin(), s2.history.end());
  std::ostringstream metrics;
  training::write_metrics(metrics, rows);
  write_file(ctx.output("metrics.csv"), metrics.str());

  model::Model m{mc, vocab, std::move(s1.encoder), std::move(s1.classifier),
                 std::move(s2.decoder)};
  model::save_checkpoint(m, ctx.output("checkpoint.json"));
  ctx.manifest["vocab_size"] = vocab.size();
  ctx.manifest["num_classes"] = mc.num_classes;
  ctx.out << "stage1 accuracy " << pipeline::fixed(rows[s1.history.size() - 1].accuracy, 4)
          << ", stage2 token accuracy " << pipeline::fixed(rows.back().accuracy, 4) << '\n';
}

void cmd_augment(Context& ctx) {
  const auto m = load_model(ctx);
  if (ctx.cfg.corpus.empty()) throw UsageError("--corpus is required");
  const auto corpus = pipeline::ingest(ctx.cfg.corpus, m.classifier.num_classes());
  const auto seqs = pipeline::to_sequences(corpus, m.vocab);
  pipeline::AugmentationConfig ac;
  ac.modification = ctx.cfg.modification;
  ac.strategy = ctx.cfg.strategy;
  ac.multiplier = ctx.cfg.multiplier;
  ac.label_mode = ctx.cfg.label_mode;
  ac.seed = ctx.cfg.seed;
  ac.threads = ctx.cfg.threads;
  const auto res = pipeline::run_augmentation(seqs, m, ac);
  for (const auto& f : res.failures) ctx.warn("skipped " + f);
  pipeline::write_augmented(ctx.output("augmented.jsonl"), res.pairs, m.vocab);
  ctx.manifest["attempts"] = res.attempts;
  ctx.manifest["pairs"] = res.pairs.size();
  ctx.manifest["skipped"] = res.failures.size();
  ctx.manifest["skip_messages"] = res.failures;
  ctx.out << "wrote " << res.pairs.size() << " pairs (" << res.failures.size() << " skipped)\n";
}

void emit_reports(Context& ctx, const std::vector<pipeline::EvalReport>& reports) {
  write_file(ctx.output(ctx.command + ".report.csv"), pipeline::summary_csv(reports));
  write_file(ctx.output(ctx.command + ".seeds.csv"), pipeline::per_seed_csv(reports));
  for (const auto& r : reports) {
    for (const auto& a : r.attacks) {
      if (!a.identity_holds()) {
        throw ContractError("attack counts violate AUA = clean * (1 - ASR) for " + r.condition);
      }
    }
  }
  ctx.out << pipeline::human_summary(reports);
}

pipeline::ExperimentConfig experiment_config(const RunConfig& c, bool attack) {
  pipeline::ExperimentConfig e;
  e.model = c.model;
  e.augmenter = c.train;
  e.augmenter.seed = c.seed;
  e.downstream = c.downstream;
  e.modification = c.modification;
  e.multiplier = c.multiplier;
  e.train_fraction = c.train_fraction;
  e.low_resource_fraction = c.low_resource_fraction;
  e.floor_per_class = c.floor_per_class;
  e.seeds = c.seeds;
  e.attack = attack;
  e.attack_cfg = c.attack;
  e.threads = c.threads;
  return e;
}

std::vector<pipeline::AugmentedPair> read_pairs_with_vocab(const std::string& path,
                                                           std::vector<pipeline::CorpusRecord>& texts,
                                                           std::size_t classes,
                                                           std::optional<model::Vocabulary>& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("augmented file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::istringstream lines(ss.str());
  std::string line;
  std::vector<pipeline::CorpusRecord> all = texts;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      all.push_back({json::parse(line).at("text").get<std::string>(), 0});
    } catch (const json::exception& e) {
      throw InputError(path + ": " + e.what());
    }
  }
  vocab = pipeline::build_vocabulary(all);
  return pipeline::parse_augmented(ss.str(), *vocab, classes);
}

void cmd_eval(Context& ctx, bool attack) {
  auto corpus = load_corpus(ctx);
  const std::size_t classes = pipeline::num_classes_of(corpus);
  std::vector<pipeline::EvalReport> reports;
  if (!ctx.cfg.augmented.empty()) {
    std::optional<model::Vocabulary> vocab;
    const auto pairs = read_pairs_with_vocab(ctx.cfg.augmented, corpus, classes, vocab);
    pipeline::EvalConfig ec;
    ec.seeds = ctx.cfg.seeds;
    ec.train_fraction = ctx.cfg.train_fraction;
    ec.low_resource_fraction = ctx.cfg.low_resource_fraction;
    ec.floor_per_class = ctx.cfg.floor_per_class;
    ec.model = ctx.cfg.model;
    ec.downstream = ctx.cfg.downstream;
    ec.attack = attack;
    ec.attack_cfg = ctx.cfg.attack;
    ec.threads = ctx.cfg.threads;
    reports = pipeline::downstream_eval(corpus, pairs, *vocab, ec);
    ctx.manifest["augmented_pairs"] = pairs.size();
  } else {
    pipeline::Condition aug;
    aug.name = "augmented";
    aug.strategy = ctx.cfg.strategy;
    aug.label_mode = ctx.cfg.label_mode;
    aug.curriculum = ctx.cfg.curriculum;
    const std::vector<pipeline::Condition> conds{pipeline::baseline_condition(), aug};
    const auto res = pipeline::run_experiment(corpus, experiment_config(ctx.cfg, attack), conds);
    ctx.manifest["skipped"] = res.skipped;
    ctx.manifest["attempts"] = res.attempts;
    reports = res.reports;
  }
  emit_reports(ctx, reports);
}

void cmd_ablate(Context& ctx, const std::string& grid) {
  const auto corpus = load_corpus(ctx);
  std::vector<pipeline::Condition> conds;
  if (grid == "decoding") {
    conds = pipeline::decoding_grid(ctx.cfg.strategy);
  } else if (grid == "labels") {
    conds = pipeline::label_grid(ctx.cfg.strategy);
  } else if (grid == "curriculum") {
    conds = pipeline::curriculum_grid(ctx.cfg.strategy);
  } else {
    throw UsageError("unknown ablation grid '" + grid + "' (decoding, labels, curriculum)");
  }
  const auto res = pipeline::run_experiment(corpus, experiment_config(ctx.cfg, false), conds);
  ctx.manifest["grid"] = grid;
  ctx.manifest["skipped"] = res.skipped;
  ctx.manifest["attempts"] = res.attempts;
  emit_reports(ctx, res.reports);
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const ValueError*>(&e)) return "value";
  if (dynamic_cast<const InputError*>(&e)) return "input";
  if (dynamic_cast<const ContractError*>(&e)) return "contract";
  if (dynamic_cast<const GenerationError*>(&e)) return "generation";
  return "internal";
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw ValueError("--seeds must name at least one seed");
  if (multiplier < 1) throw ValueError("--multiplier must be >= 1");
  if (threads < 1) throw ValueError("--threads must be >= 1");
  train.validate();
  modification.validate();
  downstream.validate();
  attack.validate();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  StrategyFlags sf;
  std::string pooling = "mean";
  std::string label_mode = "soft";
  std::string curriculum = "off";
  std::string grid;

  CLI::App app{"Boundary-aware text augmentation toolkit", "dbaug"};
  app.set_version_flag("--version", pipeline::version());
  app.set_config("--config", "", "Read options from a key=value (INI/TOML) file; flags override it");
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();

  auto* g = "Paths";
  app.add_option("--corpus", cfg.corpus, "Line-delimited {text,label} corpus")->group(g);
  app.add_option("--checkpoint", cfg.checkpoint, "Model checkpoint (augment)")->group(g);
  app.add_option("--augmented", cfg.augmented, "Augmented pairs to evaluate as is (eval, attack)")
      ->group(g);
  app.add_option("--out-dir", cfg.out_dir, "Directory for outputs and the manifest")->group(g);

  g = "Model";
  app.add_option("--n-per-class", cfg.n_per_class, "Toy corpus size per class")->group(g);
  app.add_option("--embed-dim", cfg.model.embed_dim)->group(g);
  app.add_option("--latent-dim", cfg.model.latent_dim)->group(g);
  app.add_option("--encoder-hidden", cfg.model.encoder_hidden)->group(g);
  app.add_option("--decoder-hidden", cfg.model.decoder_hidden)->group(g);
  app.add_option("--position-dim", cfg.model.position_dim)->group(g);
  app.add_option("--max-len", cfg.model.max_len, "Longest decoded sentence")->group(g);
  app.add_option("--pooling", pooling)->check(CLI::IsMember({"mean", "mean_positional"}))->group(g);
  app.add_option("--embed-init", cfg.model.embed_init, "Encoder embedding init range")->group(g);

  g = "Training";
  app.add_option("--epochs1", cfg.train.epochs_stage1, "Classifier-stage epochs")->group(g);
  app.add_option("--epochs2", cfg.train.epochs_stage2, "Decoder-stage epochs")->group(g);
  app.add_option("--lr", cfg.train.learning_rate)->group(g);
  app.add_option("--batch-size", cfg.train.batch_size)->group(g);
  app.add_option("--eps-cls", cfg.train.eps_cls)->group(g);
  app.add_option("--eps-recon", cfg.train.eps_recon)->group(g);
  app.add_option("--seed", cfg.seed, "Seed for corpus generation, training and augmentation")
      ->group(g);

  g = "Augmentation";
  app.add_option("--n", cfg.modification.steps, "Boundary iterations")->group(g);
  app.add_option("--lambda", cfg.modification.lambda, "Boundary step size")->group(g);
  app.add_option("--strategy", sf.name)
      ->check(CLI::IsMember({"greedy", "beam", "top_k", "mid_k"}))
      ->group(g);
  app.add_option("--k", sf.k)->group(g);
  app.add_option("--k-prime", sf.k_prime)->group(g);
  app.add_option("--threshold", sf.threshold)->group(g);
  app.add_option("--beam-width", sf.beam_width)->group(g);
  app.add_option("--temperature", sf.temperature)->group(g);
  app.add_flag("--midk-literal-pseudocode", sf.literal,
               "Exclude the top-k' tokens when their mass reaches the threshold")
      ->group(g);
  app.add_option("--multiplier", cfg.multiplier, "Pairs per source sentence")->group(g);
  app.add_option("--label-mode", label_mode)->check(CLI::IsMember({"soft", "hard"}))->group(g);
  app.add_option("--curriculum", curriculum)->check(CLI::IsMember({"on", "off"}))->group(g);
  app.add_option("--threads", cfg.threads)->group(g);

  g = "Evaluation";
  app.add_option("--seeds", cfg.seeds, "Comma-separated seeds")->delimiter(',')->group(g);
  app.add_option("--train-fraction", cfg.train_fraction)->group(g);
  app.add_option("--fraction", cfg.low_resource_fraction, "Low-resource fraction of train")
      ->group(g);
  app.add_option("--floor-per-class", cfg.floor_per_class)->group(g);
  app.add_option("--downstream-epochs", cfg.downstream.epochs)->group(g);
  app.add_option("--downstream-lr", cfg.downstream.learning_rate)->group(g);
  app.add_option("--downstream-embed-init", cfg.downstream.embed_init)->group(g);
  app.add_option("--budget", cfg.attack.budget, "Attack budget (fraction of tokens)")->group(g);
  app.add_option("--neutrality", cfg.attack.neutrality)->group(g);

  app.add_subcommand("gen-corpus", "Write a toy sentiment corpus");
  app.add_subcommand("train", "Train encoder, classifier and decoder; write a checkpoint");
  app.add_subcommand("augment", "Generate boundary-aware augmented pairs");
  app.add_subcommand("eval", "Downstream accuracy with and without augmentation");
  app.add_subcommand("attack", "Like eval, plus the substitution attack");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  ablate->add_option("grid", grid, "decoding, labels or curriculum")
      ->required()
      ->check(CLI::IsMember({"decoding", "labels", "curriculum"}));

  std::vector<const char*> argv{"dbaug"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << pipeline::version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dbaug: usage error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Context ctx{command, cfg, out, err, json::object(), {}};
  try {
    ctx.cfg.model.pooling = model::pooling_from_string(pooling);
    ctx.cfg.label_mode = pipeline::label_mode_from_string(label_mode);
    ctx.cfg.curriculum = curriculum == "on";
    ctx.cfg.strategy = make_strategy(sf, ctx.cfg.model.max_len);
    ctx.cfg.validate();
    fs::create_directories(ctx.cfg.out_dir);

    if (command == "gen-corpus") cmd_gen_corpus(ctx);
    else if (command == "train") cmd_train(ctx);
    else if (command == "augment") cmd_augment(ctx);
    else if (command == "eval") cmd_eval(ctx, false);
    else if (command == "attack") cmd_eval(ctx, true);
    else cmd_ablate(ctx, grid);

    json manifest = ctx.manifest;
    manifest["command"] = command == "ablate" ? "ablate " + grid : command;
    manifest["version"] = pipeline::version();
    manifest["config"] = config_json(ctx.cfg);
    manifest["seeds"] = ctx.cfg.seeds;
    std::vector<std::string> outputs = ctx.outputs;
    manifest["outputs"] = outputs;
    write_file(fs::path(ctx.cfg.out_dir) / (command + ".manifest.json"), manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const UsageError& e) {
    err << "dbaug: " << command << ": usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "dbaug: " << command << ": error[" << error_kind(e) << "]: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dbaug::cli
