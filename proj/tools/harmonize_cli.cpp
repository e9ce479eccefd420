// Command-line front end: preprocessing, training, harmonizing, and the
// side-by-side model comparison. Exit codes: 0 success, 1 partial model
// failure, 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "harmonizer/harness.hpp"
#include "harmonizer/midi_export.hpp"

namespace fs = std::filesystem;
using namespace harmonizer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct GaFlags {
  int population = 100;
  int generations = 500;
  int tournament_k = 3;
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // negative: default 1/M
  int elitism = 1;

  GaConfig to_config() const {
    GaConfig c;
    c.population = population;
    c.generations = generations;
    c.tournament_k = tournament_k;
    c.crossover_rate = crossover_rate;
    if (mutation_rate >= 0.0) c.mutation_rate = mutation_rate;
    c.elitism = elitism;
    return c;
  }
};

struct NeuralFlags {
  int hidden = 64;
  double dropout = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 10;
  double gamma = 1.5;
  double alpha_others = 1.8;

  NeuralConfig to_config() const {
    NeuralConfig c;
    c.hidden_size = hidden;
    c.dropout = dropout;
    c.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.max_epochs = max_epochs;
    c.gamma = gamma;
    c.alpha_others = alpha_others;
    return c;
  }
};

void add_ga_flags(CLI::App* cmd, GaFlags& f) {
  cmd->add_option("--ga-population", f.population, "GA population size");
  cmd->add_option("--ga-generations", f.generations, "GA generations");
  cmd->add_option("--ga-tournament-k", f.tournament_k, "GA tournament size");
  cmd->add_option("--ga-crossover-rate", f.crossover_rate, "GA one-point crossover rate");
  cmd->add_option("--ga-mutation-rate", f.mutation_rate,
                  "GA per-gene mutation rate (negative = 1/M)");
  cmd->add_option("--ga-elitism", f.elitism, "GA elite count");
}

void add_neural_flags(CLI::App* cmd, NeuralFlags& f) {
  cmd->add_option("--nn-hidden", f.hidden, "hidden units per direction");
  cmd->add_option("--nn-dropout", f.dropout, "dropout probability");
  cmd->add_option("--nn-learning-rate", f.learning_rate, "Adam learning rate");
  cmd->add_option("--nn-batch-size", f.batch_size, "minibatch size");
  cmd->add_option("--nn-epochs", f.max_epochs, "maximum training epochs");
  cmd->add_option("--nn-gamma", f.gamma, "multitask function-loss weight");
  cmd->add_option("--nn-alpha-others", f.alpha_others, "decode boost for others-function chords");
}

// Flat key=value config support: entries become --key value arguments placed
// right after the subcommand, so anything given explicitly on the command
// line overrides the file.
std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
  std::string config_path;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw std::runtime_error("--config needs a file argument");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config_path.empty()) return out;

  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config file " + config_path);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    const std::string flag = "--" + key;
    bool given = false;
    for (const std::string& a : out)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (given) continue;
    injected.push_back(flag);
    if (!value.empty()) injected.push_back(value);
  }
  // keep the subcommand name first, then file-sourced flags, then the rest
  if (out.empty()) return injected;
  std::vector<std::string> merged;
  merged.push_back(out.front());
  merged.insert(merged.end(), injected.begin(), injected.end());
  merged.insert(merged.end(), out.begin() + 1, out.end());
  return merged;
}

std::vector<harness::ModelKind> parse_models_csv(const std::string& csv) {
  std::vector<harness::ModelKind> kinds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto kind = harness::parse_model_name(item);
    if (!kind) throw CLI::ValidationError("--models", "unknown model '" + item + "'");
    kinds.push_back(*kind);
  }
  if (kinds.empty()) kinds = harness::all_models();
  return kinds;
}

// Melody inputs are processed-corpus records; a missing or empty chord track
// is padded with N.C. so plain melodies are accepted.
std::vector<LeadSheet> read_melody_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json root = nlohmann::json::parse(ss.str());
  if (!root.is_array()) throw std::runtime_error(path + ": top level must be an array");
  for (auto& rec : root) {
    if (!rec.contains("chords") || (rec.at("chords").is_array() && rec.at("chords").empty())) {
      const int bars = rec.value("num_bars", 0);
      rec["chords"] = std::vector<int>(static_cast<std::size_t>(2 * bars), 0);
    }
  }
  return corpus_from_json(root.dump(), path);
}

int run_preprocess(const std::string& in_path, const std::string& out_dir, std::uint64_t seed,
                   std::vector<double> ratios) {
  const std::vector<RawLeadSheet> raws = read_raw_corpus(in_path);
  auto [sheets, summary] = preprocess_corpus(raws);
  fs::create_directories(out_dir);

  const std::string corpus_path = (fs::path(out_dir) / "corpus.json").string();
  harness::atomic_write_file(corpus_path, corpus_to_json(sheets));

  const SplitManifest manifest =
      split_corpus(sheets, {ratios[0], ratios[1], ratios[2]}, seed);
  const std::string manifest_path = (fs::path(out_dir) / "split.json").string();
  harness::atomic_write_file(manifest_path, manifest.to_json());

  nlohmann::json sj;
  sj["input"] = summary.input;
  sj["kept"] = summary.kept;
  sj["dropped_rest_ratio"] = summary.dropped_rest;
  sj["dropped_length"] = summary.dropped_length;
  harness::atomic_write_file((fs::path(out_dir) / "preprocess_summary.json").string(),
                             sj.dump(2) + "\n");
  harness::write_run_manifest(out_dir, "preprocess", seed, {{"raw_corpus", in_path}});

  std::cout << "kept " << summary.kept << "/" << summary.input << " sheets (dropped "
            << summary.dropped_rest << " rest-ratio, " << summary.dropped_length << " length)\n"
            << "train/validation/test: " << manifest.train.size() << "/"
            << manifest.validation.size() << "/" << manifest.test.size() << "\n";
  return kExitOk;
}

int run_train(const std::string& corpus_path, const std::string& manifest_path,
              const std::string& out_dir, std::uint64_t seed, const std::string& models_csv,
              const GaFlags& ga, const NeuralFlags& nn) {
  const std::vector<LeadSheet> corpus = read_corpus(corpus_path);
  const SplitManifest manifest = SplitManifest::load(manifest_path);
  const std::vector<harness::ModelKind> kinds = parse_models_csv(models_csv);

  harness::TrainOptions options;
  options.ga = ga.to_config();
  options.neural = nn.to_config();

  const auto outcomes =
      harness::train_models(corpus, manifest, kinds, out_dir, seed, options);
  harness::write_run_manifest(out_dir, "train", seed,
                              {{"corpus", corpus_path}, {"split", manifest_path}});

  bool any_failed = false;
  for (const auto& outcome : outcomes) {
    if (outcome.ok) {
      std::cout << "trained " << harness::model_name(outcome.kind) << " -> "
                << outcome.checkpoint_path << "\n";
    } else {
      any_failed = true;
      std::cerr << "FAILED " << harness::model_name(outcome.kind) << ": " << outcome.message
                << "\n";
    }
  }
  return any_failed ? kExitPartial : kExitOk;
}

int run_harmonize(const std::string& checkpoint, const std::string& in_path,
                  const std::string& out_path, const std::string& midi_path) {
  std::vector<LeadSheet> sheets = read_melody_input(in_path);
  for (LeadSheet& sheet : sheets) {
    sheet.chords = harness::harmonize_with_checkpoint(checkpoint, sheet);
    std::cout << sheet.id << ":";
    for (const ChordLabel& c : sheet.chords) std::cout << ' ' << c.name();
    std::cout << "\n";
  }
  if (!out_path.empty()) harness::atomic_write_file(out_path, corpus_to_json(sheets));
  if (!midi_path.empty()) {
    if (sheets.size() == 1) {
      write_midi(sheets.front(), midi_path);
    } else {
      for (std::size_t i = 0; i < sheets.size(); ++i)
        write_midi(sheets[i], midi_path + "." + std::to_string(i) + ".mid");
    }
  }
  return kExitOk;
}

int run_evaluate(const std::string& corpus_path, const std::string& manifest_path,
                 const std::string& checkpoint_dir, const std::string& out_dir,
                 const std::string& models_csv, std::uint64_t seed) {
  const std::vector<LeadSheet> corpus = read_corpus(corpus_path);
  const SplitManifest manifest = SplitManifest::load(manifest_path);
  const std::vector<harness::ModelKind> kinds = parse_models_csv(models_csv);

  const harness::EvaluationResult result =
      harness::evaluate_models(corpus, manifest, checkpoint_dir, kinds);

  fs::create_directories(out_dir);
  for (const auto& row : result.rows) {
    harness::atomic_write_file((fs::path(out_dir) / (row.model + "_metrics.csv")).string(),
                               row.report.to_csv());
    harness::atomic_write_file((fs::path(out_dir) / (row.model + "_metrics.json")).string(),
                               row.report.to_json());
  }
  harness::atomic_write_file((fs::path(out_dir) / "comparison.csv").string(),
                             result.comparison_csv());
  harness::atomic_write_file((fs::path(out_dir) / "comparison.txt").string(),
                             result.comparison_text());
  harness::write_run_manifest(out_dir, "evaluate", seed,
                              {{"corpus", corpus_path}, {"split", manifest_path}});

  std::cout << result.comparison_text();
  return result.missing_checkpoints.empty() ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"melody harmonization toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  int synth_n = 100;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "synthetic.json";
  std::string synth_format = "processed";
  synth->add_option("--n", synth_n, "number of lead sheets");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output file")->required();
  synth->add_option("--format", synth_format, "processed|raw")
      ->check(CLI::IsMember({"processed", "raw"}));

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "reduce a raw corpus and split it");
  std::string pre_in, pre_out;
  std::uint64_t pre_seed = 1;
  std::vector<double> pre_ratios = {0.8, 0.1, 0.1};
  pre->add_option("--in", pre_in, "raw corpus JSON")->required();
  pre->add_option("--out", pre_out, "output directory")->required();
  pre->add_option("--seed", pre_seed, "split seed");
  pre->add_option("--ratios", pre_ratios, "train/validation/test ratios")->expected(3);

  // split
  auto* split = app.add_subcommand("split", "write a split manifest for a processed corpus");
  std::string split_corpus_path, split_out;
  std::uint64_t split_seed = 1;
  std::vector<double> split_ratios = {0.8, 0.1, 0.1};
  split->add_option("--corpus", split_corpus_path, "processed corpus JSON")->required();
  split->add_option("--out", split_out, "manifest output file")->required();
  split->add_option("--seed", split_seed, "split seed");
  split->add_option("--ratios", split_ratios, "train/validation/test ratios")->expected(3);

  // train
  auto* train = app.add_subcommand("train", "train model checkpoints");
  std::string train_corpus, train_manifest, train_out, train_models_csv;
  std::uint64_t train_seed = 1;
  GaFlags train_ga;
  NeuralFlags train_nn;
  train->add_option("--corpus", train_corpus, "processed corpus JSON")->required();
  train->add_option("--manifest", train_manifest, "split manifest")->required();
  train->add_option("--out", train_out, "checkpoint directory")->required();
  train->add_option("--seed", train_seed, "global seed");
  train->add_option("--models", train_models_csv, "comma-separated model list (default: all)");
  add_ga_flags(train, train_ga);
  add_neural_flags(train, train_nn);

  // harmonize
  auto* harm = app.add_subcommand("harmonize", "harmonize melodies with a checkpoint");
  std::string harm_ckpt, harm_in, harm_out, harm_midi;
  harm->add_option("--checkpoint", harm_ckpt, "model checkpoint")->required();
  harm->add_option("--in", harm_in, "melody input (processed-corpus record array)")->required();
  harm->add_option("--out", harm_out, "write harmonized lead sheets here");
  harm->add_option("--midi", harm_midi, "write a MIDI rendering here");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "compare checkpoints on the test split");
  std::string eval_corpus, eval_manifest, eval_ckpts, eval_out, eval_models_csv;
  std::uint64_t eval_seed = 1;
  eval->add_option("--corpus", eval_corpus, "processed corpus JSON")->required();
  eval->add_option("--manifest", eval_manifest, "split manifest")->required();
  eval->add_option("--checkpoints", eval_ckpts, "checkpoint directory")->required();
  eval->add_option("--out", eval_out, "report directory")->required();
  eval->add_option("--models", eval_models_csv, "comma-separated model list (default: all)");
  eval->add_option("--seed", eval_seed, "seed recorded in the manifest");

  // compare: synth/preprocess + train + evaluate in one run
  auto* compare = app.add_subcommand("compare", "full experiment: preprocess, train, evaluate");
  std::string cmp_raw, cmp_out, cmp_models_csv;
  int cmp_synth_n = 0;
  std::uint64_t cmp_seed = 1;
  GaFlags cmp_ga;
  NeuralFlags cmp_nn;
  compare->add_option("--in", cmp_raw, "raw corpus JSON (omit to use --synth-n)");
  compare->add_option("--synth-n", cmp_synth_n, "generate this many synthetic sheets instead");
  compare->add_option("--out", cmp_out, "output directory")->required();
  compare->add_option("--seed", cmp_seed, "global seed");
  compare->add_option("--models", cmp_models_csv, "comma-separated model list (default: all)");
  add_ga_flags(compare, cmp_ga);
  add_neural_flags(compare, cmp_nn);

  // every subcommand accepts --config FILE (applied before CLI11 parsing)
  for (CLI::App* sub : app.get_subcommands({}))
    sub->add_option("--config", "flat key=value config file; flags override it")
        ->configurable(false)
        ->expected(0, 1);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = apply_config_file(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    std::vector<const char*> cargv = {argv[0]};
    for (const std::string& a : args) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      if (synth_format == "raw") {
        write_raw_corpus(generate_synthetic_raw_corpus(synth_n, synth_seed), synth_out);
      } else {
        write_corpus(generate_synthetic_corpus(synth_n, synth_seed), synth_out);
      }
      std::cout << "wrote " << synth_n << " sheets to " << synth_out << "\n";
      return kExitOk;
    }
    if (pre->parsed()) return run_preprocess(pre_in, pre_out, pre_seed, pre_ratios);
    if (split->parsed()) {
      const std::vector<LeadSheet> sheets = read_corpus(split_corpus_path);
      const SplitManifest manifest =
          split_corpus(sheets, {split_ratios[0], split_ratios[1], split_ratios[2]}, split_seed);
      harness::atomic_write_file(split_out, manifest.to_json());
      std::cout << "train/validation/test: " << manifest.train.size() << "/"
                << manifest.validation.size() << "/" << manifest.test.size() << "\n";
      return kExitOk;
    }
    if (train->parsed())
      return run_train(train_corpus, train_manifest, train_out, train_seed, train_models_csv,
                       train_ga, train_nn);
    if (harm->parsed()) return run_harmonize(harm_ckpt, harm_in, harm_out, harm_midi);
    if (eval->parsed())
      return run_evaluate(eval_corpus, eval_manifest, eval_ckpts, eval_out, eval_models_csv,
                          eval_seed);
    if (compare->parsed()) {
      fs::create_directories(cmp_out);
      std::string raw_path = cmp_raw;
      if (raw_path.empty()) {
        if (cmp_synth_n <= 0)
          throw std::runtime_error("compare: need --in or a positive --synth-n");
        raw_path = (fs::path(cmp_out) / "raw.json").string();
        write_raw_corpus(generate_synthetic_raw_corpus(cmp_synth_n, cmp_seed), raw_path);
      }
      const std::string stage_dir = (fs::path(cmp_out) / "processed").string();
      int rc = run_preprocess(raw_path, stage_dir, cmp_seed, {0.8, 0.1, 0.1});
      if (rc != kExitOk) return rc;
      const std::string corpus_path = (fs::path(stage_dir) / "corpus.json").string();
      const std::string manifest_path = (fs::path(stage_dir) / "split.json").string();
      const std::string ckpt_dir = (fs::path(cmp_out) / "checkpoints").string();
      rc = run_train(corpus_path, manifest_path, ckpt_dir, cmp_seed, cmp_models_csv, cmp_ga,
                     cmp_nn);
      const int eval_rc =
          run_evaluate(corpus_path, manifest_path, ckpt_dir,
                       (fs::path(cmp_out) / "reports").string(), cmp_models_csv, cmp_seed);
      return rc != kExitOk ? rc : eval_rc;
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
