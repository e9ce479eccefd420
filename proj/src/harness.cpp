#include "harmonizer/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace harmonizer::harness {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> kinds = {ModelKind::Template, ModelKind::Hmm, ModelKind::Ga,
                                               ModelKind::Bilstm, ModelKind::MtHarmonizer};
  return kinds;
}

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Template: return "template";
    case ModelKind::Hmm: return "hmm";
    case ModelKind::Ga: return "ga";
    case ModelKind::Bilstm: return "bilstm";
    case ModelKind::MtHarmonizer: return "mtharmonizer";
  }
  return "?";
}

std::optional<ModelKind> parse_model_name(const std::string& name) {
  for (ModelKind k : all_models())
    if (model_name(k) == name) return k;
  return std::nullopt;
}

std::uint64_t per_model_seed(std::uint64_t global_seed, const std::string& name) {
  return global_seed + fnv1a64(name);
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(text);
  return hex.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Checkpoints are the model's own JSON with run provenance added on top.
void save_checkpoint(const std::string& path, const std::string& model_json,
                     const std::string& corpus_hash, std::uint64_t seed) {
  json j = json::parse(model_json);
  j["corpus_hash"] = corpus_hash;
  j["seed"] = seed;
  atomic_write_file(path, j.dump() + "\n");
}

json ga_config_to_json(const GaConfig& c) {
  json j;
  j["population"] = c.population;
  j["generations"] = c.generations;
  j["tournament_k"] = c.tournament_k;
  j["crossover_rate"] = c.crossover_rate;
  if (c.mutation_rate) j["mutation_rate"] = *c.mutation_rate;
  j["elitism"] = c.elitism;
  j["weights"] = c.weights;
  j["seed"] = c.seed;
  return j;
}

GaConfig ga_config_from_json(const json& j) {
  GaConfig c;
  c.population = j.at("population").get<int>();
  c.generations = j.at("generations").get<int>();
  c.tournament_k = j.at("tournament_k").get<int>();
  c.crossover_rate = j.at("crossover_rate").get<double>();
  if (j.contains("mutation_rate")) c.mutation_rate = j.at("mutation_rate").get<double>();
  c.elitism = j.at("elitism").get<int>();
  for (int i = 0; i < 4; ++i) c.weights[static_cast<std::size_t>(i)] = j.at("weights").at(static_cast<std::size_t>(i)).get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::vector<TrainOutcome> train_models(const std::vector<LeadSheet>& corpus,
                                       const SplitManifest& manifest,
                                       const std::vector<ModelKind>& kinds,
                                       const std::string& out_dir, std::uint64_t global_seed,
                                       const TrainOptions& options) {
  fs::create_directories(out_dir);
  const std::vector<LeadSheet> train = select_split(corpus, manifest.train);
  const std::vector<LeadSheet> validation = select_split(corpus, manifest.validation);
  const std::string corpus_hash = [&] {
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(corpus_to_json(corpus));
    return hex.str();
  }();

  std::vector<TrainOutcome> outcomes;
  for (ModelKind kind : kinds) {
    TrainOutcome outcome;
    outcome.kind = kind;
    const std::string name = model_name(kind);
    const std::uint64_t seed = per_model_seed(global_seed, name);
    const std::string path = (fs::path(out_dir) / (name + ".json")).string();
    try {
      switch (kind) {
        case ModelKind::Template: {
          TemplateMatcherModel model;
          model.seed = seed;
          save_checkpoint(path, model.to_json(), corpus_hash, seed);
          break;
        }
        case ModelKind::Hmm: {
          const HmmModel model = fit_hmm(train);
          save_checkpoint(path, model.to_json(), corpus_hash, seed);
          break;
        }
        case ModelKind::Ga: {
          const GaTables tables = fit_ga_tables(train);
          GaConfig cfg = options.ga;
          cfg.seed = seed;
          json j = json::parse(tables.to_json());
          j["config"] = ga_config_to_json(cfg);
          save_checkpoint(path, j.dump() + "\n", corpus_hash, seed);
          break;
        }
        case ModelKind::Bilstm:
        case ModelKind::MtHarmonizer: {
          NeuralConfig cfg = options.neural;
          cfg.seed = seed;
          const NeuralModel model =
              train_neural(train, validation, cfg, kind == ModelKind::MtHarmonizer);
          save_checkpoint(path, model.to_json(), corpus_hash, seed);
          break;
        }
      }
      outcome.ok = true;
      outcome.checkpoint_path = path;
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.message = e.what();
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

namespace {

// A checkpoint parsed once; harmonizes any number of sheets.
struct LoadedCheckpoint {
  std::string type;
  TemplateMatcherModel tmpl;
  HmmModel hmm;
  GaTables ga_tables;
  GaConfig ga_config;
  NeuralModel neural;

  ChordSequence harmonize(const LeadSheet& sheet) const {
    if (type == "template") return template_harmonize(tmpl, sheet);
    if (type == "hmm") return hmm_harmonize(hmm, sheet);
    if (type == "ga") return ga_harmonize(ga_tables, ga_config, sheet);
    return neural_decode_sheet(neural, sheet);
  }
};

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  LoadedCheckpoint loaded;
  loaded.type = j.value("type", "");
  if (loaded.type == "template") {
    loaded.tmpl = TemplateMatcherModel::from_json(text, path);
  } else if (loaded.type == "hmm") {
    loaded.hmm = HmmModel::from_json(text, path);
  } else if (loaded.type == "ga") {
    loaded.ga_tables = GaTables::from_json(text, path);
    if (j.contains("config")) loaded.ga_config = ga_config_from_json(j.at("config"));
  } else if (loaded.type == "bilstm" || loaded.type == "mtharmonizer") {
    loaded.neural = NeuralModel::from_json(text, path);
  } else {
    throw std::runtime_error(path + ": unknown checkpoint type '" + loaded.type + "'");
  }
  return loaded;
}

}  // namespace

ChordSequence harmonize_with_checkpoint(const std::string& checkpoint_path,
                                        const LeadSheet& sheet) {
  return load_checkpoint(checkpoint_path).harmonize(sheet);
}

namespace {

std::string fmt_opt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v);
  return buf;
}

}  // namespace

std::string EvaluationResult::comparison_csv() const {
  std::ostringstream out;
  out << "model,CTnCTR,PCS,MCTD,CHE,CC,CTD,accuracy\n";
  for (const EvaluationRow& row : rows) {
    const MetricSummary s = row.report.summary();
    out << row.model << ',' << fmt_opt(s.ctnctr) << ',' << fmt_opt(s.pcs) << ','
        << fmt_opt(s.mctd) << ',' << fmt_opt(s.che) << ',' << fmt_opt(s.cc) << ','
        << fmt_opt(s.ctd) << ',' << fmt_opt(s.accuracy) << '\n';
  }
  return out.str();
}

std::string EvaluationResult::comparison_text() const {
  std::ostringstream out;
  out << std::left << std::setw(16) << "model" << std::right << std::setw(9) << "CTnCTR"
      << std::setw(8) << "PCS" << std::setw(8) << "MCTD" << std::setw(8) << "CHE" << std::setw(8)
      << "CC" << std::setw(8) << "CTD" << std::setw(10) << "accuracy" << '\n';
  for (const EvaluationRow& row : rows) {
    const MetricSummary s = row.report.summary();
    out << std::left << std::setw(16) << row.model << std::right << std::setw(9)
        << fmt_opt(s.ctnctr, 3) << std::setw(8) << fmt_opt(s.pcs, 3) << std::setw(8)
        << fmt_opt(s.mctd, 3) << std::setw(8) << fmt_opt(s.che, 3) << std::setw(8)
        << fmt_opt(s.cc, 3) << std::setw(8) << fmt_opt(s.ctd, 3) << std::setw(10)
        << fmt_opt(s.accuracy, 3) << '\n';
  }
  if (!missing_checkpoints.empty()) {
    out << "missing checkpoints:";
    for (const std::string& name : missing_checkpoints) out << ' ' << name;
    out << '\n';
  }
  return out.str();
}

EvaluationResult evaluate_models(const std::vector<LeadSheet>& corpus,
                                 const SplitManifest& manifest,
                                 const std::string& checkpoint_dir,
                                 const std::vector<ModelKind>& kinds) {
  const std::vector<LeadSheet> test = select_split(corpus, manifest.test);
  if (test.empty()) throw std::runtime_error("evaluate_models: empty test split");

  EvaluationResult result;

  // Table row one: the human-composed ground truth against itself.
  EvaluationRow human;
  human.model = "human-composed";
  for (const LeadSheet& sheet : test)
    human.report.rows.push_back(compute_sheet_metrics(sheet, sheet.chords, &sheet.chords));
  result.rows.push_back(std::move(human));

  for (ModelKind kind : kinds) {
    const std::string name = model_name(kind);
    const std::string path = (fs::path(checkpoint_dir) / (name + ".json")).string();
    if (!fs::exists(path)) {
      result.missing_checkpoints.push_back(name);
      continue;
    }
    const LoadedCheckpoint model = load_checkpoint(path);
    EvaluationRow row;
    row.model = name;
    for (const LeadSheet& sheet : test) {
      const ChordSequence predicted = model.harmonize(sheet);
      row.report.rows.push_back(compute_sheet_metrics(sheet, predicted, &sheet.chords));
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        std::uint64_t global_seed,
                        const std::map<std::string, std::string>& input_files) {
  json j;
  j["toolkit_version"] = kToolkitVersion;
  j["command"] = command;
  j["global_seed"] = global_seed;
  json seeds;
  for (ModelKind kind : all_models())
    seeds[model_name(kind)] = per_model_seed(global_seed, model_name(kind));
  j["per_model_seeds"] = seeds;
  json inputs;
  for (const auto& [label, path] : input_files) {
    json entry;
    // basename only: absolute paths would make otherwise-identical runs
    // from different directories diff
    entry["file"] = fs::path(path).filename().string();
    entry["fnv1a64"] = file_hash_hex(path);
    inputs[label] = entry;
  }
  j["inputs"] = inputs;
  atomic_write_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace harmonizer::harness
