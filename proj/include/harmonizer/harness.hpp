#ifndef HARMONIZER_HARNESS_HPP
#define HARMONIZER_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harmonizer/ga.hpp"
#include "harmonizer/hmm.hpp"
#include "harmonizer/metrics.hpp"
#include "harmonizer/neural.hpp"
#include "harmonizer/preprocess.hpp"
#include "harmonizer/template_matcher.hpp"

namespace harmonizer::harness {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum class ModelKind { Template, Hmm, Ga, Bilstm, MtHarmonizer };

const std::vector<ModelKind>& all_models();
std::string model_name(ModelKind kind);
std::optional<ModelKind> parse_model_name(const std::string& name);

// One global seed fans out per model as seed + fnv1a64(model name), so adding
// a model never perturbs the other models' randomness.
std::uint64_t per_model_seed(std::uint64_t global_seed, const std::string& name);

// write-temp-then-rename, so partially written outputs never appear.
void atomic_write_file(const std::string& path, const std::string& content);
std::string file_hash_hex(const std::string& path);

struct TrainOutcome {
  ModelKind kind;
  bool ok = false;
  std::string message;
  std::string checkpoint_path;
};

struct TrainOptions {
  GaConfig ga;
  NeuralConfig neural;
};

std::vector<TrainOutcome> train_models(const std::vector<LeadSheet>& corpus,
                                       const SplitManifest& manifest,
                                       const std::vector<ModelKind>& kinds,
                                       const std::string& out_dir, std::uint64_t global_seed,
                                       const TrainOptions& options);

// Dispatches on the checkpoint's "type" field.
ChordSequence harmonize_with_checkpoint(const std::string& checkpoint_path,
                                        const LeadSheet& sheet);

struct EvaluationRow {
  std::string model;  // display name; "human-composed" for the ground truth
  MetricReport report;
};

struct EvaluationResult {
  std::vector<EvaluationRow> rows;
  std::vector<std::string> missing_checkpoints;
  std::string comparison_csv() const;
  std::string comparison_text() const;
};

EvaluationResult evaluate_models(const std::vector<LeadSheet>& corpus,
                                 const SplitManifest& manifest,
                                 const std::string& checkpoint_dir,
                                 const std::vector<ModelKind>& kinds);

// Records versions, seeds, and input hashes alongside a command's outputs.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        std::uint64_t global_seed,
                        const std::map<std::string, std::string>& input_files);

}  // namespace harmonizer::harness

#endif
