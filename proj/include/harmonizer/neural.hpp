#ifndef HARMONIZER_NEURAL_HPP
#define HARMONIZER_NEURAL_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "harmonizer/leadsheet.hpp"
#include "harmonizer/rng.hpp"

namespace harmonizer {

struct NeuralConfig {
  int hidden_size = 64;  // per direction
  double dropout = 0.2;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int max_epochs = 10;
  double gamma = 1.5;        // multitask loss weight
  double alpha_others = 1.8; // decode boost for others-function labels
  std::uint64_t seed = 0;

  void validate() const;
};

// One LSTM direction: gate order [input; forget; cell; output], each block
// hidden_size rows. Biases are column matrices so every tensor is a MatrixXd.
struct LstmDirection {
  Eigen::MatrixXd wx;  // 4H x in
  Eigen::MatrixXd wh;  // 4H x H
  Eigen::MatrixXd b;   // 4H x 1
};

struct NeuralParams {
  std::array<std::array<LstmDirection, 2>, 2> lstm;  // [layer][direction]
  Eigen::MatrixXd w_chord, b_chord;                  // 49 x 2H, 49 x 1
  Eigen::MatrixXd w_func, b_func;                    // 3 x 2H, 3 x 1 (multitask only)

  // Fixed tensor iteration order; shared by Adam, serialization, and the
  // gradient checks.
  void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
  void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;
  void set_zero_like(const NeuralParams& shape);
};

// Two stacked BiLSTM layers over 12-dim PCP frames with a chord head and,
// for the multitask variant, a function head sharing the recurrent trunk.
struct NeuralModel {
  NeuralConfig config;
  bool is_multitask = false;
  NeuralParams params;

  std::string to_json() const;
  static NeuralModel from_json(const std::string& text, const std::string& origin);
};

NeuralModel init_neural_model(const NeuralConfig& config, bool multitask);

constexpr int kMaxSequenceLength = 64;

struct ForwardResult {
  std::vector<Eigen::VectorXd> chord_logits;  // one 49-vector per slot
  std::vector<Eigen::VectorXd> func_logits;   // one 3-vector per slot (multitask)
};

// Deterministic in eval mode; train mode applies dropout after the second
// recurrent layer, drawing masks from `dropout_rng`.
ForwardResult neural_forward(const NeuralModel& model,
                             const std::vector<PitchClassProfile>& inputs, bool train_mode,
                             Rng* dropout_rng = nullptr);

struct SequenceExample {
  std::vector<PitchClassProfile> inputs;
  std::vector<int> chord_targets;  // encoded labels; function targets derive from these
};

SequenceExample example_from_sheet(const LeadSheet& sheet);

// Mean chord cross-entropy over the batch's slots, plus gamma times the mean
// function cross-entropy for multitask models. When `grads` is non-null the
// full backward pass runs and writes parameter gradients into it.
double neural_loss_and_grad(const NeuralModel& model,
                            const std::vector<const SequenceExample*>& batch, bool train_mode,
                            Rng* dropout_rng, NeuralParams* grads);

struct TrainStats {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
  std::vector<double> epoch_losses;
};

// Minibatch Adam with at most config.max_epochs epochs; returns the epoch
// checkpoint with the best validation chord accuracy. Throws on non-finite
// loss. Bitwise deterministic for a fixed config.seed.
NeuralModel train_neural(const std::vector<LeadSheet>& train_sheets,
                         const std::vector<LeadSheet>& validation_sheets,
                         const NeuralConfig& config, bool multitask,
                         TrainStats* stats = nullptr);

// Plain models take the per-slot chord argmax. Multitask models add the
// function-head log-likelihood with the alpha boost on others-function
// labels (N.C. never boosted). Ties resolve to the lower chord index.
ChordSequence neural_decode(const NeuralModel& model,
                            const std::vector<PitchClassProfile>& inputs);
ChordSequence neural_decode_sheet(const NeuralModel& model, const LeadSheet& sheet);

double chord_argmax_accuracy(const NeuralModel& model,
                             const std::vector<SequenceExample>& examples);

}  // namespace harmonizer

#endif
