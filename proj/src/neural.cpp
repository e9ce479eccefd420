#include "harmonizer/neural.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace harmonizer {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr int kChordVocab = ChordLabel::kVocabularySize;
constexpr int kFunctions = 3;

VectorXd sigmoid(const VectorXd& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

VectorXd pcp_to_vector(const PitchClassProfile& p) {
  VectorXd v(12);
  for (int k = 0; k < 12; ++k) v(k) = p[k];
  return v;
}

VectorXd log_softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

int argmax_lowest(const VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

// Per-direction forward cache, indexed by iteration step; the backward
// direction iterates reversed time.
struct DirCache {
  std::vector<VectorXd> x, gi, gf, gg, go, c, tc, h;
};

void lstm_forward(const LstmDirection& p, const std::vector<VectorXd>& inputs, bool reversed,
                  DirCache& cache) {
  const int steps = static_cast<int>(inputs.size());
  const int hidden = static_cast<int>(p.wh.cols());
  cache.x.resize(static_cast<std::size_t>(steps));
  cache.gi.resize(static_cast<std::size_t>(steps));
  cache.gf.resize(static_cast<std::size_t>(steps));
  cache.gg.resize(static_cast<std::size_t>(steps));
  cache.go.resize(static_cast<std::size_t>(steps));
  cache.c.resize(static_cast<std::size_t>(steps));
  cache.tc.resize(static_cast<std::size_t>(steps));
  cache.h.resize(static_cast<std::size_t>(steps));

  VectorXd h_prev = VectorXd::Zero(hidden);
  VectorXd c_prev = VectorXd::Zero(hidden);
  for (int s = 0; s < steps; ++s) {
    const int t = reversed ? steps - 1 - s : s;
    const VectorXd& x = inputs[static_cast<std::size_t>(t)];
    const VectorXd pre = p.wx * x + p.wh * h_prev + p.b.col(0);
    const VectorXd i = sigmoid(pre.segment(0, hidden));
    const VectorXd f = sigmoid(pre.segment(hidden, hidden));
    const VectorXd g = pre.segment(2 * hidden, hidden).array().tanh().matrix();
    const VectorXd o = sigmoid(pre.segment(3 * hidden, hidden));
    const VectorXd c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    const VectorXd tc = c.array().tanh().matrix();
    const VectorXd h = o.cwiseProduct(tc);

    auto idx = static_cast<std::size_t>(s);
    cache.x[idx] = x;
    cache.gi[idx] = i;
    cache.gf[idx] = f;
    cache.gg[idx] = g;
    cache.go[idx] = o;
    cache.c[idx] = c;
    cache.tc[idx] = tc;
    cache.h[idx] = h;
    h_prev = h;
    c_prev = c;
  }
}

// dh_by_time holds the upstream gradient per real time step; dx_by_time, when
// non-null, receives gradients for the layer inputs.
void lstm_backward(const LstmDirection& p, const DirCache& cache, bool reversed,
                   const std::vector<VectorXd>& dh_by_time, LstmDirection& grads,
                   std::vector<VectorXd>* dx_by_time) {
  const int steps = static_cast<int>(cache.h.size());
  const int hidden = static_cast<int>(p.wh.cols());

  VectorXd dh_rec = VectorXd::Zero(hidden);
  VectorXd dc_rec = VectorXd::Zero(hidden);
  for (int s = steps - 1; s >= 0; --s) {
    const int t = reversed ? steps - 1 - s : s;
    const auto idx = static_cast<std::size_t>(s);

    const VectorXd dh = dh_by_time[static_cast<std::size_t>(t)] + dh_rec;
    const VectorXd& i = cache.gi[idx];
    const VectorXd& f = cache.gf[idx];
    const VectorXd& g = cache.gg[idx];
    const VectorXd& o = cache.go[idx];
    const VectorXd& tc = cache.tc[idx];
    const VectorXd c_prev = s > 0 ? cache.c[idx - 1] : VectorXd::Zero(hidden);
    const VectorXd h_prev = s > 0 ? cache.h[idx - 1] : VectorXd::Zero(hidden);

    const VectorXd d_o = dh.cwiseProduct(tc);
    const VectorXd dc = dc_rec + dh.cwiseProduct(o).cwiseProduct(
                                     (1.0 - tc.array().square()).matrix());
    const VectorXd d_i = dc.cwiseProduct(g);
    const VectorXd d_g = dc.cwiseProduct(i);
    const VectorXd d_f = dc.cwiseProduct(c_prev);
    dc_rec = dc.cwiseProduct(f);

    VectorXd dpre(4 * hidden);
    dpre.segment(0, hidden) = d_i.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
    dpre.segment(hidden, hidden) = d_f.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
    dpre.segment(2 * hidden, hidden) = d_g.cwiseProduct((1.0 - g.array().square()).matrix());
    dpre.segment(3 * hidden, hidden) = d_o.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

    grads.wx += dpre * cache.x[idx].transpose();
    grads.wh += dpre * h_prev.transpose();
    grads.b.col(0) += dpre;
    if (dx_by_time)
      (*dx_by_time)[static_cast<std::size_t>(t)] += p.wx.transpose() * dpre;
    dh_rec = p.wh.transpose() * dpre;
  }
}

struct ModelCache {
  std::array<std::array<DirCache, 2>, 2> dir;           // [layer][direction]
  std::vector<VectorXd> layer1_in;                      // concat of layer-0 outputs
  std::vector<VectorXd> trunk_out;                      // concat of layer-1 outputs
  std::vector<VectorXd> dropout_mask;                   // empty in eval mode
  std::vector<VectorXd> head_in;                        // trunk_out after dropout
};

void model_forward(const NeuralModel& model, const std::vector<PitchClassProfile>& inputs,
                   bool train_mode, Rng* dropout_rng, ModelCache& cache, ForwardResult& out) {
  const int steps = static_cast<int>(inputs.size());
  if (steps == 0) throw std::invalid_argument("neural_forward: empty sequence");
  if (steps > kMaxSequenceLength)
    throw std::invalid_argument("neural_forward: sequence longer than " +
                                std::to_string(kMaxSequenceLength) + " slots");
  const int hidden = model.config.hidden_size;

  std::vector<VectorXd> x0(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) x0[static_cast<std::size_t>(t)] = pcp_to_vector(inputs[static_cast<std::size_t>(t)]);

  lstm_forward(model.params.lstm[0][0], x0, false, cache.dir[0][0]);
  lstm_forward(model.params.lstm[0][1], x0, true, cache.dir[0][1]);

  cache.layer1_in.assign(static_cast<std::size_t>(steps), VectorXd(2 * hidden));
  for (int t = 0; t < steps; ++t) {
    auto& v = cache.layer1_in[static_cast<std::size_t>(t)];
    v.segment(0, hidden) = cache.dir[0][0].h[static_cast<std::size_t>(t)];
    v.segment(hidden, hidden) = cache.dir[0][1].h[static_cast<std::size_t>(steps - 1 - t)];
  }

  lstm_forward(model.params.lstm[1][0], cache.layer1_in, false, cache.dir[1][0]);
  lstm_forward(model.params.lstm[1][1], cache.layer1_in, true, cache.dir[1][1]);

  cache.trunk_out.assign(static_cast<std::size_t>(steps), VectorXd(2 * hidden));
  for (int t = 0; t < steps; ++t) {
    auto& v = cache.trunk_out[static_cast<std::size_t>(t)];
    v.segment(0, hidden) = cache.dir[1][0].h[static_cast<std::size_t>(t)];
    v.segment(hidden, hidden) = cache.dir[1][1].h[static_cast<std::size_t>(steps - 1 - t)];
  }

  // Inverted dropout after the second recurrent layer only.
  cache.head_in = cache.trunk_out;
  cache.dropout_mask.clear();
  if (train_mode && model.config.dropout > 0.0) {
    if (!dropout_rng) throw std::invalid_argument("neural_forward: train mode needs an RNG");
    const double keep = 1.0 - model.config.dropout;
    cache.dropout_mask.assign(static_cast<std::size_t>(steps), VectorXd(2 * hidden));
    for (int t = 0; t < steps; ++t) {
      auto& mask = cache.dropout_mask[static_cast<std::size_t>(t)];
      for (int u = 0; u < 2 * hidden; ++u)
        mask(u) = dropout_rng->uniform01() < keep ? 1.0 / keep : 0.0;
      cache.head_in[static_cast<std::size_t>(t)] =
          cache.head_in[static_cast<std::size_t>(t)].cwiseProduct(mask);
    }
  }

  out.chord_logits.resize(static_cast<std::size_t>(steps));
  if (model.is_multitask) out.func_logits.resize(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const VectorXd& y = cache.head_in[static_cast<std::size_t>(t)];
    out.chord_logits[static_cast<std::size_t>(t)] = model.params.w_chord * y + model.params.b_chord.col(0);
    if (model.is_multitask)
      out.func_logits[static_cast<std::size_t>(t)] = model.params.w_func * y + model.params.b_func.col(0);
  }
}

int function_target(int chord_code) {
  return static_cast<int>(chord_function(ChordLabel::decode(chord_code)));
}

}  // namespace

void NeuralConfig::validate() const {
  if (hidden_size < 1) throw std::invalid_argument("NeuralConfig: hidden_size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("NeuralConfig: dropout outside [0,1)");
  if (gamma < 0.0) throw std::invalid_argument("NeuralConfig: gamma must be >= 0");
  if (batch_size < 1 || max_epochs < 1)
    throw std::invalid_argument("NeuralConfig: batch_size and max_epochs must be >= 1");
}

void NeuralParams::for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  static const char* kLayer[2] = {"l0", "l1"};
  static const char* kDir[2] = {"fw", "bw"};
  for (int layer = 0; layer < 2; ++layer)
    for (int d = 0; d < 2; ++d) {
      const std::string prefix = std::string(kLayer[layer]) + "." + kDir[d] + ".";
      fn(prefix + "wx", lstm[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)].wx);
      fn(prefix + "wh", lstm[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)].wh);
      fn(prefix + "b", lstm[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)].b);
    }
  fn("head.chord.w", w_chord);
  fn("head.chord.b", b_chord);
  fn("head.func.w", w_func);
  fn("head.func.b", b_func);
}

void NeuralParams::for_each(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  const_cast<NeuralParams*>(this)->for_each(
      [&](const std::string& name, Eigen::MatrixXd& m) { fn(name, m); });
}

void NeuralParams::set_zero_like(const NeuralParams& shape) {
  auto zero = [](const MatrixXd& src) { return MatrixXd::Zero(src.rows(), src.cols()); };
  for (int layer = 0; layer < 2; ++layer)
    for (int d = 0; d < 2; ++d) {
      auto& dst = lstm[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)];
      const auto& src = shape.lstm[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)];
      dst.wx = zero(src.wx);
      dst.wh = zero(src.wh);
      dst.b = zero(src.b);
    }
  w_chord = zero(shape.w_chord);
  b_chord = zero(shape.b_chord);
  w_func = zero(shape.w_func);
  b_func = zero(shape.b_func);
}

NeuralModel init_neural_model(const NeuralConfig& config, bool multitask) {
  config.validate();
  const int hidden = config.hidden_size;
  NeuralModel model;
  model.config = config;
  model.is_multitask = multitask;

  Rng rng(config.seed);
  auto uniform = [&](MatrixXd& m, int rows, int cols, double bound) {
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
  };

  const double rec_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int layer = 0; layer < 2; ++layer) {
    const int in = layer == 0 ? 12 : 2 * hidden;
    for (int d = 0; d < 2; ++d) {
      auto& dir = model.params.lstm[static_cast<std::size_t>(layer)][static_cast<std::size_t>(d)];
      uniform(dir.wx, 4 * hidden, in, rec_bound);
      uniform(dir.wh, 4 * hidden, hidden, rec_bound);
      dir.b = MatrixXd::Zero(4 * hidden, 1);
      dir.b.col(0).segment(hidden, hidden).setOnes();  // forget-gate bias 1.0
    }
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(2 * hidden));
  uniform(model.params.w_chord, kChordVocab, 2 * hidden, head_bound);
  model.params.b_chord = MatrixXd::Zero(kChordVocab, 1);
  if (multitask) {
    uniform(model.params.w_func, kFunctions, 2 * hidden, head_bound);
    model.params.b_func = MatrixXd::Zero(kFunctions, 1);
  } else {
    model.params.w_func.resize(0, 0);
    model.params.b_func.resize(0, 0);
  }
  return model;
}

ForwardResult neural_forward(const NeuralModel& model,
                             const std::vector<PitchClassProfile>& inputs, bool train_mode,
                             Rng* dropout_rng) {
  ModelCache cache;
  ForwardResult out;
  model_forward(model, inputs, train_mode, dropout_rng, cache, out);
  return out;
}

SequenceExample example_from_sheet(const LeadSheet& sheet) {
  SequenceExample ex;
  for (int m = 0; m < sheet.num_slots(); ++m) {
    ex.inputs.push_back(melody_pcp(sheet, m, Resolution::HalfBar));
    ex.chord_targets.push_back(sheet.chords[static_cast<std::size_t>(m)].encode());
  }
  return ex;
}

double neural_loss_and_grad(const NeuralModel& model,
                            const std::vector<const SequenceExample*>& batch, bool train_mode,
                            Rng* dropout_rng, NeuralParams* grads) {
  if (batch.empty()) throw std::invalid_argument("neural_loss_and_grad: empty batch");
  const int hidden = model.config.hidden_size;

  long total_slots = 0;
  for (const SequenceExample* ex : batch) total_slots += static_cast<long>(ex->inputs.size());
  if (total_slots == 0) throw std::invalid_argument("neural_loss_and_grad: no slots");

  if (grads) grads->set_zero_like(model.params);

  double chord_loss = 0.0;
  double func_loss = 0.0;
  for (const SequenceExample* ex : batch) {
    const int steps = static_cast<int>(ex->inputs.size());
    ModelCache cache;
    ForwardResult fw;
    model_forward(model, ex->inputs, train_mode, dropout_rng, cache, fw);

    std::vector<VectorXd> d_head(static_cast<std::size_t>(steps),
                                 VectorXd::Zero(2 * hidden));
    for (int t = 0; t < steps; ++t) {
      const int target = ex->chord_targets[static_cast<std::size_t>(t)];
      const VectorXd logp = log_softmax(fw.chord_logits[static_cast<std::size_t>(t)]);
      chord_loss -= logp(target);
      if (grads) {
        VectorXd dlogits = logp.array().exp().matrix() / static_cast<double>(total_slots);
        dlogits(target) -= 1.0 / static_cast<double>(total_slots);
        d_head[static_cast<std::size_t>(t)] += model.params.w_chord.transpose() * dlogits;
        grads->w_chord += dlogits * cache.head_in[static_cast<std::size_t>(t)].transpose();
        grads->b_chord.col(0) += dlogits;
      }
      if (model.is_multitask) {
        const int ftarget = function_target(target);
        const VectorXd flogp = log_softmax(fw.func_logits[static_cast<std::size_t>(t)]);
        func_loss -= flogp(ftarget);
        if (grads) {
          const double scale = model.config.gamma / static_cast<double>(total_slots);
          VectorXd dlogits = flogp.array().exp().matrix() * scale;
          dlogits(ftarget) -= scale;
          d_head[static_cast<std::size_t>(t)] += model.params.w_func.transpose() * dlogits;
          grads->w_func += dlogits * cache.head_in[static_cast<std::size_t>(t)].transpose();
          grads->b_func.col(0) += dlogits;
        }
      }
    }

    if (!grads) continue;

    // Undo dropout, split the trunk gradient per direction, and run BPTT
    // down the stack.
    std::vector<VectorXd> d_trunk = d_head;
    if (!cache.dropout_mask.empty())
      for (int t = 0; t < steps; ++t)
        d_trunk[static_cast<std::size_t>(t)] =
            d_trunk[static_cast<std::size_t>(t)].cwiseProduct(cache.dropout_mask[static_cast<std::size_t>(t)]);

    std::vector<VectorXd> dh1_fw(static_cast<std::size_t>(steps));
    std::vector<VectorXd> dh1_bw(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
      dh1_fw[static_cast<std::size_t>(t)] = d_trunk[static_cast<std::size_t>(t)].segment(0, hidden);
      dh1_bw[static_cast<std::size_t>(steps - 1 - t)] =
          d_trunk[static_cast<std::size_t>(t)].segment(hidden, hidden);
    }
    // dh1_bw is indexed by the backward direction's own time axis; map it to
    // real time for lstm_backward's dh_by_time contract.
    std::vector<VectorXd> dh1_bw_by_time(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t)
      dh1_bw_by_time[static_cast<std::size_t>(t)] =
          dh1_bw[static_cast<std::size_t>(steps - 1 - t)];

    std::vector<VectorXd> d_layer1_in(static_cast<std::size_t>(steps),
                                      VectorXd::Zero(2 * hidden));
    lstm_backward(model.params.lstm[1][0], cache.dir[1][0], false, dh1_fw,
                  grads->lstm[1][0], &d_layer1_in);
    lstm_backward(model.params.lstm[1][1], cache.dir[1][1], true, dh1_bw_by_time,
                  grads->lstm[1][1], &d_layer1_in);

    std::vector<VectorXd> dh0_fw(static_cast<std::size_t>(steps));
    std::vector<VectorXd> dh0_bw_by_time(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
      dh0_fw[static_cast<std::size_t>(t)] = d_layer1_in[static_cast<std::size_t>(t)].segment(0, hidden);
      dh0_bw_by_time[static_cast<std::size_t>(t)] =
          d_layer1_in[static_cast<std::size_t>(t)].segment(hidden, hidden);
    }
    lstm_backward(model.params.lstm[0][0], cache.dir[0][0], false, dh0_fw,
                  grads->lstm[0][0], nullptr);
    lstm_backward(model.params.lstm[0][1], cache.dir[0][1], true, dh0_bw_by_time,
                  grads->lstm[0][1], nullptr);
  }

  const double n = static_cast<double>(total_slots);
  return chord_loss / n + (model.is_multitask ? model.config.gamma * func_loss / n : 0.0);
}

double chord_argmax_accuracy(const NeuralModel& model,
                             const std::vector<SequenceExample>& examples) {
  long hits = 0, total = 0;
  for (const SequenceExample& ex : examples) {
    const ForwardResult fw = neural_forward(model, ex.inputs, false);
    for (std::size_t t = 0; t < ex.inputs.size(); ++t) {
      if (argmax_lowest(fw.chord_logits[t]) == ex.chord_targets[t]) ++hits;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

NeuralModel train_neural(const std::vector<LeadSheet>& train_sheets,
                         const std::vector<LeadSheet>& validation_sheets,
                         const NeuralConfig& config, bool multitask, TrainStats* stats) {
  config.validate();
  if (train_sheets.empty() || validation_sheets.empty())
    throw std::invalid_argument("train_neural: empty train or validation split");

  std::vector<SequenceExample> train_ex, val_ex;
  for (const LeadSheet& s : train_sheets) train_ex.push_back(example_from_sheet(s));
  for (const LeadSheet& s : validation_sheets) val_ex.push_back(example_from_sheet(s));

  NeuralModel model = init_neural_model(config, multitask);
  NeuralParams grads, adam_m, adam_v;
  grads.set_zero_like(model.params);
  adam_m.set_zero_like(model.params);
  adam_v.set_zero_like(model.params);

  std::vector<MatrixXd*> theta, g, m1, m2;
  model.params.for_each([&](const std::string&, MatrixXd& t) { theta.push_back(&t); });
  grads.for_each([&](const std::string&, MatrixXd& t) { g.push_back(&t); });
  adam_m.for_each([&](const std::string&, MatrixXd& t) { m1.push_back(&t); });
  adam_v.for_each([&](const std::string&, MatrixXd& t) { m2.push_back(&t); });

  Rng order_rng(config.seed ^ 0xa5a5a5a5a5a5a5a5ull);
  Rng dropout_rng(config.seed ^ 0x5a5a5a5a5a5a5a5aull);

  NeuralModel best = model;
  double best_acc = -1.0;
  int best_epoch = 0;
  long adam_t = 0;

  TrainStats local;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<std::size_t> order(train_ex.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      std::vector<const SequenceExample*> batch;
      for (std::size_t i = start;
           i < order.size() && i < start + static_cast<std::size_t>(config.batch_size); ++i)
        batch.push_back(&train_ex[order[i]]);

      const double loss = neural_loss_and_grad(model, batch, true, &dropout_rng, &grads);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_neural: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
      epoch_loss += loss;
      ++batches;

      ++adam_t;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_t));
      const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_t));
      for (std::size_t p = 0; p < theta.size(); ++p) {
        if (theta[p]->size() == 0) continue;
        *m1[p] = config.adam_beta1 * *m1[p] + (1.0 - config.adam_beta1) * *g[p];
        *m2[p] = (config.adam_beta2 * m2[p]->array() +
                  (1.0 - config.adam_beta2) * g[p]->array().square())
                     .matrix();
        const auto m_hat = m1[p]->array() / bc1;
        const auto v_hat = m2[p]->array() / bc2;
        theta[p]->array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_eps);
      }
    }
    local.epoch_losses.push_back(batches > 0 ? epoch_loss / batches : 0.0);
    local.epochs_run = epoch;

    const double acc = chord_argmax_accuracy(model, val_ex);
    if (acc > best_acc) {
      best_acc = acc;
      best = model;
      best_epoch = epoch;
    }
  }

  local.best_epoch = best_epoch;
  local.best_validation_accuracy = best_acc;
  if (stats) *stats = local;
  return best;
}

ChordSequence neural_decode(const NeuralModel& model,
                            const std::vector<PitchClassProfile>& inputs) {
  const ForwardResult fw = neural_forward(model, inputs, false);
  ChordSequence out;
  out.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!model.is_multitask) {
      out.push_back(ChordLabel::decode(argmax_lowest(fw.chord_logits[t])));
      continue;
    }
    const VectorXd chord_logp = log_softmax(fw.chord_logits[t]);
    const VectorXd func_logp = log_softmax(fw.func_logits[t]);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < kChordVocab; ++c) {
      const ChordFunction fn = chord_function(ChordLabel::decode(c));
      // The diversity boost targets real others-function chords; boosting
      // N.C. would just reward silence.
      const double alpha =
          (fn == ChordFunction::Others && c != 0) ? model.config.alpha_others : 1.0;
      const double score = chord_logp(c) + std::log(alpha) + func_logp(static_cast<int>(fn));
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    out.push_back(ChordLabel::decode(best));
  }
  return out;
}

ChordSequence neural_decode_sheet(const NeuralModel& model, const LeadSheet& sheet) {
  std::vector<PitchClassProfile> inputs;
  inputs.reserve(static_cast<std::size_t>(sheet.num_slots()));
  for (int m = 0; m < sheet.num_slots(); ++m)
    inputs.push_back(melody_pcp(sheet, m, Resolution::HalfBar));
  return neural_decode(model, inputs);
}

// --- Serialization ----------------------------------------------------------

std::string NeuralModel::to_json() const {
  json j;
  j["type"] = is_multitask ? "mtharmonizer" : "bilstm";
  json cfg;
  cfg["hidden_size"] = config.hidden_size;
  cfg["dropout"] = config.dropout;
  cfg["learning_rate"] = config.learning_rate;
  cfg["adam_beta1"] = config.adam_beta1;
  cfg["adam_beta2"] = config.adam_beta2;
  cfg["adam_eps"] = config.adam_eps;
  cfg["batch_size"] = config.batch_size;
  cfg["max_epochs"] = config.max_epochs;
  cfg["gamma"] = config.gamma;
  cfg["alpha_others"] = config.alpha_others;
  cfg["seed"] = config.seed;
  j["config"] = cfg;

  json tensors;
  params.for_each([&](const std::string& name, const MatrixXd& m) {
    json t;
    t["rows"] = m.rows();
    t["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    t["data"] = data;
    tensors[name] = std::move(t);
  });
  j["tensors"] = tensors;
  return j.dump() + "\n";
}

NeuralModel NeuralModel::from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  const std::string type = j.value("type", "");
  if (type != "bilstm" && type != "mtharmonizer")
    throw std::runtime_error(origin + ": not a neural checkpoint");

  NeuralConfig cfg;
  const json& cj = j.at("config");
  cfg.hidden_size = cj.at("hidden_size").get<int>();
  cfg.dropout = cj.at("dropout").get<double>();
  cfg.learning_rate = cj.at("learning_rate").get<double>();
  cfg.adam_beta1 = cj.at("adam_beta1").get<double>();
  cfg.adam_beta2 = cj.at("adam_beta2").get<double>();
  cfg.adam_eps = cj.at("adam_eps").get<double>();
  cfg.batch_size = cj.at("batch_size").get<int>();
  cfg.max_epochs = cj.at("max_epochs").get<int>();
  cfg.gamma = cj.at("gamma").get<double>();
  cfg.alpha_others = cj.at("alpha_others").get<double>();
  cfg.seed = cj.at("seed").get<std::uint64_t>();

  NeuralModel model = init_neural_model(cfg, type == "mtharmonizer");
  const json& tensors = j.at("tensors");
  model.params.for_each([&](const std::string& name, MatrixXd& m) {
    if (!tensors.contains(name)) {
      if (m.size() == 0) return;
      throw std::runtime_error(origin + ": missing tensor " + name);
    }
    const json& t = tensors.at(name);
    const long rows = t.at("rows").get<long>();
    const long cols = t.at("cols").get<long>();
    if (rows != m.rows() || cols != m.cols())
      throw std::runtime_error(origin + ": tensor " + name + " has wrong shape");
    const auto& data = t.at("data");
    std::size_t idx = 0;
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) m(r, c) = data.at(idx++).get<double>();
  });
  return model;
}

}  // namespace harmonizer
