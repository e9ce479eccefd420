#include "harmonizer/hmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace harmonizer {

using nlohmann::json;

namespace {
constexpr int kV = ChordLabel::kVocabularySize;
}

double DiagonalGaussianSet::logp(int label, const PitchClassProfile& pcp) const {
  const auto& mu = means[static_cast<std::size_t>(label)];
  const auto& var = variances[static_cast<std::size_t>(label)];
  double lp = 0.0;
  for (int k = 0; k < 12; ++k) {
    const double v = var[static_cast<std::size_t>(k)];
    const double d = pcp[k] - mu[static_cast<std::size_t>(k)];
    lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
  }
  return lp;
}

EmissionAccumulator::EmissionAccumulator()
    : sum_(kV), sum_sq_(kV), counts_(kV, 0) {}

void EmissionAccumulator::add(int label, const PitchClassProfile& pcp) {
  auto& s = sum_[static_cast<std::size_t>(label)];
  auto& q = sum_sq_[static_cast<std::size_t>(label)];
  for (int k = 0; k < 12; ++k) {
    s[static_cast<std::size_t>(k)] += pcp[k];
    q[static_cast<std::size_t>(k)] += pcp[k] * pcp[k];
  }
  counts_[static_cast<std::size_t>(label)]++;
}

DiagonalGaussianSet EmissionAccumulator::finalize() const {
  DiagonalGaussianSet g;
  g.means.assign(kV, {});
  g.variances.assign(kV, {});

  // Population variance per dimension, floored so constant features stay
  // proper densities.
  std::array<double, 12> var_sum{};
  int seen = 0;
  for (int y = 0; y < kV; ++y) {
    const long n = counts_[static_cast<std::size_t>(y)];
    if (n == 0) continue;
    ++seen;
    for (int k = 0; k < 12; ++k) {
      const double mean = sum_[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)] / static_cast<double>(n);
      double var = sum_sq_[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)] / static_cast<double>(n) - mean * mean;
      if (var < kVarianceFloor) var = kVarianceFloor;
      g.means[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)] = mean;
      g.variances[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)] = var;
      var_sum[static_cast<std::size_t>(k)] += var;
    }
  }
  if (seen == 0) throw std::invalid_argument("EmissionAccumulator: no observations");

  for (int y = 0; y < kV; ++y) {
    if (counts_[static_cast<std::size_t>(y)] > 0) continue;
    // Fallback for labels unseen in training: the normalized binary template
    // as mean (all zeros for N.C., matching silent segments) and the mean
    // observed variance.
    const PitchClassProfile tpl = chord_template_pcp(ChordLabel::decode(y));
    const double norm = tpl.l1_norm();
    for (int k = 0; k < 12; ++k) {
      g.means[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)] = norm > 0.0 ? tpl[k] / norm : 0.0;
      g.variances[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)] =
          var_sum[static_cast<std::size_t>(k)] / static_cast<double>(seen);
    }
  }
  return g;
}

std::vector<double> EmissionAccumulator::priors() const {
  std::vector<double> p(kV);
  double total = 0.0;
  for (int y = 0; y < kV; ++y) {
    const double c = counts_[static_cast<std::size_t>(y)] > 0
                         ? static_cast<double>(counts_[static_cast<std::size_t>(y)])
                         : 1.0;
    p[static_cast<std::size_t>(y)] = c;
    total += c;
  }
  for (double& v : p) v /= total;
  return p;
}

HmmModel fit_hmm(const std::vector<LeadSheet>& train, double beta) {
  if (train.empty()) throw std::invalid_argument("fit_hmm: empty training corpus");

  EmissionAccumulator acc;
  std::vector<std::array<long, kV>> bigrams(kV, std::array<long, kV>{});
  for (const LeadSheet& sheet : train) {
    for (int m = 0; m < sheet.num_slots(); ++m) {
      const int label = sheet.chords[static_cast<std::size_t>(m)].encode();
      acc.add(label, melody_pcp(sheet, m, Resolution::HalfBar));
      if (m > 0) {
        const int prev = sheet.chords[static_cast<std::size_t>(m - 1)].encode();
        bigrams[static_cast<std::size_t>(prev)][static_cast<std::size_t>(label)]++;
      }
    }
  }

  HmmModel model;
  model.beta = beta;
  model.emissions = acc.finalize();
  model.priors = acc.priors();
  model.transitions.assign(kV, {});
  for (int i = 0; i < kV; ++i) {
    long row_total = 0;
    for (long c : bigrams[static_cast<std::size_t>(i)]) row_total += c;
    for (int j = 0; j < kV; ++j) {
      const double raw = row_total > 0
                             ? static_cast<double>(bigrams[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) /
                                   static_cast<double>(row_total)
                             : 1.0 / kV;
      model.transitions[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (1.0 - beta) * model.priors[static_cast<std::size_t>(j)] + beta * raw;
    }
  }
  return model;
}

double emission_logp(const HmmModel& model, const ChordLabel& label,
                     const PitchClassProfile& pcp) {
  return model.emissions.logp(label.encode(), pcp);
}

std::vector<int> viterbi_path(int n_states, int steps,
                              const std::function<double(int)>& init_logp,
                              const std::function<double(int, int)>& trans_logp,
                              const std::function<double(int, int)>& emit_logp) {
  if (steps < 1) throw std::invalid_argument("viterbi_path: need at least one step");
  if (n_states < 1) throw std::invalid_argument("viterbi_path: need at least one state");

  std::vector<std::vector<double>> delta(static_cast<std::size_t>(steps),
                                         std::vector<double>(static_cast<std::size_t>(n_states)));
  std::vector<std::vector<int>> back(static_cast<std::size_t>(steps),
                                     std::vector<int>(static_cast<std::size_t>(n_states), 0));

  for (int y = 0; y < n_states; ++y)
    delta[0][static_cast<std::size_t>(y)] = init_logp(y) + emit_logp(0, y);

  for (int m = 1; m < steps; ++m) {
    for (int y = 0; y < n_states; ++y) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int prev = 0; prev < n_states; ++prev) {
        const double s =
            delta[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(prev)] + trans_logp(prev, y);
        if (s > best) { best = s; arg = prev; }
      }
      delta[static_cast<std::size_t>(m)][static_cast<std::size_t>(y)] = best + emit_logp(m, y);
      back[static_cast<std::size_t>(m)][static_cast<std::size_t>(y)] = arg;
    }
  }

  int last = 0;
  for (int y = 1; y < n_states; ++y)
    if (delta[static_cast<std::size_t>(steps - 1)][static_cast<std::size_t>(y)] >
        delta[static_cast<std::size_t>(steps - 1)][static_cast<std::size_t>(last)])
      last = y;

  std::vector<int> path(static_cast<std::size_t>(steps));
  for (int m = steps - 1; m >= 0; --m) {
    path[static_cast<std::size_t>(m)] = last;
    if (m > 0) last = back[static_cast<std::size_t>(m)][static_cast<std::size_t>(last)];
  }
  return path;
}

ChordSequence viterbi_decode(const HmmModel& model,
                             const std::vector<PitchClassProfile>& melody) {
  const int steps = static_cast<int>(melody.size());
  if (steps == 0) throw std::invalid_argument("viterbi_decode: empty sequence");

  const std::vector<int> path = viterbi_path(
      kV, steps,
      [&](int y) { return std::log(model.priors[static_cast<std::size_t>(y)]); },
      [&](int prev, int y) {
        return std::log(
            model.transitions[static_cast<std::size_t>(prev)][static_cast<std::size_t>(y)]);
      },
      [&](int m, int y) { return model.emissions.logp(y, melody[static_cast<std::size_t>(m)]); });

  ChordSequence out(static_cast<std::size_t>(steps));
  for (int m = 0; m < steps; ++m)
    out[static_cast<std::size_t>(m)] = ChordLabel::decode(path[static_cast<std::size_t>(m)]);
  return out;
}

ChordSequence hmm_harmonize(const HmmModel& model, const LeadSheet& sheet) {
  std::vector<PitchClassProfile> xs;
  xs.reserve(static_cast<std::size_t>(sheet.num_slots()));
  for (int m = 0; m < sheet.num_slots(); ++m)
    xs.push_back(melody_pcp(sheet, m, Resolution::HalfBar));
  return viterbi_decode(model, xs);
}

namespace {

json matrix_to_json(const std::vector<std::array<double, 12>>& m) {
  json rows = json::array();
  for (const auto& row : m) rows.push_back(std::vector<double>(row.begin(), row.end()));
  return rows;
}

std::vector<std::array<double, 12>> matrix12_from_json(const json& j) {
  std::vector<std::array<double, 12>> out;
  for (const auto& row : j) {
    std::array<double, 12> r{};
    for (int k = 0; k < 12; ++k) r[static_cast<std::size_t>(k)] = row.at(static_cast<std::size_t>(k)).get<double>();
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::string HmmModel::to_json() const {
  json j;
  j["type"] = "hmm";
  j["beta"] = beta;
  j["means"] = matrix_to_json(emissions.means);
  j["variances"] = matrix_to_json(emissions.variances);
  json rows = json::array();
  for (const auto& row : transitions) rows.push_back(std::vector<double>(row.begin(), row.end()));
  j["transitions"] = rows;
  j["priors"] = priors;
  return j.dump() + "\n";
}

HmmModel HmmModel::from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  if (!j.contains("type") || j.at("type") != "hmm")
    throw std::runtime_error(origin + ": not an hmm checkpoint");
  HmmModel m;
  m.beta = j.at("beta").get<double>();
  m.emissions.means = matrix12_from_json(j.at("means"));
  m.emissions.variances = matrix12_from_json(j.at("variances"));
  for (const auto& row : j.at("transitions")) {
    std::array<double, 49> r{};
    for (int k = 0; k < kV; ++k) r[static_cast<std::size_t>(k)] = row.at(static_cast<std::size_t>(k)).get<double>();
    m.transitions.push_back(r);
  }
  m.priors = j.at("priors").get<std::vector<double>>();
  if (static_cast<int>(m.emissions.means.size()) != kV ||
      static_cast<int>(m.transitions.size()) != kV || static_cast<int>(m.priors.size()) != kV)
    throw std::runtime_error(origin + ": wrong table sizes");
  return m;
}

}  // namespace harmonizer
