#ifndef HARMONIZER_HMM_HPP
#define HARMONIZER_HMM_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "harmonizer/leadsheet.hpp"

namespace harmonizer {

// Per-label diagonal Gaussians over 12-dim PCPs. Shared between the HMM's
// half-bar emissions and the GA's 16th-note frame posterior.
struct DiagonalGaussianSet {
  std::vector<std::array<double, 12>> means;      // one row per label
  std::vector<std::array<double, 12>> variances;  // floored, always > 0

  double logp(int label, const PitchClassProfile& pcp) const;
};

constexpr double kVarianceFloor = 1e-4;

// Accumulates labeled PCPs; labels never observed fall back to a normalized
// template mean (zero vector for N.C.) with the corpus-mean variance.
class EmissionAccumulator {
 public:
  EmissionAccumulator();
  void add(int label, const PitchClassProfile& pcp);
  DiagonalGaussianSet finalize() const;
  // Unigram label distribution with one pseudo-count for unseen labels.
  std::vector<double> priors() const;
  long count(int label) const { return counts_[static_cast<std::size_t>(label)]; }

 private:
  std::vector<std::array<double, 12>> sum_;
  std::vector<std::array<double, 12>> sum_sq_;
  std::vector<long> counts_;
};

struct HmmModel {
  DiagonalGaussianSet emissions;
  std::vector<std::array<double, 49>> transitions;  // smoothed rows, each summing to 1
  std::vector<double> priors;
  double beta = 0.08;

  std::string to_json() const;
  static HmmModel from_json(const std::string& text, const std::string& origin);
};

// Trains emission Gaussians from half-bar PCPs, bigram transition rows
// (uniform where a label never precedes anything), and interpolates
// transitions with the prior: P'(y_m|y_{m-1}) = (1-beta) P(y_m) + beta P(y_m|y_{m-1}).
HmmModel fit_hmm(const std::vector<LeadSheet>& train, double beta = 0.08);

double emission_logp(const HmmModel& model, const ChordLabel& label,
                     const PitchClassProfile& pcp);

// Generic max-score path: init(state) + emit(0,state) at the first step,
// then trans(prev,state) + emit(m,state). Ties resolve toward the lower
// state index at every stage.
std::vector<int> viterbi_path(int n_states, int steps,
                              const std::function<double(int)>& init_logp,
                              const std::function<double(int, int)>& trans_logp,
                              const std::function<double(int, int)>& emit_logp);

// Max-posterior chord sequence in the log domain; ties resolve toward the
// lower chord index, making decoding fully deterministic.
ChordSequence viterbi_decode(const HmmModel& model, const std::vector<PitchClassProfile>& melody);

ChordSequence hmm_harmonize(const HmmModel& model, const LeadSheet& sheet);

}  // namespace harmonizer

#endif
