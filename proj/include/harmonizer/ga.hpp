#ifndef HARMONIZER_GA_HPP
#define HARMONIZER_GA_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harmonizer/hmm.hpp"
#include "harmonizer/leadsheet.hpp"
#include "harmonizer/rng.hpp"

namespace harmonizer {

// Entropy histogram bins of width 0.25 covering [0, ln 49].
constexpr double kEntropyBinWidth = 0.25;
constexpr int kEntropyBins = 16;

// Probability tables backing the four fitness terms. Raw integer counts are
// kept (and serialized) so smoothed probabilities are reproduced exactly on
// reload; smoothing is add-1 with backoff to lower orders on empty contexts.
struct GaTables {
  DiagonalGaussianSet frame;        // 16th-note Gaussians, rest frames excluded
  std::vector<double> frame_priors; // label priors for the Bayes inversion

  std::vector<long> unigram;                       // 49
  std::vector<long> bigram;                        // 49*49, [prev*49 + y]
  std::vector<long> trigram;                       // 49^3, [(a*49 + b)*49 + y]
  std::array<std::array<long, 49>, 8> position{};  // [mod(m,8)][y], m 1-based
  std::array<long, kEntropyBins> entropy_bins{};

  // log P(y | x) via Bayes on the frame Gaussians.
  double log_frame_posterior(int label, const PitchClassProfile& x) const;
  double log_trigram(int prev2, int prev1, int label) const;
  double log_position(int label, int m_one_based) const;
  double log_entropy_prob(double entropy) const;

  std::string to_json() const;
  static GaTables from_json(const std::string& text, const std::string& origin);
};

struct GaConfig {
  int population = 100;
  int generations = 500;
  int tournament_k = 3;
  double crossover_rate = 0.9;
  std::optional<double> mutation_rate;  // per gene; defaults to 1/M
  int elitism = 1;
  std::array<double, 4> weights = {1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;

  void validate() const;
};

// Natural-log entropy of the label distribution within one sequence.
double sequence_entropy(const ChordSequence& y);

// Eq-by-eq fitness: frame posterior (rest frames skipped), trigram
// transitions from m=3, positional prior with mod(m,8), and the entropy
// bin likelihood; terms are summed left to right and weighted.
double ga_fitness(const ChordSequence& y, const std::vector<PitchClassProfile>& x16,
                  const GaTables& tables, const std::array<double, 4>& weights);

// Tournament selection, one-point crossover, per-gene mutation over the
// given alphabet, elitism. Returns the best individual ever evaluated.
// `generation_best` (optional) records the best-ever fitness after each
// generation, including the initial population at index 0.
ChordSequence ga_evolve(const std::vector<PitchClassProfile>& x16, const GaTables& tables,
                        const GaConfig& config,
                        const std::vector<ChordLabel>& alphabet = {},
                        std::vector<double>* generation_best = nullptr);

GaTables fit_ga_tables(const std::vector<LeadSheet>& train);

ChordSequence ga_harmonize(const GaTables& tables, const GaConfig& config,
                           const LeadSheet& sheet);

}  // namespace harmonizer

#endif
