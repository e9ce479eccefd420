#include "harmonizer/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace harmonizer {

using nlohmann::json;

namespace {
constexpr int kV = ChordLabel::kVocabularySize;
}

double sequence_entropy(const ChordSequence& y) {
  if (y.empty()) throw std::invalid_argument("sequence_entropy: empty sequence");
  std::array<int, kV> counts{};
  for (const ChordLabel& c : y) counts[static_cast<std::size_t>(c.encode())]++;
  double h = 0.0;
  const double n = static_cast<double>(y.size());
  for (int c : counts) {
    if (c == 0) continue;
    const double p = c / n;
    h -= p * std::log(p);
  }
  return h;
}

double GaTables::log_frame_posterior(int label, const PitchClassProfile& x) const {
  // log P(y|x) = log N(x; mu_y, var_y) + log P(y) - logsumexp_z(...)
  std::array<double, kV> joint;
  double best = -std::numeric_limits<double>::infinity();
  for (int z = 0; z < kV; ++z) {
    joint[static_cast<std::size_t>(z)] =
        frame.logp(z, x) + std::log(frame_priors[static_cast<std::size_t>(z)]);
    best = std::max(best, joint[static_cast<std::size_t>(z)]);
  }
  double sum = 0.0;
  for (int z = 0; z < kV; ++z) sum += std::exp(joint[static_cast<std::size_t>(z)] - best);
  return joint[static_cast<std::size_t>(label)] - (best + std::log(sum));
}

double GaTables::log_trigram(int prev2, int prev1, int label) const {
  const std::size_t ctx = static_cast<std::size_t>(prev2) * kV + static_cast<std::size_t>(prev1);
  long ctx_total = 0;
  for (int y = 0; y < kV; ++y) ctx_total += trigram[ctx * kV + static_cast<std::size_t>(y)];
  if (ctx_total > 0) {
    const long c = trigram[ctx * kV + static_cast<std::size_t>(label)];
    return std::log((static_cast<double>(c) + 1.0) / (static_cast<double>(ctx_total) + kV));
  }
  long bi_total = 0;
  for (int y = 0; y < kV; ++y)
    bi_total += bigram[static_cast<std::size_t>(prev1) * kV + static_cast<std::size_t>(y)];
  if (bi_total > 0) {
    const long c = bigram[static_cast<std::size_t>(prev1) * kV + static_cast<std::size_t>(label)];
    return std::log((static_cast<double>(c) + 1.0) / (static_cast<double>(bi_total) + kV));
  }
  long uni_total = 0;
  for (long c : unigram) uni_total += c;
  return std::log((static_cast<double>(unigram[static_cast<std::size_t>(label)]) + 1.0) /
                  (static_cast<double>(uni_total) + kV));
}

double GaTables::log_position(int label, int m_one_based) const {
  const int pos = m_one_based % 8;
  const auto& row = position[static_cast<std::size_t>(pos)];
  long total = 0;
  for (long c : row) total += c;
  return std::log((static_cast<double>(row[static_cast<std::size_t>(label)]) + 1.0) /
                  (static_cast<double>(total) + kV));
}

double GaTables::log_entropy_prob(double entropy) const {
  int bin = static_cast<int>(entropy / kEntropyBinWidth);
  if (bin < 0) bin = 0;
  if (bin >= kEntropyBins) bin = kEntropyBins - 1;
  long total = 0;
  for (long c : entropy_bins) total += c;
  return std::log((static_cast<double>(entropy_bins[static_cast<std::size_t>(bin)]) + 1.0) /
                  (static_cast<double>(total) + kEntropyBins));
}

void GaConfig::validate() const {
  if (population < 1 || elitism < 1 || elitism > population)
    throw std::invalid_argument("GaConfig: need population >= elitism >= 1");
  if (generations < 0) throw std::invalid_argument("GaConfig: negative generations");
  if (tournament_k < 1) throw std::invalid_argument("GaConfig: tournament_k must be >= 1");
  if (crossover_rate < 0.0 || crossover_rate > 1.0)
    throw std::invalid_argument("GaConfig: crossover_rate outside [0,1]");
  if (mutation_rate && (*mutation_rate < 0.0 || *mutation_rate > 1.0))
    throw std::invalid_argument("GaConfig: mutation_rate outside [0,1]");
}

double ga_fitness(const ChordSequence& y, const std::vector<PitchClassProfile>& x16,
                  const GaTables& tables, const std::array<double, 4>& weights) {
  const int slots = static_cast<int>(y.size());
  if (static_cast<int>(x16.size()) != 8 * slots)
    throw std::invalid_argument("ga_fitness: need 8 melody frames per chord slot, got " +
                                std::to_string(x16.size()) + " for " + std::to_string(slots));

  double f1 = 0.0;
  for (int n = 1; n <= 8 * slots; ++n) {
    const PitchClassProfile& x = x16[static_cast<std::size_t>(n - 1)];
    if (x.all_zero()) continue;  // rest frame carries no evidence
    const int slot = (n + 7) / 8;  // ceil(n/8), 1-based
    f1 += tables.log_frame_posterior(y[static_cast<std::size_t>(slot - 1)].encode(), x);
  }

  double f2 = 0.0;
  for (int m = 3; m <= slots; ++m)
    f2 += tables.log_trigram(y[static_cast<std::size_t>(m - 3)].encode(),
                             y[static_cast<std::size_t>(m - 2)].encode(),
                             y[static_cast<std::size_t>(m - 1)].encode());

  double f3 = 0.0;
  for (int m = 1; m <= slots; ++m)
    f3 += tables.log_position(y[static_cast<std::size_t>(m - 1)].encode(), m);

  const double f4 = tables.log_entropy_prob(sequence_entropy(y));

  return weights[0] * f1 + weights[1] * f2 + weights[2] * f3 + weights[3] * f4;
}

namespace {

// Fitness over gene vectors with the melody-dependent terms precomputed:
// slot_lp[m][g] = (F1 contribution of slot m) + (F3 positional term).
struct FitnessContext {
  const GaTables* tables;
  std::array<double, 4> weights;
  std::vector<std::vector<double>> slot_lp;  // [slot][allele]
  std::vector<ChordLabel> alphabet;

  double evaluate(const std::vector<int>& genes) const {
    const int slots = static_cast<int>(genes.size());
    double f13 = 0.0;
    for (int m = 0; m < slots; ++m)
      f13 += slot_lp[static_cast<std::size_t>(m)][static_cast<std::size_t>(genes[static_cast<std::size_t>(m)])];

    double f2 = 0.0;
    for (int m = 3; m <= slots; ++m)
      f2 += tables->log_trigram(code(genes, m - 3), code(genes, m - 2), code(genes, m - 1));

    ChordSequence seq(static_cast<std::size_t>(slots));
    for (int m = 0; m < slots; ++m)
      seq[static_cast<std::size_t>(m)] = alphabet[static_cast<std::size_t>(genes[static_cast<std::size_t>(m)])];
    const double f4 = tables->log_entropy_prob(sequence_entropy(seq));

    return f13 + weights[1] * f2 + weights[3] * f4;
  }

  int code(const std::vector<int>& genes, int idx) const {
    return alphabet[static_cast<std::size_t>(genes[static_cast<std::size_t>(idx)])].encode();
  }
};

}  // namespace

ChordSequence ga_evolve(const std::vector<PitchClassProfile>& x16, const GaTables& tables,
                        const GaConfig& config, const std::vector<ChordLabel>& alphabet_in,
                        std::vector<double>* generation_best) {
  config.validate();
  if (x16.size() % 8 != 0 || x16.empty())
    throw std::invalid_argument("ga_evolve: melody frame count must be a positive multiple of 8");
  const int slots = static_cast<int>(x16.size() / 8);

  std::vector<ChordLabel> alphabet = alphabet_in;
  if (alphabet.empty())
    for (int code = 0; code < kV; ++code) alphabet.push_back(ChordLabel::decode(code));
  const int n_alleles = static_cast<int>(alphabet.size());

  FitnessContext ctx;
  ctx.tables = &tables;
  ctx.weights = config.weights;
  ctx.alphabet = alphabet;
  ctx.slot_lp.assign(static_cast<std::size_t>(slots),
                     std::vector<double>(static_cast<std::size_t>(n_alleles), 0.0));
  for (int m = 0; m < slots; ++m) {
    for (int a = 0; a < n_alleles; ++a) {
      const int code = alphabet[static_cast<std::size_t>(a)].encode();
      double lp = config.weights[2] * tables.log_position(code, m + 1);
      for (int n = 8 * m + 1; n <= 8 * (m + 1); ++n) {
        const PitchClassProfile& x = x16[static_cast<std::size_t>(n - 1)];
        if (x.all_zero()) continue;
        lp += config.weights[0] * tables.log_frame_posterior(code, x);
      }
      ctx.slot_lp[static_cast<std::size_t>(m)][static_cast<std::size_t>(a)] = lp;
    }
  }

  const double mutation_rate =
      config.mutation_rate ? *config.mutation_rate : 1.0 / static_cast<double>(slots);

  Rng rng(config.seed);
  using Genes = std::vector<int>;
  std::vector<Genes> population(static_cast<std::size_t>(config.population),
                                Genes(static_cast<std::size_t>(slots)));
  for (Genes& g : population)
    for (int& allele : g) allele = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_alleles)));

  std::vector<double> fitness(population.size());
  Genes best_genes;
  double best_fitness = -std::numeric_limits<double>::infinity();

  auto evaluate_all = [&] {
    for (std::size_t i = 0; i < population.size(); ++i) {
      fitness[i] = ctx.evaluate(population[i]);
      if (fitness[i] > best_fitness) {
        best_fitness = fitness[i];
        best_genes = population[i];
      }
    }
  };

  auto tournament = [&]() -> const Genes& {
    std::size_t best_idx = static_cast<std::size_t>(rng.below(population.size()));
    for (int t = 1; t < config.tournament_k; ++t) {
      const std::size_t idx = static_cast<std::size_t>(rng.below(population.size()));
      if (fitness[idx] > fitness[best_idx]) best_idx = idx;
    }
    return population[best_idx];
  };

  evaluate_all();
  if (generation_best) generation_best->push_back(best_fitness);

  for (int gen = 0; gen < config.generations; ++gen) {
    // Elites first, by fitness then index, so reruns are reproducible.
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });

    std::vector<Genes> next;
    next.reserve(population.size());
    for (int e = 0; e < config.elitism; ++e)
      next.push_back(population[order[static_cast<std::size_t>(e)]]);

    while (next.size() < population.size()) {
      Genes child = tournament();
      if (slots >= 2 && rng.chance(config.crossover_rate)) {
        const Genes& other = tournament();
        const int cut = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(slots - 1)));
        for (int m = cut; m < slots; ++m)
          child[static_cast<std::size_t>(m)] = other[static_cast<std::size_t>(m)];
      }
      for (int m = 0; m < slots; ++m)
        if (rng.chance(mutation_rate))
          child[static_cast<std::size_t>(m)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_alleles)));
      next.push_back(std::move(child));
    }
    population = std::move(next);
    evaluate_all();
    if (generation_best) generation_best->push_back(best_fitness);
  }

  ChordSequence out(static_cast<std::size_t>(slots));
  for (int m = 0; m < slots; ++m)
    out[static_cast<std::size_t>(m)] = alphabet[static_cast<std::size_t>(best_genes[static_cast<std::size_t>(m)])];
  return out;
}

GaTables fit_ga_tables(const std::vector<LeadSheet>& train) {
  if (train.empty()) throw std::invalid_argument("fit_ga_tables: empty training corpus");

  GaTables t;
  t.unigram.assign(kV, 0);
  t.bigram.assign(static_cast<std::size_t>(kV) * kV, 0);
  t.trigram.assign(static_cast<std::size_t>(kV) * kV * kV, 0);

  EmissionAccumulator acc;
  for (const LeadSheet& sheet : train) {
    const int slots = sheet.num_slots();
    for (int m = 0; m < slots; ++m) {
      const int y = sheet.chords[static_cast<std::size_t>(m)].encode();
      t.unigram[static_cast<std::size_t>(y)]++;
      t.position[static_cast<std::size_t>((m + 1) % 8)][static_cast<std::size_t>(y)]++;
      if (m >= 1) {
        const int p1 = sheet.chords[static_cast<std::size_t>(m - 1)].encode();
        t.bigram[static_cast<std::size_t>(p1) * kV + static_cast<std::size_t>(y)]++;
        if (m >= 2) {
          const int p2 = sheet.chords[static_cast<std::size_t>(m - 2)].encode();
          t.trigram[(static_cast<std::size_t>(p2) * kV + static_cast<std::size_t>(p1)) * kV +
                    static_cast<std::size_t>(y)]++;
        }
      }
      // 16th-note frames; silent frames carry no pitch evidence and are
      // left out, mirroring the rest-skip in F1.
      for (int n = 8 * m; n < 8 * (m + 1); ++n) {
        const PitchClassProfile x = melody_pcp(sheet, n, Resolution::Sixteenth);
        if (!x.all_zero()) acc.add(y, x);
      }
    }
    const double e = sequence_entropy(sheet.chords);
    int bin = static_cast<int>(e / kEntropyBinWidth);
    if (bin >= kEntropyBins) bin = kEntropyBins - 1;
    t.entropy_bins[static_cast<std::size_t>(bin)]++;
  }
  t.frame = acc.finalize();
  t.frame_priors = acc.priors();
  return t;
}

ChordSequence ga_harmonize(const GaTables& tables, const GaConfig& config,
                           const LeadSheet& sheet) {
  std::vector<PitchClassProfile> x16;
  x16.reserve(static_cast<std::size_t>(8 * sheet.num_slots()));
  for (int n = 0; n < 8 * sheet.num_slots(); ++n)
    x16.push_back(melody_pcp(sheet, n, Resolution::Sixteenth));
  GaConfig per_sheet = config;
  per_sheet.seed = config.seed ^ fnv1a64(sheet.id);
  return ga_evolve(x16, tables, per_sheet);
}

// --- Serialization ----------------------------------------------------------

std::string GaTables::to_json() const {
  json j;
  j["type"] = "ga";
  json g;
  json means = json::array(), vars = json::array();
  for (const auto& row : frame.means) means.push_back(std::vector<double>(row.begin(), row.end()));
  for (const auto& row : frame.variances) vars.push_back(std::vector<double>(row.begin(), row.end()));
  g["means"] = means;
  g["variances"] = vars;
  j["gaussians"] = g;
  j["frame_priors"] = frame_priors;
  j["unigram"] = unigram;

  // Sparse count triples keep checkpoints small.
  json bi = json::array();
  for (int a = 0; a < kV; ++a)
    for (int b = 0; b < kV; ++b) {
      const long c = bigram[static_cast<std::size_t>(a) * kV + static_cast<std::size_t>(b)];
      if (c != 0) bi.push_back({a, b, c});
    }
  j["bigram"] = bi;
  json tri = json::array();
  for (int a = 0; a < kV; ++a)
    for (int b = 0; b < kV; ++b)
      for (int c = 0; c < kV; ++c) {
        const long cnt = trigram[(static_cast<std::size_t>(a) * kV + static_cast<std::size_t>(b)) * kV +
                                 static_cast<std::size_t>(c)];
        if (cnt != 0) tri.push_back({a, b, c, cnt});
      }
  j["trigram"] = tri;

  json pos = json::array();
  for (const auto& row : position) pos.push_back(std::vector<long>(row.begin(), row.end()));
  j["position"] = pos;
  j["entropy_bins"] = std::vector<long>(entropy_bins.begin(), entropy_bins.end());
  return j.dump() + "\n";
}

GaTables GaTables::from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  if (!j.contains("type") || j.at("type") != "ga")
    throw std::runtime_error(origin + ": not a ga checkpoint");

  GaTables t;
  for (const auto& row : j.at("gaussians").at("means")) {
    std::array<double, 12> r{};
    for (int k = 0; k < 12; ++k) r[static_cast<std::size_t>(k)] = row.at(static_cast<std::size_t>(k)).get<double>();
    t.frame.means.push_back(r);
  }
  for (const auto& row : j.at("gaussians").at("variances")) {
    std::array<double, 12> r{};
    for (int k = 0; k < 12; ++k) r[static_cast<std::size_t>(k)] = row.at(static_cast<std::size_t>(k)).get<double>();
    t.frame.variances.push_back(r);
  }
  t.frame_priors = j.at("frame_priors").get<std::vector<double>>();
  t.unigram = j.at("unigram").get<std::vector<long>>();
  t.bigram.assign(static_cast<std::size_t>(kV) * kV, 0);
  for (const auto& entry : j.at("bigram"))
    t.bigram[entry.at(0).get<std::size_t>() * kV + entry.at(1).get<std::size_t>()] =
        entry.at(2).get<long>();
  t.trigram.assign(static_cast<std::size_t>(kV) * kV * kV, 0);
  for (const auto& entry : j.at("trigram"))
    t.trigram[(entry.at(0).get<std::size_t>() * kV + entry.at(1).get<std::size_t>()) * kV +
              entry.at(2).get<std::size_t>()] = entry.at(3).get<long>();
  const auto pos = j.at("position");
  for (int p = 0; p < 8; ++p)
    for (int y = 0; y < kV; ++y)
      t.position[static_cast<std::size_t>(p)][static_cast<std::size_t>(y)] =
          pos.at(static_cast<std::size_t>(p)).at(static_cast<std::size_t>(y)).get<long>();
  const auto bins = j.at("entropy_bins");
  for (int b = 0; b < kEntropyBins; ++b)
    t.entropy_bins[static_cast<std::size_t>(b)] = bins.at(static_cast<std::size_t>(b)).get<long>();
  return t;
}

}  // namespace harmonizer
