#ifndef HARMONIZER_METRICS_HPP
#define HARMONIZER_METRICS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "harmonizer/leadsheet.hpp"

namespace harmonizer {

// 6-D tonal-space projection of an L1-normalized PCP. Undefined (throws) for
// an all-zero PCP, so callers must skip N.C. themselves.
struct TonalCentroid {
  std::array<double, 6> values{};
};

TonalCentroid tonal_centroid(const PitchClassProfile& pcp);
double tonal_distance(const TonalCentroid& a, const TonalCentroid& b);

// Chord progression metrics.
double che(const ChordSequence& y);  // natural-log histogram entropy
int cc(const ChordSequence& y);      // distinct labels, N.C. included
std::optional<double> ctd(const ChordSequence& y);  // mean adjacent tonal distance

// Chord/melody harmonicity metrics.
double ctnctr(const LeadSheet& sheet, const ChordSequence& y);
std::optional<double> pcs(const LeadSheet& sheet, const ChordSequence& y);
std::optional<double> mctd(const LeadSheet& sheet, const ChordSequence& y);

double chord_accuracy(const ChordSequence& predicted, const ChordSequence& ground_truth);

// One evaluated sheet. Metrics whose inputs were entirely excluded (all-rest
// melodies, all-N.C. progressions) stay empty and are skipped in aggregation.
struct SheetMetrics {
  std::string id;
  double che = 0.0;
  int cc = 0;
  std::optional<double> ctd;
  double ctnctr = 0.0;
  std::optional<double> pcs;
  std::optional<double> mctd;
  std::optional<double> accuracy;
};

SheetMetrics compute_sheet_metrics(const LeadSheet& sheet, const ChordSequence& y,
                                   const ChordSequence* ground_truth = nullptr);

struct MetricSummary {
  int sheet_count = 0;
  double che = 0.0;
  double cc = 0.0;
  std::optional<double> ctd;
  double ctnctr = 0.0;
  std::optional<double> pcs;
  std::optional<double> mctd;
  std::optional<double> accuracy;
  int skipped_ctd = 0;
  int skipped_pcs = 0;
  int skipped_mctd = 0;
};

struct MetricReport {
  std::vector<SheetMetrics> rows;
  MetricSummary summary() const;  // order-independent: rows are summed in id order
  std::string to_csv() const;     // fixed columns: id,CHE,CC,CTD,CTnCTR,PCS,MCTD,accuracy
  std::string to_json() const;
};

}  // namespace harmonizer

#endif
