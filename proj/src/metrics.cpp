#include "harmonizer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace harmonizer {

namespace {

// Projection constants follow the standard tonal-distance construction:
// fifths and minor-third circles at radius 1, major-third circle at 0.5.
const std::array<std::array<double, 12>, 6>& projection_matrix() {
  static const auto phi = [] {
    std::array<std::array<double, 12>, 6> m{};
    constexpr double pi = std::numbers::pi;
    for (int k = 0; k < 12; ++k) {
      const double a = 7.0 * pi * k / 6.0;
      const double b = 3.0 * pi * k / 2.0;
      const double c = 2.0 * pi * k / 3.0;
      m[0][static_cast<std::size_t>(k)] = std::sin(a);
      m[1][static_cast<std::size_t>(k)] = std::cos(a);
      m[2][static_cast<std::size_t>(k)] = std::sin(b);
      m[3][static_cast<std::size_t>(k)] = std::cos(b);
      m[4][static_cast<std::size_t>(k)] = 0.5 * std::sin(c);
      m[5][static_cast<std::size_t>(k)] = 0.5 * std::cos(c);
    }
    return m;
  }();
  return phi;
}

PitchClassProfile one_hot_pcp(int pitch_class) {
  PitchClassProfile p;
  p[((pitch_class % 12) + 12) % 12] = 1.0;
  return p;
}

// Chord slot covering a beat position; notes are attributed to the slot
// containing their onset.
int slot_of(const Rational& onset) { return static_cast<int>((onset / Rational(2)).num() / (onset / Rational(2)).den()); }

double note_consonance(int melody_pc, const ChordLabel& chord) {
  // Interval class from chord tone up to melody pitch class: unison, 3rds,
  // 5th, 6ths are consonant; the perfect 4th is neutral; the rest dissonant.
  double total = 0.0;
  const auto tones = chord.pitch_classes();
  for (int tone : tones) {
    const int d = ((melody_pc - tone) % 12 + 12) % 12;
    if (d == 0 || d == 3 || d == 4 || d == 7 || d == 8 || d == 9) total += 1.0;
    else if (d == 5) total += 0.0;
    else total -= 1.0;
  }
  return total / static_cast<double>(tones.size());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

TonalCentroid tonal_centroid(const PitchClassProfile& pcp) {
  const double norm = pcp.l1_norm();
  if (norm == 0.0) throw std::domain_error("tonal_centroid: zero PCP has no centroid");
  const auto& phi = projection_matrix();
  TonalCentroid c;
  for (int r = 0; r < 6; ++r) {
    double s = 0.0;
    for (int k = 0; k < 12; ++k)
      s += phi[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] * pcp[k];
    c.values[static_cast<std::size_t>(r)] = s / norm;
  }
  return c;
}

double tonal_distance(const TonalCentroid& a, const TonalCentroid& b) {
  double s = 0.0;
  for (int r = 0; r < 6; ++r) {
    const double d = a.values[static_cast<std::size_t>(r)] - b.values[static_cast<std::size_t>(r)];
    s += d * d;
  }
  return std::sqrt(s);
}

double che(const ChordSequence& y) {
  if (y.empty()) throw std::invalid_argument("che: empty chord sequence");
  std::array<int, ChordLabel::kVocabularySize> counts{};
  for (const ChordLabel& c : y) counts[static_cast<std::size_t>(c.encode())]++;
  double h = 0.0;
  const double n = static_cast<double>(y.size());
  for (int cnt : counts) {
    if (cnt == 0) continue;
    const double p = cnt / n;
    h -= p * std::log(p);
  }
  return h;
}

int cc(const ChordSequence& y) {
  if (y.empty()) throw std::invalid_argument("cc: empty chord sequence");
  std::set<int> distinct;
  for (const ChordLabel& c : y) distinct.insert(c.encode());
  return static_cast<int>(distinct.size());
}

std::optional<double> ctd(const ChordSequence& y) {
  if (y.size() < 2) throw std::invalid_argument("ctd: need at least two chords");
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t m = 1; m < y.size(); ++m) {
    if (y[m - 1].is_no_chord() || y[m].is_no_chord()) continue;
    sum += tonal_distance(tonal_centroid(chord_template_pcp(y[m - 1])),
                          tonal_centroid(chord_template_pcp(y[m])));
    ++pairs;
  }
  if (pairs == 0) return std::nullopt;
  return sum / pairs;
}

double ctnctr(const LeadSheet& sheet, const ChordSequence& y) {
  // Sounding notes only; next note means the next sounding note in onset
  // order, across half-bar boundaries.
  std::vector<const Note*> sounding;
  for (const Note& n : sheet.melody)
    if (!n.is_rest()) sounding.push_back(&n);

  long n_c = 0, n_n = 0, n_p = 0;
  for (std::size_t i = 0; i < sounding.size(); ++i) {
    const Note& n = *sounding[i];
    const int slot = slot_of(n.onset);
    if (slot >= static_cast<int>(y.size())) continue;
    const ChordLabel& chord = y[static_cast<std::size_t>(slot)];
    if (chord.is_no_chord()) continue;
    if (chord.contains(PitchClass(*n.pitch))) {
      ++n_c;
    } else {
      ++n_n;
      if (i + 1 < sounding.size() && std::abs(*sounding[i + 1]->pitch - *n.pitch) <= 2) ++n_p;
    }
  }
  if (n_c + n_n == 0) return 1.0;
  return static_cast<double>(n_c + n_p) / static_cast<double>(n_c + n_n);
}

std::optional<double> pcs(const LeadSheet& sheet, const ChordSequence& y) {
  // Melody notes sit on the 16th grid, so every 16th window is either fully
  // covered by one note or silent.
  const int windows = 8 * static_cast<int>(y.size());
  double sum = 0.0;
  int scored = 0;
  std::size_t cursor = 0;
  for (int w = 0; w < windows; ++w) {
    const Rational start(w, 4);
    const Rational end(w + 1, 4);
    while (cursor < sheet.melody.size() && sheet.melody[cursor].end() <= start) ++cursor;
    if (cursor >= sheet.melody.size()) break;
    const Note& n = sheet.melody[cursor];
    if (n.is_rest() || n.onset >= end) continue;
    const ChordLabel& chord = y[static_cast<std::size_t>(w / 8)];
    if (chord.is_no_chord()) continue;
    sum += note_consonance(*n.pitch % 12, chord);
    ++scored;
  }
  if (scored == 0) return std::nullopt;
  return sum / scored;
}

std::optional<double> mctd(const LeadSheet& sheet, const ChordSequence& y) {
  double weighted = 0.0;
  double total_duration = 0.0;
  for (const Note& n : sheet.melody) {
    if (n.is_rest()) continue;
    const int slot = slot_of(n.onset);
    if (slot >= static_cast<int>(y.size())) continue;
    const ChordLabel& chord = y[static_cast<std::size_t>(slot)];
    if (chord.is_no_chord()) continue;
    const double d = tonal_distance(tonal_centroid(one_hot_pcp(*n.pitch % 12)),
                                    tonal_centroid(chord_template_pcp(chord)));
    const double w = n.duration.to_double();
    weighted += w * d;
    total_duration += w;
  }
  if (total_duration == 0.0) return std::nullopt;
  return weighted / total_duration;
}

double chord_accuracy(const ChordSequence& predicted, const ChordSequence& ground_truth) {
  if (predicted.size() != ground_truth.size())
    throw std::invalid_argument("chord_accuracy: length mismatch " +
                                std::to_string(predicted.size()) + " vs " +
                                std::to_string(ground_truth.size()));
  if (predicted.empty()) throw std::invalid_argument("chord_accuracy: empty sequences");
  int hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == ground_truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

SheetMetrics compute_sheet_metrics(const LeadSheet& sheet, const ChordSequence& y,
                                   const ChordSequence* ground_truth) {
  SheetMetrics m;
  m.id = sheet.id;
  m.che = che(y);
  m.cc = cc(y);
  m.ctd = ctd(y);
  m.ctnctr = ctnctr(sheet, y);
  m.pcs = pcs(sheet, y);
  m.mctd = mctd(sheet, y);
  if (ground_truth) m.accuracy = chord_accuracy(y, *ground_truth);
  return m;
}

MetricSummary MetricReport::summary() const {
  std::vector<const SheetMetrics*> ordered;
  ordered.reserve(rows.size());
  for (const SheetMetrics& r : rows) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const SheetMetrics* a, const SheetMetrics* b) { return a->id < b->id; });

  MetricSummary s;
  s.sheet_count = static_cast<int>(ordered.size());
  double ctd_sum = 0.0, pcs_sum = 0.0, mctd_sum = 0.0, acc_sum = 0.0;
  int ctd_n = 0, pcs_n = 0, mctd_n = 0, acc_n = 0;
  for (const SheetMetrics* r : ordered) {
    s.che += r->che;
    s.cc += r->cc;
    s.ctnctr += r->ctnctr;
    if (r->ctd) { ctd_sum += *r->ctd; ++ctd_n; } else ++s.skipped_ctd;
    if (r->pcs) { pcs_sum += *r->pcs; ++pcs_n; } else ++s.skipped_pcs;
    if (r->mctd) { mctd_sum += *r->mctd; ++mctd_n; } else ++s.skipped_mctd;
    if (r->accuracy) { acc_sum += *r->accuracy; ++acc_n; }
  }
  if (s.sheet_count > 0) {
    s.che /= s.sheet_count;
    s.cc /= s.sheet_count;
    s.ctnctr /= s.sheet_count;
  }
  if (ctd_n > 0) s.ctd = ctd_sum / ctd_n;
  if (pcs_n > 0) s.pcs = pcs_sum / pcs_n;
  if (mctd_n > 0) s.mctd = mctd_sum / mctd_n;
  if (acc_n > 0) s.accuracy = acc_sum / acc_n;
  return s;
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "id,CHE,CC,CTD,CTnCTR,PCS,MCTD,accuracy\n";
  auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const SheetMetrics& r : rows) {
    out << r.id << ',' << fmt(r.che) << ',' << r.cc << ',' << cell(r.ctd) << ',' << fmt(r.ctnctr)
        << ',' << cell(r.pcs) << ',' << cell(r.mctd) << ',' << cell(r.accuracy) << '\n';
  }
  const MetricSummary s = summary();
  out << "mean," << fmt(s.che) << ',' << fmt(s.cc) << ',' << cell(s.ctd) << ',' << fmt(s.ctnctr)
      << ',' << cell(s.pcs) << ',' << cell(s.mctd) << ',' << cell(s.accuracy) << '\n';
  return out.str();
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  auto put = [](nlohmann::json& obj, const char* key, const std::optional<double>& v) {
    obj[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  j["sheets"] = nlohmann::json::array();
  for (const SheetMetrics& r : rows) {
    nlohmann::json row;
    row["id"] = r.id;
    row["CHE"] = r.che;
    row["CC"] = r.cc;
    put(row, "CTD", r.ctd);
    row["CTnCTR"] = r.ctnctr;
    put(row, "PCS", r.pcs);
    put(row, "MCTD", r.mctd);
    put(row, "accuracy", r.accuracy);
    j["sheets"].push_back(std::move(row));
  }
  const MetricSummary s = summary();
  nlohmann::json sum;
  sum["sheet_count"] = s.sheet_count;
  sum["CHE"] = s.che;
  sum["CC"] = s.cc;
  put(sum, "CTD", s.ctd);
  sum["CTnCTR"] = s.ctnctr;
  put(sum, "PCS", s.pcs);
  put(sum, "MCTD", s.mctd);
  put(sum, "accuracy", s.accuracy);
  sum["skipped"] = {{"CTD", s.skipped_ctd}, {"PCS", s.skipped_pcs}, {"MCTD", s.skipped_mctd}};
  j["summary"] = std::move(sum);
  return j.dump(2) + "\n";
}

}  // namespace harmonizer
