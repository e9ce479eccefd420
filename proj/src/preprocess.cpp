#include "harmonizer/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace harmonizer {

using nlohmann::json;

namespace {

enum class QualityFamily { Major, Minor, Diminished, Augmented, Sus, NoChord };

const std::map<std::string, QualityFamily>& quality_table() {
  static const std::map<std::string, QualityFamily> table = {
      // major family: plain triads, sixths, sevenths, added tones
      {"", QualityFamily::Major},        {"maj", QualityFamily::Major},
      {"major", QualityFamily::Major},   {"M", QualityFamily::Major},
      {"maj7", QualityFamily::Major},    {"maj9", QualityFamily::Major},
      {"maj11", QualityFamily::Major},   {"maj13", QualityFamily::Major},
      {"M6", QualityFamily::Major},      {"M7", QualityFamily::Major},
      {"M9", QualityFamily::Major},      {"M11", QualityFamily::Major},
      {"M13", QualityFamily::Major},     {"6", QualityFamily::Major},
      {"69", QualityFamily::Major},      {"6/9", QualityFamily::Major},
      {"7", QualityFamily::Major},       {"9", QualityFamily::Major},
      {"11", QualityFamily::Major},      {"13", QualityFamily::Major},
      {"dom7", QualityFamily::Major},    {"dom9", QualityFamily::Major},
      {"add9", QualityFamily::Major},    {"add2", QualityFamily::Major},
      {"add4", QualityFamily::Major},    {"add11", QualityFamily::Major},
      {"5", QualityFamily::Major},       {"7b9", QualityFamily::Major},
      {"7#9", QualityFamily::Major},     {"7#11", QualityFamily::Major},
      {"7b13", QualityFamily::Major},    {"maj7#11", QualityFamily::Major},
      // minor family
      {"m", QualityFamily::Minor},       {"min", QualityFamily::Minor},
      {"minor", QualityFamily::Minor},   {"m6", QualityFamily::Minor},
      {"m7", QualityFamily::Minor},      {"m9", QualityFamily::Minor},
      {"m11", QualityFamily::Minor},     {"m13", QualityFamily::Minor},
      {"min6", QualityFamily::Minor},    {"min7", QualityFamily::Minor},
      {"min9", QualityFamily::Minor},    {"min11", QualityFamily::Minor},
      {"min13", QualityFamily::Minor},   {"madd9", QualityFamily::Minor},
      {"minadd9", QualityFamily::Minor}, {"mmaj7", QualityFamily::Minor},
      {"minmaj7", QualityFamily::Minor}, {"m(maj7)", QualityFamily::Minor},
      // diminished family, half-diminished included
      {"dim", QualityFamily::Diminished},   {"dim7", QualityFamily::Diminished},
      {"o", QualityFamily::Diminished},     {"o7", QualityFamily::Diminished},
      {"m7b5", QualityFamily::Diminished},  {"hdim7", QualityFamily::Diminished},
      {"halfdim", QualityFamily::Diminished}, {"halfdim7", QualityFamily::Diminished},
      {"ø", QualityFamily::Diminished},  {"ø7", QualityFamily::Diminished},
      // augmented family
      {"aug", QualityFamily::Augmented},  {"+", QualityFamily::Augmented},
      {"aug7", QualityFamily::Augmented}, {"+7", QualityFamily::Augmented},
      {"7#5", QualityFamily::Augmented},  {"maj7#5", QualityFamily::Augmented},
      {"augmaj7", QualityFamily::Augmented},
      // suspensions resolve by scale-degree context
      {"sus", QualityFamily::Sus},   {"sus2", QualityFamily::Sus},
      {"sus4", QualityFamily::Sus},  {"7sus2", QualityFamily::Sus},
      {"7sus4", QualityFamily::Sus}, {"9sus4", QualityFamily::Sus},
      // explicit no-chord markers
      {"nc", QualityFamily::NoChord}, {"N.C.", QualityFamily::NoChord},
      {"NC", QualityFamily::NoChord},
  };
  return table;
}

QualityFamily classify_quality(const std::string& quality) {
  const auto& table = quality_table();
  auto it = table.find(quality);
  if (it != table.end()) return it->second;
  std::string lower;
  for (char c : quality) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  it = table.find(lower);
  if (it != table.end()) return it->second;
  throw std::invalid_argument("reduce_chord: unknown quality string '" + quality + "'");
}

// Degrees carrying a major triad in the diatonic scale of each mode.
bool degree_is_major_functioned(int degree_semitones, Mode mode) {
  if (mode == Mode::Major)
    return degree_semitones == 0 || degree_semitones == 5 || degree_semitones == 7;
  return degree_semitones == 3 || degree_semitones == 8 || degree_semitones == 10;
}

Rational total_sounding_time(const std::vector<Note>& melody) {
  Rational s(0);
  for (const Note& n : melody)
    if (!n.is_rest()) s = s + n.duration;
  return s;
}

}  // namespace

Rational rest_ratio(const RawLeadSheet& sheet) {
  const Rational total(4 * sheet.num_bars);
  if (total == Rational(0)) return Rational(1);
  return (total - total_sounding_time(sheet.melody)) / total;
}

bool passes_rest_filter(const RawLeadSheet& sheet) {
  return !(rest_ratio(sheet) > Rational(2, 5));
}

bool passes_length_filter(const RawLeadSheet& sheet) {
  return sheet.num_bars >= 4 && sheet.num_bars <= 32;
}

int transposition_shift(PitchClass tonic) {
  const int up = (12 - tonic.value) % 12;
  return up <= 5 ? up : up - 12;
}

RawLeadSheet transpose_to_c(const RawLeadSheet& sheet) {
  const int shift = transposition_shift(sheet.key.tonic);
  RawLeadSheet out = sheet;
  out.key.tonic = PitchClass(0);
  for (Note& n : out.melody) {
    if (!n.pitch) continue;
    int p = *n.pitch + shift;
    while (p < 0) p += 12;
    while (p > 127) p -= 12;
    n.pitch = p;
  }
  for (RawChord& c : out.chords) c.root = c.root.shifted(shift);
  return out;
}

ChordLabel reduce_chord(const RawChord& chord, const RawKey& key) {
  switch (classify_quality(chord.quality)) {
    case QualityFamily::NoChord:
      return ChordLabel::no_chord();
    case QualityFamily::Major:
      return ChordLabel::triad(chord.root, ChordQuality::Major);
    case QualityFamily::Minor:
      return ChordLabel::triad(chord.root, ChordQuality::Minor);
    case QualityFamily::Diminished:
      return ChordLabel::triad(chord.root, ChordQuality::Diminished);
    case QualityFamily::Augmented:
      return ChordLabel::triad(chord.root, ChordQuality::Augmented);
    case QualityFamily::Sus: {
      const int degree = (chord.root.value - key.tonic.value + 12) % 12;
      return ChordLabel::triad(chord.root, degree_is_major_functioned(degree, key.mode)
                                               ? ChordQuality::Major
                                               : ChordQuality::Minor);
    }
  }
  throw std::logic_error("reduce_chord: unreachable");
}

ChordSequence quantize_harmonic_rhythm(const std::vector<TimedChord>& chords, int num_bars) {
  ChordSequence out;
  out.reserve(static_cast<std::size_t>(2 * num_bars));
  for (int m = 0; m < 2 * num_bars; ++m) {
    const Rational slot_start(2 * m);
    const Rational slot_end(2 * m + 2);

    // Overlap aggregated per label; the earliest contributing onset breaks
    // ties between labels.
    struct Candidate {
      Rational overlap{0};
      Rational first_onset{0};
      bool seen = false;
    };
    std::array<Candidate, ChordLabel::kVocabularySize> cands;
    for (const TimedChord& tc : chords) {
      if (tc.label.is_no_chord()) continue;
      const Rational lo = max(tc.onset, slot_start);
      const Rational hi = min(tc.end(), slot_end);
      if (!(lo < hi)) continue;
      Candidate& cand = cands[static_cast<std::size_t>(tc.label.encode())];
      cand.overlap = cand.overlap + (hi - lo);
      if (!cand.seen || tc.onset < cand.first_onset) cand.first_onset = tc.onset;
      cand.seen = true;
    }

    int best = -1;
    for (int code = 0; code < ChordLabel::kVocabularySize; ++code) {
      const Candidate& cand = cands[static_cast<std::size_t>(code)];
      if (!cand.seen) continue;
      if (best < 0) { best = code; continue; }
      const Candidate& top = cands[static_cast<std::size_t>(best)];
      if (cand.overlap > top.overlap ||
          (cand.overlap == top.overlap && cand.first_onset < top.first_onset))
        best = code;
    }
    out.push_back(best < 0 ? ChordLabel::no_chord() : ChordLabel::decode(best));
  }
  return out;
}

PreprocessResult preprocess_sheet(const RawLeadSheet& raw) {
  if (!passes_rest_filter(raw)) return {std::nullopt, DropReason::RestRatio};
  if (!passes_length_filter(raw)) return {std::nullopt, DropReason::Length};

  const RawLeadSheet in_c = transpose_to_c(raw);
  std::vector<TimedChord> reduced;
  reduced.reserve(in_c.chords.size());
  for (const RawChord& rc : in_c.chords)
    reduced.push_back({reduce_chord(rc, in_c.key), rc.onset, rc.duration});

  LeadSheet sheet;
  sheet.id = in_c.id;
  sheet.song_id = in_c.song_id;
  sheet.key_mode = in_c.key.mode == Mode::Major ? KeyMode::CMajor : KeyMode::CMinor;
  sheet.num_bars = in_c.num_bars;
  sheet.melody = in_c.melody;
  sheet.chords = quantize_harmonic_rhythm(reduced, in_c.num_bars);
  sheet.validate();
  return {sheet, DropReason::Kept};
}

std::pair<std::vector<LeadSheet>, PreprocessSummary> preprocess_corpus(
    const std::vector<RawLeadSheet>& raws) {
  std::vector<LeadSheet> kept;
  PreprocessSummary summary;
  summary.input = static_cast<int>(raws.size());
  for (const RawLeadSheet& raw : raws) {
    PreprocessResult r = preprocess_sheet(raw);
    switch (r.reason) {
      case DropReason::Kept:
        kept.push_back(std::move(*r.sheet));
        ++summary.kept;
        break;
      case DropReason::RestRatio: ++summary.dropped_rest; break;
      case DropReason::Length: ++summary.dropped_length; break;
    }
  }
  return {std::move(kept), summary};
}

// --- Split ---------------------------------------------------------------

std::string SplitManifest::to_json() const {
  json j;
  j["seed"] = seed;
  j["train"] = train;
  j["validation"] = validation;
  j["test"] = test;
  return j.dump(2) + "\n";
}

SplitManifest SplitManifest::from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin, -1, "", e.what());
  }
  SplitManifest m;
  for (const char* key : {"seed", "train", "validation", "test"})
    if (!j.contains(key)) throw SchemaError(origin, -1, key, "missing");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.train = j.at("train").get<std::vector<std::string>>();
  m.validation = j.at("validation").get<std::vector<std::string>>();
  m.test = j.at("test").get<std::vector<std::string>>();
  return m;
}

void SplitManifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json();
}

SplitManifest SplitManifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path);
}

SplitManifest split_corpus(const std::vector<LeadSheet>& sheets,
                           const std::array<double, 3>& ratios, std::uint64_t seed) {
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split_corpus: ratios must sum to 1");

  // Song groups in order of first appearance, then shuffled.
  std::vector<std::string> group_order;
  std::unordered_map<std::string, std::vector<std::string>> groups;
  for (const LeadSheet& s : sheets) {
    auto [it, inserted] = groups.try_emplace(s.song_id);
    if (inserted) group_order.push_back(s.song_id);
    it->second.push_back(s.id);
  }
  Rng rng(seed);
  rng.shuffle(group_order);

  SplitManifest m;
  m.seed = seed;
  const double n = static_cast<double>(sheets.size());
  std::size_t assigned_train = 0, assigned_val = 0, assigned = 0;
  for (const std::string& song : group_order) {
    const auto& ids = groups[song];
    std::vector<std::string>* target;
    if (static_cast<double>(assigned_train) < ratios[0] * n) {
      target = &m.train;
      assigned_train += ids.size();
    } else if (static_cast<double>(assigned_val) < ratios[1] * n &&
               static_cast<double>(assigned) < (ratios[0] + ratios[1]) * n) {
      target = &m.validation;
      assigned_val += ids.size();
    } else {
      target = &m.test;
    }
    assigned += ids.size();
    target->insert(target->end(), ids.begin(), ids.end());
  }
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.validation.begin(), m.validation.end());
  std::sort(m.test.begin(), m.test.end());
  return m;
}

std::vector<LeadSheet> select_split(const std::vector<LeadSheet>& sheets,
                                    const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<LeadSheet> out;
  for (const LeadSheet& s : sheets)
    if (wanted.count(s.id)) out.push_back(s);
  return out;
}

// --- Synthetic corpora ----------------------------------------------------

namespace {

struct Degree {
  int root;
  ChordQuality quality;
};

const std::array<Degree, 7>& diatonic_degrees(Mode mode) {
  static const std::array<Degree, 7> major = {{{0, ChordQuality::Major},
                                               {2, ChordQuality::Minor},
                                               {4, ChordQuality::Minor},
                                               {5, ChordQuality::Major},
                                               {7, ChordQuality::Major},
                                               {9, ChordQuality::Minor},
                                               {11, ChordQuality::Diminished}}};
  static const std::array<Degree, 7> minor = {{{0, ChordQuality::Minor},
                                               {2, ChordQuality::Diminished},
                                               {3, ChordQuality::Major},
                                               {5, ChordQuality::Minor},
                                               {7, ChordQuality::Minor},
                                               {8, ChordQuality::Major},
                                               {10, ChordQuality::Major}}};
  return mode == Mode::Major ? major : minor;
}

const std::array<int, 7>& scale_pcs(Mode mode) {
  static const std::array<int, 7> major = {0, 2, 4, 5, 7, 9, 11};
  static const std::array<int, 7> minor = {0, 2, 3, 5, 7, 8, 10};
  return mode == Mode::Major ? major : minor;
}

ChordLabel degree_label(int degree, Mode mode) {
  const Degree& d = diatonic_degrees(mode)[static_cast<std::size_t>(degree)];
  return ChordLabel::triad(PitchClass(d.root), d.quality);
}

// Function-plausible degree bigrams: tonic moves anywhere, pre-dominants
// push to V, dominants resolve home. Degrees whose triad carries the hook's
// root get extra weight, the way progressions are written around a hook.
int next_degree(int from, const ChordLabel& hook, Mode mode, Rng& rng) {
  static const std::array<std::array<double, 7>, 7> w = {{
      {2.0, 2.0, 1.0, 3.0, 3.0, 2.0, 0.5},   // from I
      {0.0, 0.5, 0.5, 1.0, 4.0, 0.5, 1.0},   // from ii
      {0.0, 1.0, 0.0, 2.0, 0.5, 2.0, 0.0},   // from iii
      {2.0, 1.0, 0.0, 0.5, 3.0, 0.5, 0.5},   // from IV
      {4.0, 0.0, 0.0, 0.5, 1.0, 2.0, 0.0},   // from V
      {0.5, 2.0, 0.5, 2.0, 1.0, 0.5, 0.0},   // from vi
      {3.0, 0.0, 1.0, 0.0, 0.5, 0.5, 0.0},   // from vii
  }};
  const auto& row = w[static_cast<std::size_t>(from)];
  std::array<double, 7> biased{};
  double total = 0.0;
  for (int d = 0; d < 7; ++d) {
    double x = row[static_cast<std::size_t>(d)];
    if (degree_label(d, mode).contains(hook.root())) x *= 2.5;
    biased[static_cast<std::size_t>(d)] = x;
    total += x;
  }
  double roll = rng.uniform01() * total;
  for (int d = 0; d < 7; ++d) {
    roll -= biased[static_cast<std::size_t>(d)];
    if (roll < 0.0) return d;
  }
  return 0;
}

int place_in_register(int pc) { return 60 + pc; }

// A passing tone from the scale near `toward`, at most two semitones away,
// excluding the chord's own pitch classes where possible.
int passing_tone(const std::vector<int>& chord_pcs, int toward_pc, Mode mode, Rng& rng) {
  std::vector<int> options;
  for (int pc : scale_pcs(mode)) {
    const int dist = std::min((pc - toward_pc + 12) % 12, (toward_pc - pc + 12) % 12);
    if (dist == 0 || dist > 2) continue;
    if (std::find(chord_pcs.begin(), chord_pcs.end(), pc) != chord_pcs.end()) continue;
    options.push_back(pc);
  }
  if (options.empty()) return toward_pc;
  return rng.pick(options);
}

// Melodies alternate between a recurring sheet-level hook figure and figures
// built from the current chord, with light scale-tone ornamentation. Hook
// half bars sound the same no matter which chord is underneath, the way sung
// hooks ride over a moving progression.
void emit_slot_melody(std::vector<Note>& melody, const Rational& slot_start,
                      const ChordLabel& chord, Mode mode, const ChordLabel& stock, Rng& rng) {
  const std::vector<int> ct = chord.pitch_classes();
  auto push_plain = [&](int pc, const Rational& offset, const Rational& dur) {
    melody.push_back({place_in_register(pc), slot_start + offset, dur});
  };
  // Ornamented push: sometimes a 16th-note scale tone ends the note, the
  // way sung lines decorate long tones.
  auto push = [&](int pc, const Rational& offset, const Rational& dur) {
    if (dur >= Rational(1, 2) && rng.chance(0.30)) {
      const Rational tail(1, 4);
      push_plain(pc, offset, dur - tail);
      push_plain(rng.pick(std::vector<int>(scale_pcs(mode).begin(), scale_pcs(mode).end())),
                 offset + (dur - tail), tail);
    } else {
      push_plain(pc, offset, dur);
    }
  };
  std::vector<int> arp = ct;
  rng.shuffle(arp);

  const double roll = rng.uniform01();
  const Rational eighth(1, 2);
  if (roll < 0.60) {
    // the sheet's hook figure over the current chord: the held tones come
    // from the hook, the short one resolves into the chord of the moment
    const std::vector<int> hook = stock.pitch_classes();
    push(hook[0], Rational(0), Rational(1));
    push(hook[2], Rational(1), Rational(1, 2));
    push(hook[1], Rational(3, 2), Rational(1, 4));
    push(ct[0], Rational(7, 4), Rational(1, 4));
  } else if (roll < 0.87) {
    // full arpeggio with unequal weights; the chord is the unique best match
    push(arp[0], Rational(0), Rational(1));
    push(arp[1], Rational(1), eighth);
    push(arp[2], Rational(3, 2), eighth);
  } else if (roll < 0.95) {
    // chord tone / passing tone walk
    const int a = arp[0], b = arp[1];
    push(a, Rational(0), eighth);
    push(passing_tone(ct, b, mode, rng), eighth, eighth);
    push(b, Rational(1), Rational(3, 4));
    push(passing_tone(ct, arp[2], mode, rng), Rational(7, 4), Rational(1, 4));
  } else {
    // dotted quarter then eighth rest
    push(arp[0], Rational(0), Rational(3, 2));
  }
}

}  // namespace

std::vector<LeadSheet> generate_synthetic_corpus(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_synthetic_corpus: n must be >= 1");
  Rng rng(seed);
  std::vector<LeadSheet> out;
  out.reserve(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    LeadSheet s;
    s.id = "synth-" + std::to_string(i);
    // Two lead-sheet samples per synthetic song, as real corpora have.
    s.song_id = "song-" + std::to_string(i / 2);
    const Mode mode = i % 2 == 0 ? Mode::Major : Mode::Minor;
    s.key_mode = mode == Mode::Major ? KeyMode::CMajor : KeyMode::CMinor;
    // section-sized sheets; the narrow range keeps per-sheet chord entropy
    // in a tight band
    s.num_bars = 8 + 2 * static_cast<int>(rng.below(3));
    // the hook figure the whole sheet keeps returning to
    const ChordLabel stock = degree_label(rng.chance(0.6) ? 0 : 5, mode);  // I or vi

    const int slots = 2 * s.num_bars;
    int degree = 0;
    for (int m = 0; m < slots; ++m) {
      const bool new_bar = m % 2 == 0;
      if (m > 0 && (new_bar || rng.chance(0.35)))
        degree = next_degree(degree, stock, mode, rng);
      // Cadence: close on V -> I most of the time.
      if (m == slots - 2 && rng.chance(0.7)) degree = 4;
      if (m == slots - 1 && rng.chance(0.7)) degree = 0;

      if (rng.chance(0.09)) {
        s.chords.push_back(ChordLabel::no_chord());  // rested half bar
        continue;
      }
      const ChordLabel chord = degree_label(degree, mode);
      s.chords.push_back(chord);
      emit_slot_melody(s.melody, Rational(2 * m), chord, mode, stock, rng);
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string quality_string_for(ChordQuality q, Mode mode, int degree_semitones, Rng& rng) {
  switch (q) {
    case ChordQuality::Major: {
      std::vector<std::string> opts = {"maj", "maj7", "7", "6", "add9", "M"};
      if (degree_is_major_functioned(degree_semitones, mode)) opts.push_back("sus4");
      return rng.pick(opts);
    }
    case ChordQuality::Minor: {
      std::vector<std::string> opts = {"m", "min", "min7", "m7", "madd9"};
      if (!degree_is_major_functioned(degree_semitones, mode)) opts.push_back("sus2");
      return rng.pick(opts);
    }
    case ChordQuality::Diminished: {
      std::vector<std::string> opts = {"dim", "dim7", "m7b5"};
      return rng.pick(opts);
    }
    case ChordQuality::Augmented: {
      std::vector<std::string> opts = {"aug", "aug7"};
      return rng.pick(opts);
    }
  }
  return "maj";
}

}  // namespace

std::vector<RawLeadSheet> generate_synthetic_raw_corpus(int n, std::uint64_t seed) {
  const std::vector<LeadSheet> processed = generate_synthetic_corpus(n, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<RawLeadSheet> out;
  out.reserve(processed.size());

  for (const LeadSheet& p : processed) {
    const int shift = static_cast<int>(rng.below(12));
    RawLeadSheet raw;
    raw.id = p.id;
    raw.song_id = p.song_id;
    raw.key.tonic = PitchClass(shift);
    raw.key.mode = p.key_mode == KeyMode::CMajor ? Mode::Major : Mode::Minor;
    raw.num_bars = p.num_bars;
    for (const Note& note : p.melody) {
      Note shifted = note;
      if (shifted.pitch) shifted.pitch = *shifted.pitch + shift;
      raw.melody.push_back(shifted);
    }

    // Merge consecutive identical labels into one timed event with a rich
    // quality spelling; N.C. slots stay silent.
    int m = 0;
    const int slots = p.num_slots();
    while (m < slots) {
      const ChordLabel label = p.chords[static_cast<std::size_t>(m)];
      int run = 1;
      while (m + run < slots && p.chords[static_cast<std::size_t>(m + run)] == label) ++run;
      if (!label.is_no_chord()) {
        RawChord rc;
        rc.root = label.root().shifted(shift);
        const int degree = (rc.root.value - raw.key.tonic.value + 12) % 12;
        rc.quality = quality_string_for(label.quality(), raw.key.mode, degree, rng);
        if (rng.chance(0.2)) rc.extensions.push_back("add9");
        rc.inversion = static_cast<int>(rng.below(3));
        rc.onset = Rational(2 * m);
        rc.duration = Rational(2 * run);
        if (rng.chance(0.15) && run > 0) {
          // late entry; the slot majority is unchanged
          rc.onset = rc.onset + Rational(1, 4);
          rc.duration = rc.duration - Rational(1, 4);
        }
        raw.chords.push_back(std::move(rc));
      }
      m += run;
    }
    out.push_back(std::move(raw));
  }
  return out;
}

// --- Raw corpus I/O --------------------------------------------------------

namespace {

Rational parse_beats_raw(const json& j, const std::string& origin, int record,
                         const std::string& field) {
  try {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_string()) return Rational::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw SchemaError(origin, record, field, e.what());
  }
  throw SchemaError(origin, record, field, "expected rational string \"p/q\"");
}

RawLeadSheet raw_from_json(const json& rec, const std::string& origin, int index) {
  RawLeadSheet raw;
  for (const char* key : {"id", "song_id", "num_bars", "melody", "chords"})
    if (!rec.contains(key)) throw SchemaError(origin, index, key, "missing");
  raw.id = rec.at("id").get<std::string>();
  raw.song_id = rec.at("song_id").get<std::string>();
  raw.num_bars = rec.at("num_bars").get<int>();

  if (!rec.contains("key")) throw SchemaError(origin, index, "key", "missing");
  const json& kj = rec.at("key");
  if (!kj.contains("tonic") || !kj.contains("mode"))
    throw SchemaError(origin, index, "key", "needs tonic and mode");
  const int tonic = kj.at("tonic").get<int>();
  if (tonic < 0 || tonic > 11) throw SchemaError(origin, index, "key.tonic", "outside [0,11]");
  raw.key.tonic = PitchClass(tonic);
  const std::string mode = kj.at("mode").get<std::string>();
  if (mode == "Major") raw.key.mode = Mode::Major;
  else if (mode == "Minor") raw.key.mode = Mode::Minor;
  else throw SchemaError(origin, index, "key.mode", "expected \"Major\" or \"Minor\"");

  for (const json& nj : rec.at("melody")) {
    Note n;
    if (nj.at("pitch").is_null()) n.pitch.reset();
    else n.pitch = nj.at("pitch").get<int>();
    n.onset = parse_beats_raw(nj.at("onset"), origin, index, "melody.onset");
    n.duration = parse_beats_raw(nj.at("duration"), origin, index, "melody.duration");
    raw.melody.push_back(n);
  }

  Rational prev_end(0);
  for (const json& cj : rec.at("chords")) {
    RawChord c;
    if (!cj.contains("root") || !cj.contains("quality"))
      throw SchemaError(origin, index, "chords", "each chord needs root and quality");
    const int root = cj.at("root").get<int>();
    if (root < 0 || root > 11) throw SchemaError(origin, index, "chords.root", "outside [0,11]");
    c.root = PitchClass(root);
    c.quality = cj.at("quality").get<std::string>();
    if (cj.contains("extensions"))
      c.extensions = cj.at("extensions").get<std::vector<std::string>>();
    if (cj.contains("inversion")) c.inversion = cj.at("inversion").get<int>();
    c.onset = parse_beats_raw(cj.at("onset"), origin, index, "chords.onset");
    c.duration = parse_beats_raw(cj.at("duration"), origin, index, "chords.duration");
    if (c.onset < prev_end)
      throw SchemaError(origin, index, "chords", "events overlap or are out of order");
    if (c.onset < Rational(0) || c.end() > Rational(4 * raw.num_bars))
      throw SchemaError(origin, index, "chords", "event outside [0,4T) beats");
    prev_end = c.end();
    raw.chords.push_back(std::move(c));
  }
  return raw;
}

// Already-processed records lift trivially into the raw shape.
RawLeadSheet raw_from_processed(const LeadSheet& sheet) {
  RawLeadSheet raw;
  raw.id = sheet.id;
  raw.song_id = sheet.song_id;
  raw.key.tonic = PitchClass(0);
  raw.key.mode = sheet.key_mode == KeyMode::CMajor ? Mode::Major : Mode::Minor;
  raw.num_bars = sheet.num_bars;
  raw.melody = sheet.melody;
  static const char* kQualityName[4] = {"maj", "min", "dim", "aug"};
  for (int m = 0; m < sheet.num_slots(); ++m) {
    const ChordLabel& c = sheet.chords[static_cast<std::size_t>(m)];
    if (c.is_no_chord()) continue;
    RawChord rc;
    rc.root = c.root();
    rc.quality = kQualityName[static_cast<int>(c.quality())];
    rc.onset = Rational(2 * m);
    rc.duration = Rational(2);
    raw.chords.push_back(std::move(rc));
  }
  return raw;
}

}  // namespace

std::vector<RawLeadSheet> read_raw_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw SchemaError(path, -1, "", e.what());
  }
  if (!root.is_array()) throw SchemaError(path, -1, "", "top level must be an array");

  std::vector<RawLeadSheet> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& rec = root[i];
    if (rec.contains("key_mode")) {
      // processed-format record
      const std::vector<LeadSheet> one =
          corpus_from_json(json::array({rec}).dump(), path + " record " + std::to_string(i));
      out.push_back(raw_from_processed(one.front()));
    } else {
      out.push_back(raw_from_json(rec, path, static_cast<int>(i)));
    }
  }
  return out;
}

void write_raw_corpus(const std::vector<RawLeadSheet>& sheets, const std::string& path) {
  json arr = json::array();
  for (const RawLeadSheet& s : sheets) {
    json rec;
    rec["id"] = s.id;
    rec["song_id"] = s.song_id;
    rec["key"] = {{"tonic", s.key.tonic.value},
                  {"mode", s.key.mode == Mode::Major ? "Major" : "Minor"}};
    rec["num_bars"] = s.num_bars;
    rec["melody"] = json::array();
    for (const Note& n : s.melody) {
      json nj;
      nj["pitch"] = n.pitch ? json(*n.pitch) : json(nullptr);
      nj["onset"] = n.onset.to_string();
      nj["duration"] = n.duration.to_string();
      rec["melody"].push_back(std::move(nj));
    }
    rec["chords"] = json::array();
    for (const RawChord& c : s.chords) {
      json cj;
      cj["root"] = c.root.value;
      cj["quality"] = c.quality;
      if (!c.extensions.empty()) cj["extensions"] = c.extensions;
      cj["inversion"] = c.inversion;
      cj["onset"] = c.onset.to_string();
      cj["duration"] = c.duration.to_string();
      rec["chords"].push_back(std::move(cj));
    }
    arr.push_back(std::move(rec));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << arr.dump(2) << "\n";
}

}  // namespace harmonizer
