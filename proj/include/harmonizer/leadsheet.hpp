#ifndef HARMONIZER_LEADSHEET_HPP
#define HARMONIZER_LEADSHEET_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "harmonizer/chord.hpp"
#include "harmonizer/rational.hpp"

namespace harmonizer {

// A melody event. pitch is empty for an explicit rest. Times are in
// quarter-note beats on the 16th-note grid.
struct Note {
  std::optional<int> pitch;
  Rational onset;
  Rational duration;

  bool is_rest() const { return !pitch.has_value(); }
  Rational end() const { return onset + duration; }
};

enum class KeyMode { CMajor, CMinor };

inline std::string key_mode_name(KeyMode m) { return m == KeyMode::CMajor ? "CMajor" : "CMinor"; }

// 12-vector of per-pitch-class activation in [0,1].
struct PitchClassProfile {
  std::array<double, 12> values{};

  double& operator[](int k) { return values[static_cast<std::size_t>(k)]; }
  double operator[](int k) const { return values[static_cast<std::size_t>(k)]; }

  bool all_zero() const {
    for (double v : values)
      if (v != 0.0) return false;
    return true;
  }

  double l1_norm() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }

  PitchClassProfile rotated(int semitones) const {
    PitchClassProfile out;
    for (int k = 0; k < 12; ++k) out[(k + (semitones % 12) + 12) % 12] = values[static_cast<std::size_t>(k)];
    return out;
  }
};

// Binary triad template: ones at the chord's pitch classes, all zeros for N.C.
inline PitchClassProfile chord_template_pcp(const ChordLabel& label) {
  PitchClassProfile p;
  for (int pc : label.pitch_classes()) p[pc] = 1.0;
  return p;
}

// A melody with an aligned half-bar chord sequence; the unit of every corpus.
// T bars of 4/4, M = 2T chord slots, melody confined to [0, 4T) beats.
struct LeadSheet {
  std::string id;
  std::string song_id;
  KeyMode key_mode = KeyMode::CMajor;
  int num_bars = 0;
  std::vector<Note> melody;
  ChordSequence chords;

  int num_slots() const { return 2 * num_bars; }

  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;

  LeadSheet transposed(int semitones) const;
};

enum class Resolution { HalfBar, Sixteenth };

// Per-segment melody PCP: element k is the fraction of the segment during
// which pitch class k sounds. Segments are half bars (2 beats) or single
// 16th notes (1/4 beat); notes crossing a boundary contribute only their
// overlap with the segment.
PitchClassProfile melody_pcp(const LeadSheet& sheet, int segment_index, Resolution resolution);

}  // namespace harmonizer

#endif
