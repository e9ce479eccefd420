#include "harmonizer/leadsheet.hpp"

#include <stdexcept>

namespace harmonizer {

namespace {

[[noreturn]] void fail(const LeadSheet& sheet, const std::string& what) {
  throw std::invalid_argument("LeadSheet '" + sheet.id + "': " + what);
}

}  // namespace

void LeadSheet::validate() const {
  if (num_bars < 4 || num_bars > 32)
    fail(*this, "num_bars " + std::to_string(num_bars) + " outside [4,32]");
  if (static_cast<int>(chords.size()) != num_slots())
    fail(*this, "chords length " + std::to_string(chords.size()) + " != 2*T = " +
                    std::to_string(num_slots()));
  const Rational total_beats(4 * num_bars);
  Rational prev_end(0);
  for (std::size_t i = 0; i < melody.size(); ++i) {
    const Note& n = melody[i];
    const std::string at = "note " + std::to_string(i);
    if (n.pitch && (*n.pitch < 0 || *n.pitch > 127)) fail(*this, at + " pitch outside [0,127]");
    if (n.duration <= Rational(0)) fail(*this, at + " nonpositive duration");
    if (n.onset < Rational(0) || n.end() > total_beats) fail(*this, at + " outside [0,4T) beats");
    if (!n.onset.on_sixteenth_grid() || !n.duration.on_sixteenth_grid())
      fail(*this, at + " off the 16th-note grid");
    if (n.onset < prev_end) fail(*this, at + " overlaps previous note or is out of order");
    prev_end = n.end();
  }
}

LeadSheet LeadSheet::transposed(int semitones) const {
  LeadSheet out = *this;
  for (Note& n : out.melody) {
    if (!n.pitch) continue;
    int p = *n.pitch + semitones;
    while (p < 0) p += 12;
    while (p > 127) p -= 12;
    n.pitch = p;
  }
  for (ChordLabel& c : out.chords) c = c.transposed(semitones);
  return out;
}

PitchClassProfile melody_pcp(const LeadSheet& sheet, int segment_index, Resolution resolution) {
  const bool half_bar = resolution == Resolution::HalfBar;
  const int n_segments = half_bar ? sheet.num_slots() : 8 * sheet.num_slots();
  if (segment_index < 0 || segment_index >= n_segments)
    throw std::out_of_range("melody_pcp: segment_index " + std::to_string(segment_index) +
                            " outside [0," + std::to_string(n_segments) + ")");

  const Rational seg_len = half_bar ? Rational(2) : Rational(1, 4);
  const Rational seg_start = seg_len * Rational(segment_index);
  const Rational seg_end = seg_start + seg_len;

  // Exact rational accumulation; the division to double happens once per class.
  std::array<Rational, 12> sounding{};
  for (const Note& n : sheet.melody) {
    if (n.is_rest()) continue;
    const Rational lo = max(n.onset, seg_start);
    const Rational hi = min(n.end(), seg_end);
    if (lo < hi) sounding[static_cast<std::size_t>(*n.pitch % 12)] = sounding[static_cast<std::size_t>(*n.pitch % 12)] + (hi - lo);
  }

  PitchClassProfile p;
  for (int k = 0; k < 12; ++k) p[k] = (sounding[static_cast<std::size_t>(k)] / seg_len).to_double();
  return p;
}

}  // namespace harmonizer
