#ifndef HARMONIZER_TEST_HELPERS_HPP
#define HARMONIZER_TEST_HELPERS_HPP

#include <string>
#include <vector>

#include "harmonizer/leadsheet.hpp"

namespace harmonizer::testing {

// A 4-bar sheet skeleton with all-N.C. chords; tests fill in what they need.
inline LeadSheet make_sheet(int bars = 4, const std::string& id = "t") {
  LeadSheet s;
  s.id = id;
  s.song_id = id;
  s.key_mode = KeyMode::CMajor;
  s.num_bars = bars;
  s.chords.assign(static_cast<std::size_t>(2 * bars), ChordLabel::no_chord());
  return s;
}

inline Note note(int pitch, const Rational& onset, const Rational& duration) {
  return Note{pitch, onset, duration};
}

inline ChordLabel major(int root) { return ChordLabel::triad(PitchClass(root), ChordQuality::Major); }
inline ChordLabel minor(int root) { return ChordLabel::triad(PitchClass(root), ChordQuality::Minor); }
inline ChordLabel dim(int root) { return ChordLabel::triad(PitchClass(root), ChordQuality::Diminished); }
inline ChordLabel aug(int root) { return ChordLabel::triad(PitchClass(root), ChordQuality::Augmented); }

}  // namespace harmonizer::testing

#endif
