#ifndef HARMONIZER_PREPROCESS_HPP
#define HARMONIZER_PREPROCESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "harmonizer/corpus_io.hpp"
#include "harmonizer/leadsheet.hpp"
#include "harmonizer/rng.hpp"

namespace harmonizer {

enum class Mode { Major, Minor };

struct RawKey {
  PitchClass tonic;
  Mode mode = Mode::Major;
};

// A chord event as found in a raw corpus: literal quality string, optional
// extension list, inversion, and free metric placement.
struct RawChord {
  PitchClass root;
  std::string quality;
  std::vector<std::string> extensions;
  int inversion = 0;
  Rational onset;
  Rational duration;

  Rational end() const { return onset + duration; }
};

struct RawLeadSheet {
  std::string id;
  std::string song_id;
  RawKey key;
  int num_bars = 0;
  std::vector<Note> melody;
  std::vector<RawChord> chords;  // sorted by onset, non-overlapping
};

// --- Individual pipeline stages ---------------------------------------

// Fraction of the sheet's 4T beats during which no melody note sounds.
Rational rest_ratio(const RawLeadSheet& sheet);

// Drop melodies comprising more than 40% rests (strict inequality).
bool passes_rest_filter(const RawLeadSheet& sheet);

// Keep 4 <= T <= 32.
bool passes_length_filter(const RawLeadSheet& sheet);

// Semitone shift moving `tonic` to C, minimal in [-6, +5].
int transposition_shift(PitchClass tonic);

RawLeadSheet transpose_to_c(const RawLeadSheet& sheet);

// Root-position triad reduction. Sus qualities resolve to Major or Minor by
// the chord's scale-degree context in `key`. Unknown quality strings throw.
ChordLabel reduce_chord(const RawChord& chord, const RawKey& key);

struct TimedChord {
  ChordLabel label;
  Rational onset;
  Rational duration;

  Rational end() const { return onset + duration; }
};

// Half-bar grid assignment: each slot takes the label sounding longest in
// it, ties to the earlier-starting chord; silent slots get N.C.
ChordSequence quantize_harmonic_rhythm(const std::vector<TimedChord>& chords, int num_bars);

// --- Whole-pipeline driver ---------------------------------------------

enum class DropReason { Kept, RestRatio, Length };

struct PreprocessResult {
  std::optional<LeadSheet> sheet;
  DropReason reason = DropReason::Kept;
};

PreprocessResult preprocess_sheet(const RawLeadSheet& raw);

struct PreprocessSummary {
  int input = 0;
  int kept = 0;
  int dropped_rest = 0;
  int dropped_length = 0;
};

std::pair<std::vector<LeadSheet>, PreprocessSummary> preprocess_corpus(
    const std::vector<RawLeadSheet>& raws);

// --- Split -------------------------------------------------------------

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static SplitManifest from_json(const std::string& text, const std::string& origin);
  void save(const std::string& path) const;
  static SplitManifest load(const std::string& path);
};

// Deterministic song-aware split: sheets sharing a song_id always land in
// the same partition; achieved sizes are within one song group of targets.
SplitManifest split_corpus(const std::vector<LeadSheet>& sheets,
                           const std::array<double, 3>& ratios, std::uint64_t seed);

std::vector<LeadSheet> select_split(const std::vector<LeadSheet>& sheets,
                                    const std::vector<std::string>& ids);

// --- Synthetic corpora --------------------------------------------------

// Diatonic harmonizations with mostly-chord-tone melodies in both modes;
// stands in for the non-distributable corpus in tests and demos.
std::vector<LeadSheet> generate_synthetic_corpus(int n, std::uint64_t seed);

// Same material re-expressed as a raw corpus: random keys, rich quality
// strings, merged chord events. Exercises the full reduction pipeline.
std::vector<RawLeadSheet> generate_synthetic_raw_corpus(int n, std::uint64_t seed);

// Raw corpus I/O. Files holding already-processed records are accepted and
// lifted into the raw representation, which makes preprocessing idempotent.
std::vector<RawLeadSheet> read_raw_corpus(const std::string& path);
void write_raw_corpus(const std::vector<RawLeadSheet>& sheets, const std::string& path);

}  // namespace harmonizer

#endif
