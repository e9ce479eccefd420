#ifndef HARMONIZER_CHORD_HPP
#define HARMONIZER_CHORD_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace harmonizer {

// Pitch class 0..11, C=0 .. B=11.
struct PitchClass {
  int value = 0;

  PitchClass() = default;
  explicit PitchClass(int v) : value(((v % 12) + 12) % 12) {}

  PitchClass shifted(int semitones) const { return PitchClass(value + semitones); }
  bool operator==(const PitchClass& o) const { return value == o.value; }
  bool operator!=(const PitchClass& o) const { return value != o.value; }
};

enum class ChordQuality : int { Major = 0, Minor = 1, Diminished = 2, Augmented = 3 };

enum class ChordFunction : int { Tonal = 0, Dominant = 1, Others = 2 };

// One of the 49 labels: 12 roots x 4 triad qualities, plus N.C.
// Integer encoding: N.C. <-> 0, triad <-> 1 + root*4 + quality.
class ChordLabel {
 public:
  static constexpr int kVocabularySize = 49;

  ChordLabel() : is_chord_(false), root_(0), quality_(ChordQuality::Major) {}

  static ChordLabel no_chord() { return ChordLabel(); }
  static ChordLabel triad(PitchClass root, ChordQuality quality) {
    ChordLabel c;
    c.is_chord_ = true;
    c.root_ = root;
    c.quality_ = quality;
    return c;
  }

  bool is_no_chord() const { return !is_chord_; }
  PitchClass root() const { return root_; }
  ChordQuality quality() const { return quality_; }

  int encode() const {
    return is_chord_ ? 1 + root_.value * 4 + static_cast<int>(quality_) : 0;
  }

  static ChordLabel decode(int index) {
    if (index < 0 || index >= kVocabularySize)
      throw std::out_of_range("ChordLabel: index " + std::to_string(index) + " outside [0,48]");
    if (index == 0) return no_chord();
    return triad(PitchClass((index - 1) / 4), static_cast<ChordQuality>((index - 1) % 4));
  }

  // Pitch-class set: Major {r,r+4,r+7}, Minor {r,r+3,r+7},
  // Diminished {r,r+3,r+6}, Augmented {r,r+4,r+8}; N.C. is empty.
  std::vector<int> pitch_classes() const {
    if (!is_chord_) return {};
    static constexpr std::array<std::array<int, 3>, 4> kIntervals = {{
        {0, 4, 7}, {0, 3, 7}, {0, 3, 6}, {0, 4, 8}}};
    const auto& iv = kIntervals[static_cast<int>(quality_)];
    return {(root_.value + iv[0]) % 12, (root_.value + iv[1]) % 12, (root_.value + iv[2]) % 12};
  }

  bool contains(PitchClass pc) const {
    for (int c : pitch_classes())
      if (c == pc.value) return true;
    return false;
  }

  ChordLabel transposed(int semitones) const {
    return is_chord_ ? triad(root_.shifted(semitones), quality_) : no_chord();
  }

  std::string name() const {
    if (!is_chord_) return "N.C.";
    static const char* kRoots[12] = {"C", "C#", "D", "D#", "E", "F",
                                     "F#", "G", "G#", "A", "A#", "B"};
    static const char* kSuffix[4] = {"", "m", "dim", "aug"};
    return std::string(kRoots[root_.value]) + kSuffix[static_cast<int>(quality_)];
  }

  bool operator==(const ChordLabel& o) const { return encode() == o.encode(); }
  bool operator!=(const ChordLabel& o) const { return encode() != o.encode(); }
  bool operator<(const ChordLabel& o) const { return encode() < o.encode(); }

 private:
  bool is_chord_;
  PitchClass root_;
  ChordQuality quality_;
};

using ChordSequence = std::vector<ChordLabel>;

// Function map for pieces normalized to C major / c minor: C, Am, Cm, A are
// tonal; G and B diminished are dominant; everything else (N.C. included)
// falls in the others/subdominant group.
inline ChordFunction chord_function(const ChordLabel& label) {
  if (label.is_no_chord()) return ChordFunction::Others;
  const int r = label.root().value;
  const ChordQuality q = label.quality();
  if ((r == 0 && q == ChordQuality::Major) || (r == 9 && q == ChordQuality::Minor) ||
      (r == 0 && q == ChordQuality::Minor) || (r == 9 && q == ChordQuality::Major))
    return ChordFunction::Tonal;
  if ((r == 7 && q == ChordQuality::Major) || (r == 11 && q == ChordQuality::Diminished))
    return ChordFunction::Dominant;
  return ChordFunction::Others;
}

inline int encode_chord(const ChordLabel& label) { return label.encode(); }
inline ChordLabel decode_chord(int index) { return ChordLabel::decode(index); }

}  // namespace harmonizer

#endif
