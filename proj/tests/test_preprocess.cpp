#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "harmonizer/corpus_io.hpp"
#include "harmonizer/preprocess.hpp"
#include "helpers.hpp"

using namespace harmonizer;
using namespace harmonizer::testing;

namespace {

RawLeadSheet raw_sheet(int bars, PitchClass tonic = PitchClass(0), Mode mode = Mode::Major) {
  RawLeadSheet r;
  r.id = "raw";
  r.song_id = "raw-song";
  r.key = {tonic, mode};
  r.num_bars = bars;
  return r;
}

RawChord raw_chord(int root, const std::string& quality, const Rational& onset,
                   const Rational& duration) {
  RawChord c;
  c.root = PitchClass(root);
  c.quality = quality;
  c.onset = onset;
  c.duration = duration;
  return c;
}

// Sampling oracle for half-bar quantization: walk 1/16-beat ticks, count
// which chord sounds on each tick, majority wins with the earlier-starting
// chord on ties. Independent of the interval arithmetic under test.
ChordSequence quantize_oracle(const std::vector<TimedChord>& chords, int bars) {
  ChordSequence out;
  for (int m = 0; m < 2 * bars; ++m) {
    std::map<int, std::pair<long, Rational>> ticks;  // code -> (count, first onset)
    for (int tick = 0; tick < 32; ++tick) {
      const Rational t = Rational(2 * m) + Rational(tick, 16);
      for (const TimedChord& tc : chords) {
        if (tc.label.is_no_chord()) continue;
        if (tc.onset <= t && t < tc.end()) {
          auto [it, fresh] = ticks.try_emplace(tc.label.encode(), 0L, tc.onset);
          it->second.first++;
          if (tc.onset < it->second.second) it->second.second = tc.onset;
        }
      }
    }
    int best = -1;
    for (const auto& [code, stat] : ticks) {
      if (best < 0) { best = code; continue; }
      const auto& top = ticks.at(best);
      if (stat.first > top.first || (stat.first == top.first && stat.second < top.second))
        best = code;
    }
    out.push_back(best < 0 ? ChordLabel::no_chord() : ChordLabel::decode(best));
  }
  return out;
}

}  // namespace

TEST_CASE("rest-ratio filter uses a strict 40% threshold") {
  SUBCASE("no rests keeps") {
    RawLeadSheet r = raw_sheet(8);
    r.melody = {note(60, Rational(0), Rational(32))};
    CHECK(passes_rest_filter(r));
  }
  SUBCASE("half rests drops") {
    RawLeadSheet r = raw_sheet(10);  // 40 beats, 20 sounding
    r.melody = {note(60, Rational(0), Rational(20))};
    CHECK(rest_ratio(r) == Rational(1, 2));
    CHECK(!passes_rest_filter(r));
  }
  SUBCASE("exactly 40% keeps") {
    RawLeadSheet r = raw_sheet(10);  // 40 beats, 24 sounding -> 16/40 = 40% rest
    r.melody = {note(60, Rational(0), Rational(24))};
    CHECK(rest_ratio(r) == Rational(2, 5));
    CHECK(passes_rest_filter(r));
  }
  SUBCASE("explicit rest notes count as rest time") {
    RawLeadSheet r = raw_sheet(10);
    r.melody = {note(60, Rational(0), Rational(24))};
    r.melody.push_back({std::nullopt, Rational(24), Rational(16)});
    CHECK(rest_ratio(r) == Rational(2, 5));
  }
}

TEST_CASE("length filter keeps 4..32 bars") {
  CHECK(passes_length_filter(raw_sheet(4)));
  CHECK(passes_length_filter(raw_sheet(32)));
  CHECK(!passes_length_filter(raw_sheet(3)));
  CHECK(!passes_length_filter(raw_sheet(33)));
}

TEST_CASE("transposition to C") {
  SUBCASE("D major shifts down two semitones") {
    RawLeadSheet r = raw_sheet(4, PitchClass(2), Mode::Major);
    r.melody = {note(62, Rational(0), Rational(2))};
    const RawLeadSheet out = transpose_to_c(r);
    CHECK(*out.melody[0].pitch == 60);
    CHECK(out.key.tonic.value == 0);
  }
  SUBCASE("A minor shifts up three semitones") {
    RawLeadSheet r = raw_sheet(4, PitchClass(9), Mode::Minor);
    r.chords = {raw_chord(9, "min", Rational(0), Rational(2))};
    const RawLeadSheet out = transpose_to_c(r);
    CHECK(transposition_shift(PitchClass(9)) == 3);
    CHECK(out.chords[0].root.value == 0);
  }
  SUBCASE("C major is the identity") {
    RawLeadSheet r = raw_sheet(4, PitchClass(0), Mode::Major);
    r.melody = {note(65, Rational(0), Rational(1))};
    const RawLeadSheet out = transpose_to_c(r);
    CHECK(*out.melody[0].pitch == 65);
  }
  SUBCASE("exhaustive 12-key oracle: minimal shift, intervals preserved") {
    for (int tonic = 0; tonic < 12; ++tonic) {
      const int shift = transposition_shift(PitchClass(tonic));
      CHECK(shift >= -6);
      CHECK(shift <= 5);
      CHECK((tonic + shift) % 12 == 0);

      RawLeadSheet r = raw_sheet(4, PitchClass(tonic), Mode::Major);
      r.melody = {note(60, Rational(0), Rational(1)), note(64, Rational(1), Rational(1)),
                  note(67, Rational(2), Rational(1))};
      r.chords = {raw_chord(tonic, "maj", Rational(0), Rational(4)),
                  raw_chord((tonic + 7) % 12, "maj", Rational(4), Rational(4))};
      const RawLeadSheet out = transpose_to_c(r);
      for (std::size_t i = 1; i < r.melody.size(); ++i) {
        const int before = *r.melody[i].pitch - *r.melody[i - 1].pitch;
        const int after = *out.melody[i].pitch - *out.melody[i - 1].pitch;
        CHECK(((after - before) % 12 + 12) % 12 == 0);
      }
      const int root_interval =
          (out.chords[1].root.value - out.chords[0].root.value + 12) % 12;
      CHECK(root_interval == 7);
      CHECK(out.chords[0].root.value == 0);
    }
  }
}

TEST_CASE("chord reduction to root-position triads") {
  const RawKey c_major{PitchClass(0), Mode::Major};
  const RawKey c_minor{PitchClass(0), Mode::Minor};

  CHECK(reduce_chord(raw_chord(7, "maj7", {}, Rational(1)), c_major) == major(7));   // Gmaj7
  CHECK(reduce_chord(raw_chord(0, "maj7", {}, Rational(1)), c_major) == major(0));   // CMaj7
  CHECK(reduce_chord(raw_chord(0, "7", {}, Rational(1)), c_major) == major(0));      // C7
  CHECK(reduce_chord(raw_chord(11, "m7b5", {}, Rational(1)), c_major) == dim(11));   // B half-dim
  CHECK(reduce_chord(raw_chord(4, "aug7", {}, Rational(1)), c_major) == aug(4));
  CHECK(reduce_chord(raw_chord(2, "min9", {}, Rational(1)), c_major) == minor(2));
  CHECK(reduce_chord(raw_chord(5, "6", {}, Rational(1)), c_major) == major(5));

  SUBCASE("inversions are discarded") {
    RawChord inverted = raw_chord(0, "maj", {}, Rational(1));
    inverted.inversion = 2;
    CHECK(reduce_chord(inverted, c_major) == major(0));
  }

  SUBCASE("sus follows the scale-degree context") {
    // I, IV, V in major carry major triads
    CHECK(reduce_chord(raw_chord(0, "sus4", {}, Rational(1)), c_major) == major(0));
    CHECK(reduce_chord(raw_chord(5, "sus2", {}, Rational(1)), c_major) == major(5));
    CHECK(reduce_chord(raw_chord(7, "7sus4", {}, Rational(1)), c_major) == major(7));
    // ii and vi in major are minor-functioned
    CHECK(reduce_chord(raw_chord(2, "sus4", {}, Rational(1)), c_major) == minor(2));
    CHECK(reduce_chord(raw_chord(9, "sus2", {}, Rational(1)), c_major) == minor(9));
    // minor mode: III and VI are major-functioned, i and iv are not
    CHECK(reduce_chord(raw_chord(3, "sus4", {}, Rational(1)), c_minor) == major(3));
    CHECK(reduce_chord(raw_chord(0, "sus4", {}, Rational(1)), c_minor) == minor(0));
    CHECK(reduce_chord(raw_chord(5, "sus2", {}, Rational(1)), c_minor) == minor(5));
  }

  SUBCASE("unknown quality names the offending string") {
    CHECK_THROWS_WITH_AS(reduce_chord(raw_chord(0, "quartal", {}, Rational(1)), c_major),
                         doctest::Contains("quartal"), std::invalid_argument);
  }
}

TEST_CASE("half-bar quantization") {
  SUBCASE("one chord spanning a bar fills both slots") {
    const std::vector<TimedChord> chords = {{major(0), Rational(0), Rational(4)}};
    const ChordSequence y = quantize_harmonic_rhythm(chords, 1);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == major(0));
    CHECK(y[1] == major(0));
  }
  SUBCASE("majority of the half bar wins") {
    const std::vector<TimedChord> chords = {{major(9), Rational(0), Rational(3, 2)},
                                            {major(10), Rational(3, 2), Rational(1, 2)}};
    const ChordSequence y = quantize_harmonic_rhythm(chords, 1);
    CHECK(y[0] == major(9));
  }
  SUBCASE("exact tie goes to the earlier-starting chord") {
    const std::vector<TimedChord> chords = {{major(9), Rational(0), Rational(1)},
                                            {major(10), Rational(1), Rational(1)}};
    const ChordSequence y = quantize_harmonic_rhythm(chords, 1);
    CHECK(y[0] == major(9));
  }
  SUBCASE("empty chord track is all N.C.") {
    const ChordSequence y = quantize_harmonic_rhythm({}, 2);
    CHECK(y.size() == 4);
    for (const ChordLabel& c : y) CHECK(c.is_no_chord());
  }
  SUBCASE("matches the tick-sampling oracle on random tracks") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const int bars = 1 + static_cast<int>(rng.below(4));
      std::vector<TimedChord> chords;
      Rational cursor(0);
      while (cursor < Rational(4 * bars)) {
        const Rational len(1 + static_cast<std::int64_t>(rng.below(10)), 4);
        const Rational end = min(cursor + len, Rational(4 * bars));
        if (rng.chance(0.8)) {
          const ChordLabel label = ChordLabel::decode(1 + static_cast<int>(rng.below(48)));
          chords.push_back({label, cursor, end - cursor});
        }
        cursor = end;
      }
      CHECK(quantize_harmonic_rhythm(chords, bars) == quantize_oracle(chords, bars));
    }
  }
  SUBCASE("never outputs a label absent from the slot") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      const int bars = 1 + static_cast<int>(rng.below(3));
      std::vector<TimedChord> chords;
      Rational cursor(0);
      while (cursor < Rational(4 * bars)) {
        const Rational len(1 + static_cast<std::int64_t>(rng.below(8)), 2);
        const Rational end = min(cursor + len, Rational(4 * bars));
        chords.push_back({ChordLabel::decode(static_cast<int>(rng.below(49))), cursor,
                          end - cursor});
        cursor = end;
      }
      const ChordSequence y = quantize_harmonic_rhythm(chords, bars);
      for (int m = 0; m < 2 * bars; ++m) {
        if (y[static_cast<std::size_t>(m)].is_no_chord()) continue;
        bool sounding = false;
        for (const TimedChord& tc : chords) {
          if (tc.label != y[static_cast<std::size_t>(m)]) continue;
          const Rational lo = max(tc.onset, Rational(2 * m));
          const Rational hi = min(tc.end(), Rational(2 * m + 2));
          if (lo < hi) sounding = true;
        }
        CHECK(sounding);
      }
    }
  }
}

TEST_CASE("pipeline output always satisfies the lead-sheet invariants") {
  const auto raws = generate_synthetic_raw_corpus(60, 99);
  auto [sheets, summary] = preprocess_corpus(raws);
  CHECK(summary.input == 60);
  CHECK(summary.kept + summary.dropped_rest + summary.dropped_length == summary.input);
  CHECK(summary.kept > 0);
  for (const LeadSheet& s : sheets) {
    CHECK_NOTHROW(s.validate());
    CHECK(s.num_bars >= 4);
    CHECK(s.num_bars <= 32);
  }
}

TEST_CASE("preprocessing an already-processed corpus is a fixed point") {
  const auto raws = generate_synthetic_raw_corpus(30, 5);
  auto [sheets, summary] = preprocess_corpus(raws);
  REQUIRE(!sheets.empty());

  // lift the processed corpus back through the raw reader and preprocess again
  const std::string processed_path =
      (std::filesystem::temp_directory_path() / "processed_fixpoint.json").string();
  write_corpus(sheets, processed_path);
  const auto again_raws = read_raw_corpus(processed_path);
  auto [again, summary2] = preprocess_corpus(again_raws);
  CHECK(summary2.kept == summary.kept);
  CHECK(corpus_to_json(again) == corpus_to_json(sheets));
  std::filesystem::remove(processed_path);
}

TEST_CASE("song-aware split") {
  SUBCASE("ten distinct songs split 8/1/1") {
    std::vector<LeadSheet> sheets;
    for (int i = 0; i < 10; ++i) {
      LeadSheet s = make_sheet(4, "s" + std::to_string(i));
      s.song_id = "song" + std::to_string(i);
      sheets.push_back(s);
    }
    const SplitManifest m = split_corpus(sheets, {0.8, 0.1, 0.1}, 42);
    CHECK(m.train.size() == 8);
    CHECK(m.validation.size() == 1);
    CHECK(m.test.size() == 1);
  }
  SUBCASE("sheets sharing a song stay together") {
    std::vector<LeadSheet> sheets;
    for (int i = 0; i < 12; ++i) {
      LeadSheet s = make_sheet(4, "s" + std::to_string(i));
      s.song_id = i < 3 ? "shared" : "song" + std::to_string(i);
      sheets.push_back(s);
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SplitManifest m = split_corpus(sheets, {0.8, 0.1, 0.1}, seed);
      auto contains = [](const std::vector<std::string>& ids, const std::string& id) {
        return std::find(ids.begin(), ids.end(), id) != ids.end();
      };
      for (const auto* part : {&m.train, &m.validation, &m.test}) {
        const bool has0 = contains(*part, "s0");
        CHECK(has0 == contains(*part, "s1"));
        CHECK(has0 == contains(*part, "s2"));
      }
    }
  }
  SUBCASE("split is a partition and deterministic") {
    const auto sheets = generate_synthetic_corpus(50, 8);
    const SplitManifest a = split_corpus(sheets, {0.8, 0.1, 0.1}, 7);
    const SplitManifest b = split_corpus(sheets, {0.8, 0.1, 0.1}, 7);
    CHECK(a.to_json() == b.to_json());

    std::set<std::string> seen;
    for (const auto* part : {&a.train, &a.validation, &a.test})
      for (const std::string& id : *part) CHECK(seen.insert(id).second);
    CHECK(seen.size() == sheets.size());
  }
  SUBCASE("ratios must sum to one") {
    CHECK_THROWS_AS(split_corpus({}, {0.5, 0.1, 0.1}, 1), std::invalid_argument);
  }
  SUBCASE("manifest round trips") {
    const auto sheets = generate_synthetic_corpus(20, 3);
    const SplitManifest m = split_corpus(sheets, {0.8, 0.1, 0.1}, 11);
    const SplitManifest back = SplitManifest::from_json(m.to_json(), "mem");
    CHECK(back.seed == m.seed);
    CHECK(back.train == m.train);
    CHECK(back.validation == m.validation);
    CHECK(back.test == m.test);
  }
}

TEST_CASE("synthetic corpus contract") {
  SUBCASE("single sheet is schema-valid") {
    const auto sheets = generate_synthetic_corpus(1, 7);
    REQUIRE(sheets.size() == 1);
    CHECK_NOTHROW(sheets[0].validate());
  }
  SUBCASE("determinism") {
    const auto a = generate_synthetic_corpus(25, 123);
    const auto b = generate_synthetic_corpus(25, 123);
    CHECK(corpus_to_json(a) == corpus_to_json(b));
    const auto c = generate_synthetic_corpus(25, 124);
    CHECK(corpus_to_json(a) != corpus_to_json(c));
  }
  SUBCASE("coverage of both diatonic sets at n=1000") {
    const auto sheets = generate_synthetic_corpus(1000, 1);
    std::set<int> used;
    for (const LeadSheet& s : sheets)
      for (const ChordLabel& c : s.chords) used.insert(c.encode());
    const std::vector<ChordLabel> expected = {
        major(0), minor(2), minor(4), major(5), major(7), minor(9), dim(11),   // C major
        minor(0), dim(2),   major(3), minor(5), minor(7), major(8), major(10)  // C minor
    };
    for (const ChordLabel& c : expected) CHECK(used.count(c.encode()) == 1);
  }
  SUBCASE("both modes appear and filters pass") {
    const auto sheets = generate_synthetic_corpus(20, 55);
    bool has_major = false, has_minor = false;
    for (const LeadSheet& s : sheets) {
      has_major |= s.key_mode == KeyMode::CMajor;
      has_minor |= s.key_mode == KeyMode::CMinor;
    }
    CHECK(has_major);
    CHECK(has_minor);
  }
  SUBCASE("melodies are mostly chord tones, by sounding time") {
    const auto sheets = generate_synthetic_corpus(50, 9);
    Rational chord_tone_time(0), sounding_time(0);
    for (const LeadSheet& s : sheets) {
      for (const Note& n : s.melody) {
        if (n.is_rest()) continue;
        const int slot = static_cast<int>(n.onset.sixteenths() / 8);
        const ChordLabel& c = s.chords[static_cast<std::size_t>(slot)];
        if (c.is_no_chord()) continue;
        sounding_time = sounding_time + n.duration;
        if (c.contains(PitchClass(*n.pitch))) chord_tone_time = chord_tone_time + n.duration;
      }
    }
    const double fraction = (chord_tone_time / sounding_time).to_double();
    CHECK(fraction >= 0.68);
    CHECK(fraction <= 0.92);
  }
}

TEST_CASE("raw corpus file round trip") {
  const auto raws = generate_synthetic_raw_corpus(10, 21);
  const std::string path =
      (std::filesystem::temp_directory_path() / "raw_corpus_rt.json").string();
  write_raw_corpus(raws, path);
  const auto back = read_raw_corpus(path);
  REQUIRE(back.size() == raws.size());
  for (std::size_t i = 0; i < raws.size(); ++i) {
    CHECK(back[i].id == raws[i].id);
    CHECK(back[i].key.tonic.value == raws[i].key.tonic.value);
    CHECK(back[i].chords.size() == raws[i].chords.size());
    for (std::size_t c = 0; c < raws[i].chords.size(); ++c) {
      CHECK(back[i].chords[c].quality == raws[i].chords[c].quality);
      CHECK(back[i].chords[c].onset == raws[i].chords[c].onset);
    }
  }
  std::filesystem::remove(path);
}
