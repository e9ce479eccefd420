#include "harmonizer/midi_export.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace harmonizer {

namespace {

constexpr int kTicksPerQuarter = 480;
constexpr int kTicksPerSixteenth = kTicksPerQuarter / 4;

struct Event {
  std::int64_t tick;
  int order;  // note-offs before note-ons at the same tick
  std::vector<std::uint8_t> bytes;
};

void push_vlq(std::vector<std::uint8_t>& out, std::uint32_t value) {
  std::uint8_t buf[4];
  int n = 0;
  do {
    buf[n++] = static_cast<std::uint8_t>(value & 0x7f);
    value >>= 7;
  } while (value > 0);
  for (int i = n - 1; i >= 0; --i)
    out.push_back(static_cast<std::uint8_t>(buf[i] | (i > 0 ? 0x80 : 0x00)));
}

std::int64_t ticks(const Rational& beats) { return beats.sixteenths() * kTicksPerSixteenth; }

void add_note(std::vector<Event>& events, int channel, int pitch, std::int64_t on,
              std::int64_t off, std::uint8_t velocity) {
  events.push_back({on, 1,
                    {static_cast<std::uint8_t>(0x90 | channel), static_cast<std::uint8_t>(pitch),
                     velocity}});
  events.push_back({off, 0,
                    {static_cast<std::uint8_t>(0x80 | channel), static_cast<std::uint8_t>(pitch),
                     0}});
}

}  // namespace

void write_midi(const LeadSheet& sheet, const std::string& path) {
  std::vector<Event> events;

  for (const Note& n : sheet.melody) {
    if (n.is_rest()) continue;
    add_note(events, 0, *n.pitch, ticks(n.onset), ticks(n.end()), 96);
  }

  // Block triads an octave below middle C so they sit under the melody.
  for (int m = 0; m < sheet.num_slots() && m < static_cast<int>(sheet.chords.size()); ++m) {
    const ChordLabel& c = sheet.chords[static_cast<std::size_t>(m)];
    if (c.is_no_chord()) continue;
    const std::int64_t on = static_cast<std::int64_t>(m) * 8 * kTicksPerSixteenth;
    const std::int64_t off = on + 8 * kTicksPerSixteenth;
    const int root = 48 + c.root().value;
    for (int pc : c.pitch_classes()) {
      int pitch = 48 + pc;
      if (pitch < root) pitch += 12;
      add_note(events, 1, pitch, on, off, 72);
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });

  std::vector<std::uint8_t> track;
  // Tempo meta: 120 bpm.
  push_vlq(track, 0);
  for (std::uint8_t b : {0xff, 0x51, 0x03, 0x07, 0xa1, 0x20}) track.push_back(b);
  std::int64_t cursor = 0;
  for (const Event& e : events) {
    push_vlq(track, static_cast<std::uint32_t>(e.tick - cursor));
    cursor = e.tick;
    track.insert(track.end(), e.bytes.begin(), e.bytes.end());
  }
  push_vlq(track, 0);
  for (std::uint8_t b : {0xff, 0x2f, 0x00}) track.push_back(b);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  auto put16 = [&](std::uint16_t v) {
    out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  };
  auto put32 = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.put(static_cast<char>((v >> s) & 0xff));
  };
  out.write("MThd", 4);
  put32(6);
  put16(0);  // format 0
  put16(1);  // one track
  put16(kTicksPerQuarter);
  out.write("MTrk", 4);
  put32(static_cast<std::uint32_t>(track.size()));
  out.write(reinterpret_cast<const char*>(track.data()), static_cast<std::streamsize>(track.size()));
}

}  // namespace harmonizer
