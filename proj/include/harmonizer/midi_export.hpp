#ifndef HARMONIZER_MIDI_EXPORT_HPP
#define HARMONIZER_MIDI_EXPORT_HPP

#include <string>

#include "harmonizer/leadsheet.hpp"

namespace harmonizer {

// Listening aid only: format-0 standard MIDI file with the melody on channel
// 0 and block triads (half-bar durations) on channel 1.
void write_midi(const LeadSheet& sheet, const std::string& path);

}  // namespace harmonizer

#endif
