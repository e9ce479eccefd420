#ifndef HARMONIZER_TEMPLATE_MATCHER_HPP
#define HARMONIZER_TEMPLATE_MATCHER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "harmonizer/leadsheet.hpp"
#include "harmonizer/rng.hpp"

namespace harmonizer {

// Stateless template matcher: each half bar is scored against the 48 triad
// templates by dot product, independently of its neighbors. The seed only
// drives tie-breaking.
struct TemplateMatcherModel {
  std::uint64_t seed = 0;

  std::string to_json() const;
  static TemplateMatcherModel from_json(const std::string& text, const std::string& origin);
};

// Labels achieving the maximal dot product against `pcp`. N.C. never
// competes; it is reserved for fully rested segments.
std::vector<ChordLabel> template_tie_set(const PitchClassProfile& pcp);

// Argmax with uniform tie-breaking; all-zero PCPs return N.C. directly.
ChordLabel match_half_bar(const PitchClassProfile& pcp, Rng& rng);

// Per-slot matching over a whole sheet with a caller-supplied RNG.
ChordSequence template_harmonize(const LeadSheet& sheet, Rng& rng);

// Convenience wrapper deriving the RNG from (model seed, sheet id), so
// corpus iteration order cannot perturb any sheet's output.
ChordSequence template_harmonize(const TemplateMatcherModel& model, const LeadSheet& sheet);

}  // namespace harmonizer

#endif
