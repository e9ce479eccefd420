#include "harmonizer/template_matcher.hpp"

#include "json.hpp"

namespace harmonizer {

std::vector<ChordLabel> template_tie_set(const PitchClassProfile& pcp) {
  std::vector<ChordLabel> best;
  double best_score = -1.0;
  for (int code = 1; code < ChordLabel::kVocabularySize; ++code) {
    const ChordLabel label = ChordLabel::decode(code);
    // Dot product against a binary template: sum of the member activations,
    // in ascending pitch-class order so equal tie sets score bit-identically.
    double score = 0.0;
    for (int pc : label.pitch_classes()) score += pcp[pc];
    if (score > best_score) {
      best_score = score;
      best.clear();
      best.push_back(label);
    } else if (score == best_score) {
      best.push_back(label);
    }
  }
  return best;
}

ChordLabel match_half_bar(const PitchClassProfile& pcp, Rng& rng) {
  if (pcp.all_zero()) return ChordLabel::no_chord();
  const std::vector<ChordLabel> ties = template_tie_set(pcp);
  return ties[static_cast<std::size_t>(rng.below(ties.size()))];
}

ChordSequence template_harmonize(const LeadSheet& sheet, Rng& rng) {
  ChordSequence out;
  out.reserve(static_cast<std::size_t>(sheet.num_slots()));
  for (int m = 0; m < sheet.num_slots(); ++m)
    out.push_back(match_half_bar(melody_pcp(sheet, m, Resolution::HalfBar), rng));
  return out;
}

ChordSequence template_harmonize(const TemplateMatcherModel& model, const LeadSheet& sheet) {
  Rng rng(model.seed ^ fnv1a64(sheet.id));
  return template_harmonize(sheet, rng);
}

std::string TemplateMatcherModel::to_json() const {
  nlohmann::json j;
  j["type"] = "template";
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

TemplateMatcherModel TemplateMatcherModel::from_json(const std::string& text,
                                                     const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  if (!j.contains("type") || j.at("type") != "template")
    throw std::runtime_error(origin + ": not a template checkpoint");
  TemplateMatcherModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace harmonizer
