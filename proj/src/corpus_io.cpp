#include "harmonizer/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace harmonizer {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Rational parse_beats(const json& j, const std::string& origin, int record,
                     const std::string& field) {
  try {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_string()) return Rational::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    throw SchemaError(origin, record, field, e.what());
  }
  throw SchemaError(origin, record, field, "expected rational string \"p/q\"");
}

json note_to_json(const Note& n) {
  json j;
  j["pitch"] = n.pitch ? json(*n.pitch) : json(nullptr);
  j["onset"] = n.onset.to_string();
  j["duration"] = n.duration.to_string();
  return j;
}

LeadSheet sheet_from_json(const json& rec, const std::string& origin, int index) {
  auto require = [&](const char* key) -> const json& {
    if (!rec.contains(key)) throw SchemaError(origin, index, key, "missing");
    return rec.at(key);
  };

  LeadSheet s;
  if (!require("id").is_string()) throw SchemaError(origin, index, "id", "expected string");
  s.id = rec.at("id").get<std::string>();
  if (!require("song_id").is_string())
    throw SchemaError(origin, index, "song_id", "expected string");
  s.song_id = rec.at("song_id").get<std::string>();

  const std::string mode = require("key_mode").is_string() ? rec.at("key_mode").get<std::string>() : "";
  if (mode == "CMajor") s.key_mode = KeyMode::CMajor;
  else if (mode == "CMinor") s.key_mode = KeyMode::CMinor;
  else throw SchemaError(origin, index, "key_mode", "expected \"CMajor\" or \"CMinor\"");

  if (!require("num_bars").is_number_integer())
    throw SchemaError(origin, index, "num_bars", "expected integer");
  s.num_bars = rec.at("num_bars").get<int>();

  if (!require("melody").is_array()) throw SchemaError(origin, index, "melody", "expected array");
  for (const json& nj : rec.at("melody")) {
    Note n;
    if (!nj.contains("pitch")) throw SchemaError(origin, index, "melody.pitch", "missing");
    if (nj.at("pitch").is_null()) n.pitch.reset();
    else if (nj.at("pitch").is_number_integer()) n.pitch = nj.at("pitch").get<int>();
    else throw SchemaError(origin, index, "melody.pitch", "expected int or null");
    if (!nj.contains("onset")) throw SchemaError(origin, index, "melody.onset", "missing");
    n.onset = parse_beats(nj.at("onset"), origin, index, "melody.onset");
    if (!nj.contains("duration")) throw SchemaError(origin, index, "melody.duration", "missing");
    n.duration = parse_beats(nj.at("duration"), origin, index, "melody.duration");
    s.melody.push_back(n);
  }

  if (!require("chords").is_array()) throw SchemaError(origin, index, "chords", "expected array");
  for (const json& cj : rec.at("chords")) {
    if (!cj.is_number_integer())
      throw SchemaError(origin, index, "chords", "expected integer chord encodings");
    const int code = cj.get<int>();
    if (code < 0 || code >= ChordLabel::kVocabularySize)
      throw SchemaError(origin, index, "chords",
                        "encoding " + std::to_string(code) + " outside [0,48]");
    s.chords.push_back(ChordLabel::decode(code));
  }

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(origin, index, "", e.what());
  }
  return s;
}

}  // namespace

std::string corpus_to_json(const std::vector<LeadSheet>& sheets) {
  json arr = json::array();
  for (const LeadSheet& s : sheets) {
    json rec;
    rec["id"] = s.id;
    rec["song_id"] = s.song_id;
    rec["key_mode"] = key_mode_name(s.key_mode);
    rec["num_bars"] = s.num_bars;
    rec["melody"] = json::array();
    for (const Note& n : s.melody) rec["melody"].push_back(note_to_json(n));
    rec["chords"] = json::array();
    for (const ChordLabel& c : s.chords) rec["chords"].push_back(c.encode());
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

std::vector<LeadSheet> corpus_from_json(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin, -1, "", e.what());
  }
  if (!root.is_array()) throw SchemaError(origin, -1, "", "top level must be an array");
  std::vector<LeadSheet> sheets;
  sheets.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i)
    sheets.push_back(sheet_from_json(root[i], origin, static_cast<int>(i)));
  return sheets;
}

std::vector<LeadSheet> read_corpus(const std::string& path) {
  return corpus_from_json(read_file(path), path);
}

void write_corpus(const std::vector<LeadSheet>& sheets, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << corpus_to_json(sheets);
}

}  // namespace harmonizer
