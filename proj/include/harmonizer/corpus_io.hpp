#ifndef HARMONIZER_CORPUS_IO_HPP
#define HARMONIZER_CORPUS_IO_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "harmonizer/leadsheet.hpp"

namespace harmonizer {

// Schema violations carry the file, record index, and field that failed.
struct SchemaError : std::runtime_error {
  SchemaError(const std::string& file, int record, const std::string& field,
              const std::string& what)
      : std::runtime_error(file + (record >= 0 ? " record " + std::to_string(record) : "") +
                           (field.empty() ? "" : " field '" + field + "'") + ": " + what) {}
};

// Corpus files are UTF-8 JSON: a top-level array of lead-sheet records with
// rational times serialized as "p/q" strings in beats and chords as their
// integer encodings. write_corpus then read_corpus is the identity.
std::vector<LeadSheet> read_corpus(const std::string& path);
void write_corpus(const std::vector<LeadSheet>& sheets, const std::string& path);

std::string corpus_to_json(const std::vector<LeadSheet>& sheets);
std::vector<LeadSheet> corpus_from_json(const std::string& text, const std::string& origin);

}  // namespace harmonizer

#endif
