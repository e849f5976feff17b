#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pjml/types.hpp"

// File formats and run manifests.
//
// All tabular data is CSV. Floating-point values are written with enough
// digits to round-trip exactly, so a rerun of the same configuration
// reproduces outputs byte for byte.

namespace pjml {

inline constexpr const char* kVersion = "1.0.0";

// Shortest decimal representation that round-trips a double.
std::string format_double(double v);

// Reads `person_id,item_id,response` rows. Identifiers may be arbitrary
// strings; they are interned to dense indices in order of first appearance
// and kept as labels on the result. Responses must be 0 or 1; duplicate
// (person, item) pairs and malformed rows raise ParseError with the line
// number, and a file without data rows raises EmptyDataError.
ResponseMatrix load_triplets(const std::string& path);

// Reads a rectangular grid of 0 / 1 / NA cells without a header. NA cells are
// missing. Ragged rows raise ParseError.
ResponseMatrix load_dense(const std::string& path);

void save_triplets(const ResponseMatrix& U, const std::string& path);

// Parameter matrices with an identifier column. `id_header` names the first
// column; value columns are col0, col1, ...
void save_matrix(const Mat& values, const std::vector<std::string>& row_labels,
                 const std::string& id_header, const std::string& path);

// Loads a matrix written by save_matrix; returns values and row labels.
std::pair<Mat, std::vector<std::string>> load_matrix(const std::string& path);

// FNV-1a digest of a file's bytes, as hex.
std::string file_digest(const std::string& path);

// Everything needed to rerun a command: resolved configuration, seed, input
// digests, version, and phase timings. Serialized as JSON next to each
// command's outputs.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> config;   // resolved settings, stringified
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, double> timings;       // phase -> seconds
  std::string version = kVersion;

  void write(const std::string& path) const;
};

// CLI entry point (exposed for testing). Returns the process exit status.
int run_cli(const std::vector<std::string>& args);

}  // namespace pjml
