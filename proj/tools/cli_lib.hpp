#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "icw/weights.hpp"

namespace icw::cli {

// Tabular result of a subcommand; cells keep their native type so both the
// CSV writer (17 significant digits, round-trip safe) and the JSON writer
// emit deterministically.
struct Table {
  using Cell = std::variant<std::int64_t, double, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Provenance {
  std::string subcommand;
  std::uint64_t config_hash = 0;
  std::string seed = "none";
  std::vector<std::string> notes;
};

std::string format_double(double v);  // %.17g
std::uint64_t fnv1a64(const std::string& text);

void write_csv(std::ostream& out, const Table& table, const Provenance& prov);
void write_json(std::ostream& out, const Table& table, const Provenance& prov);

// Weight specification: inline JSON (array of positive numbers or
// {"base": [...], "replicate": k}) or a path to a file holding the same.
WeightSequence parse_weights(const std::string& spec);

// Entry point used by both the binary and the tests; args exclude the
// program name. Validation failures print a JSON error object to err and
// return nonzero.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace icw::cli
