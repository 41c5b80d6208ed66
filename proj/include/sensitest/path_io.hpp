#pragma once

#include "sensitest/design.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sensitest {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Path file layout: one comment line "# {json header}" carrying the rule,
/// the seed and (Langlie) the noise draws, then a CSV table with columns
/// index,x,y. Doubles are written in shortest round-trip form.
void write_path_csv(const ExperimentPath& path, std::ostream& out);
std::string path_csv(const ExperimentPath& path);

/// The header line is optional; without it the rule defaults to a unit-step
/// Bruceton design at the first level and a warning is attached.
ExperimentPath read_path_csv(std::istream& in);

void save_path(const ExperimentPath& path, const std::string& filename);
ExperimentPath load_path(const std::string& filename);

}  // namespace sensitest
