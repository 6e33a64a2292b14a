#pragma once

#include <string>

namespace blocksolve::app {

/// Writes lemmas.json into `dir`, with expected values from the reference
/// computations and closed forms.
std::string write_fixtures(const std::string& dir);

}  // namespace blocksolve::app
