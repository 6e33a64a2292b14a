#pragma once

// JSON documents for operators and split problems. Matrices are stored
// row-major as flat arrays. Generator documents ("random_*" kinds) are
// expanded into concrete instances when read.

#include <string>

#include "blocksolve/operator.hpp"
#include "blocksolve/splitting.hpp"

namespace blocksolve {

/// True when the document describes a split (federated) problem.
bool is_split_problem_document(const std::string& json_text);

OperatorPtr operator_from_json(const std::string& json_text);
/// Concrete form: linear and separable quadratic operators only.
std::string operator_to_json(const BlockOperator& g);

SplitProblem split_problem_from_json(const std::string& json_text);
std::string split_problem_to_json(const SplitProblem& problem);

std::string read_text_file(const std::string& path);

}  // namespace blocksolve
