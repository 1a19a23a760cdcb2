#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "glt/results.hpp"

namespace glt::cli {

/// Per-dataset hyperparameter bundles ("cora", "citeseer", "pubmed").
void apply_preset(const std::string& name, TrainConfig& train);

/// args excludes the program name. Exit codes: 0 ok, 1 runtime failure, 2 config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace glt::cli
