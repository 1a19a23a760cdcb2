#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glt/dataset.hpp"

namespace glt {

struct PlanetoidOptions {
  std::uint64_t seed = 0;
  Index train_per_class = 20;
  Index num_val = 500;
  Index num_test = 1000;
};

struct PlanetoidReport {
  std::vector<std::string> class_names;  // index = label
  std::size_t cites_read = 0;
  std::size_t unknown_endpoint = 0;  // lines naming an id absent from .content
  std::size_t self_cites = 0;
  std::size_t duplicate_cites = 0;   // reversed or repeated pairs collapsed
};

/// Reads the LINQS text release (<name>.content + <name>.cites). Nodes keep
/// .content order, classes are numbered in sorted-name order, and the split
/// is a seeded draw of train_per_class per class, then num_val and num_test
/// from the remaining nodes.
GraphDataset convert_linqs(const std::filesystem::path& content, const std::filesystem::path& cites,
                           const PlanetoidOptions& options = {}, PlanetoidReport* report = nullptr);

}  // namespace glt
