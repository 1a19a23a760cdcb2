#include "glt/planetoid.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "glt/error.hpp"
#include "glt/rng.hpp"

namespace glt {

namespace {

std::ifstream open_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::MissingFile, p.string());
  return in;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

void shuffle(std::vector<Index>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

GraphDataset convert_linqs(const std::filesystem::path& content, const std::filesystem::path& cites,
                           const PlanetoidOptions& options, PlanetoidReport* report) {
  PlanetoidReport local;
  PlanetoidReport& rep = report ? *report : local;
  rep = {};

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> class_of;
  {
    auto in = open_text(content);
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto t = tokens(line);
      if (t.empty()) continue;
      if (t.size() < 3) throw Error(ErrorCode::ParseError, content.string() + " line " + std::to_string(line_no));
      const std::size_t d = t.size() - 2;
      if (width == 0) width = d;
      if (d != width) throw Error(ErrorCode::ParseError, content.string() + " line " + std::to_string(line_no) + ": ragged row");
      std::vector<double> row(d);
      for (std::size_t k = 0; k < d; ++k) {
        try {
          row[k] = std::stod(t[k + 1]);
        } catch (const std::exception&) {
          throw Error(ErrorCode::ParseError, content.string() + " line " + std::to_string(line_no));
        }
      }
      ids.push_back(t.front());
      class_of.push_back(t.back());
      rows.push_back(std::move(row));
    }
    if (ids.empty()) throw Error(ErrorCode::ParseError, content.string() + ": no nodes");
  }

  std::unordered_map<std::string, Index> id_index;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!id_index.emplace(ids[i], static_cast<Index>(i)).second)
      throw Error(ErrorCode::ParseError, "duplicate node id " + ids[i]);

  std::set<std::string> names(class_of.begin(), class_of.end());
  rep.class_names.assign(names.begin(), names.end());
  std::map<std::string, int> class_index;
  for (std::size_t c = 0; c < rep.class_names.size(); ++c) class_index[rep.class_names[c]] = static_cast<int>(c);

  const Index n = static_cast<Index>(ids.size());
  const Index d = static_cast<Index>(rows.front().size());
  Matrix features(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) features(i, k) = rows[i][k];
    labels[i] = class_index[class_of[i]];
  }

  std::set<Edge> edges;
  {
    auto in = open_text(cites);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto t = tokens(line);
      if (t.empty()) continue;
      if (t.size() != 2) throw Error(ErrorCode::ParseError, cites.string() + " line " + std::to_string(line_no));
      ++rep.cites_read;
      auto a = id_index.find(t[0]);
      auto b = id_index.find(t[1]);
      if (a == id_index.end() || b == id_index.end()) {
        ++rep.unknown_endpoint;
        continue;
      }
      if (a->second == b->second) {
        ++rep.self_cites;
        continue;
      }
      Edge e{std::min(a->second, b->second), std::max(a->second, b->second)};
      if (!edges.insert(e).second) ++rep.duplicate_cites;
    }
  }

  Rng rng = Rng::stream(options.seed, 0x91a7e701d);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[i] = i;
  shuffle(order, rng);

  Splits splits;
  std::vector<Index> taken_per_class(rep.class_names.size(), 0);
  std::vector<Index> rest;
  for (Index i : order) {
    Index& taken = taken_per_class[labels[i]];
    if (taken < options.train_per_class) {
      splits.train.push_back(i);
      ++taken;
    } else {
      rest.push_back(i);
    }
  }
  if (static_cast<Index>(rest.size()) < options.num_val + options.num_test)
    throw Error(ErrorCode::DegenerateConfig, "not enough nodes for the requested val/test sizes");
  splits.val.assign(rest.begin(), rest.begin() + options.num_val);
  splits.test.assign(rest.begin() + options.num_val, rest.begin() + options.num_val + options.num_test);
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.val.begin(), splits.val.end());
  std::sort(splits.test.begin(), splits.test.end());

  return GraphDataset(static_cast<Index>(rep.class_names.size()), std::move(features),
                      Adjacency(n, std::vector<Edge>(edges.begin(), edges.end())), std::move(labels),
                      std::move(splits));
}

}  // namespace glt
