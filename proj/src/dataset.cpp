#include "glt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "glt/error.hpp"
#include "glt/rng.hpp"

namespace glt {

namespace fs = std::filesystem;

Adjacency::Adjacency(Index num_nodes, std::vector<Edge> edges) : num_nodes_(num_nodes), edges_(std::move(edges)) {
  if (num_nodes_ < 0) throw Error(ErrorCode::InvalidArgument, "negative node count");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.u < 0 || e.v >= num_nodes_ || e.u >= e.v) {
      throw Error(ErrorCode::IndexOutOfRange, "edge " + std::to_string(i) + " is not canonical (u<v<n)");
    }
    if (i > 0 && !(edges_[i - 1] < e)) {
      throw Error(ErrorCode::DuplicateEdge, "edges not strictly sorted at index " + std::to_string(i));
    }
  }

  std::vector<Index> deg(static_cast<std::size_t>(num_nodes_), 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  offsets_.assign(static_cast<std::size_t>(num_nodes_) + 1, 0);
  for (Index i = 0; i < num_nodes_; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  neighbors_.resize(static_cast<std::size_t>(offsets_.back()));
  edge_ids_.resize(neighbors_.size());
  std::vector<Index> cursor(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted, so every CSR row comes out sorted by neighbour.
  for (Index id = 0; id < num_edges(); ++id) {
    const Edge& e = edges_[id];
    neighbors_[cursor[e.u]] = e.v;
    edge_ids_[cursor[e.u]++] = id;
  }
  for (Index id = 0; id < num_edges(); ++id) {
    const Edge& e = edges_[id];
    neighbors_[cursor[e.v]] = e.u;
    edge_ids_[cursor[e.v]++] = id;
  }
  for (Index i = 0; i < num_nodes_; ++i) {
    // Second pass appended lower neighbours after higher ones; restore order.
    std::vector<std::pair<Index, Index>> row;
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) row.emplace_back(neighbors_[k], edge_ids_[k]);
    std::sort(row.begin(), row.end());
    for (Index k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      neighbors_[k] = row[k - offsets_[i]].first;
      edge_ids_[k] = row[k - offsets_[i]].second;
    }
  }
}

Matrix Adjacency::to_dense() const {
  Matrix a = Matrix::Zero(num_nodes_, num_nodes_);
  for (const Edge& e : edges_) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  return a;
}

namespace {

void check_index_set(const std::vector<Index>& set, Index n, const char* name) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set[i] < 0 || set[i] >= n) {
      throw Error(ErrorCode::IndexOutOfRange, std::string(name) + " index " + std::to_string(set[i]));
    }
    if (i > 0 && set[i] <= set[i - 1]) {
      throw Error(ErrorCode::ParseError, std::string(name) + " split must be sorted ascending without repeats");
    }
  }
}

SparseMatrix compress(const Matrix& dense) {
  SparseMatrix s = dense.sparseView();
  s.makeCompressed();
  return s;
}

}  // namespace

GraphDataset::GraphDataset(Index num_classes, Matrix features, Adjacency adjacency, std::vector<int> labels,
                           Splits splits)
    : num_classes_(num_classes),
      features_(std::move(features)),
      adjacency_(std::move(adjacency)),
      labels_(std::move(labels)),
      splits_(std::move(splits)) {
  const Index n = adjacency_.num_nodes();
  if (features_.rows() != n) throw Error(ErrorCode::ShapeMismatch, "feature rows != num_nodes");
  if (static_cast<Index>(labels_.size()) != n) throw Error(ErrorCode::ShapeMismatch, "labels length != num_nodes");
  if (num_classes_ < 1) throw Error(ErrorCode::InvalidArgument, "num_classes must be positive");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw Error(ErrorCode::IndexOutOfRange, "label of node " + std::to_string(i));
    }
  }
  check_index_set(splits_.train, n, "train");
  check_index_set(splits_.val, n, "val");
  check_index_set(splits_.test, n, "test");
  std::vector<char> owner(static_cast<std::size_t>(n), 0);
  for (const auto* set : {&splits_.train, &splits_.val, &splits_.test}) {
    for (Index i : *set) {
      if (owner[i]) throw Error(ErrorCode::SplitOverlap, "node " + std::to_string(i) + " is in two splits");
      owner[i] = 1;
    }
  }
  if (!features_.allFinite()) throw Error(ErrorCode::NonFinite, "features contain NaN/Inf");
  sparse_features_ = compress(features_);
}

const std::vector<Index>& GraphDataset::split(Split which) const {
  switch (which) {
    case Split::Train: return splits_.train;
    case Split::Val: return splits_.val;
    case Split::Test: return splits_.test;
  }
  return splits_.test;
}

GraphDataset GraphDataset::row_normalized() const {
  Matrix x = features_;
  for (Index i = 0; i < x.rows(); ++i) {
    const double s = x.row(i).cwiseAbs().sum();
    if (s > 0.0) x.row(i) /= s;
  }
  return GraphDataset(num_classes_, std::move(x), adjacency_, labels_, splits_);
}

std::vector<Edge> canonicalize_edges(Index num_nodes, std::span<const Edge> raw) {
  std::vector<std::pair<Edge, std::size_t>> keyed;
  keyed.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Edge e = raw[i];
    if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes) {
      throw Error(ErrorCode::IndexOutOfRange, "edge endpoint out of range at line " + std::to_string(i + 1));
    }
    if (e.u == e.v) throw Error(ErrorCode::ParseError, "self-loop at line " + std::to_string(i + 1));
    if (e.u > e.v) std::swap(e.u, e.v);
    keyed.emplace_back(e, i + 1);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<Edge> out;
  out.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (i > 0 && keyed[i].first == keyed[i - 1].first) {
      const auto& e = keyed[i].first;
      throw Error(ErrorCode::DuplicateEdge, "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                                ") at lines " + std::to_string(keyed[i - 1].second) + " and " +
                                                std::to_string(keyed[i].second));
    }
    out.push_back(keyed[i].first);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Native directory format.

namespace {

std::ifstream open_input(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::string read_file(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, path.filename().string() + " line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view token, const fs::path& path, std::size_t line) {
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || token.empty()) parse_fail(path, line, "bad number '" + std::string(token) + "'");
  return value;
}

/// Splits into lines; a single trailing LF is allowed.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

nlohmann::json parse_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + e.what());
  }
}

std::vector<Index> json_index_array(const nlohmann::json& j, const char* key, const fs::path& path) {
  try {
    return j.at(key).get<std::vector<Index>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + key + ": " + e.what());
  }
}

void append_double(std::string& out, double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

GraphDataset load_dataset(const fs::path& dir, const LoadOptions& options) {
  const fs::path meta_path = dir / "meta.json";
  const auto meta = parse_json(meta_path);
  Index n = 0, d = 0, classes = 0, declared_edges = 0;
  try {
    n = meta.at("num_nodes").get<Index>();
    d = meta.at("num_features").get<Index>();
    classes = meta.at("num_classes").get<Index>();
    declared_edges = meta.at("num_edges").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("meta.json: ") + e.what());
  }
  if (n < 0 || d < 0 || classes < 1) throw Error(ErrorCode::ParseError, "meta.json: invalid dimensions");

  // edges.tsv
  const fs::path edges_path = dir / "edges.tsv";
  const std::string edges_text = read_file(edges_path);
  std::vector<Edge> raw;
  {
    const auto lines = split_lines(edges_text);
    raw.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto tab = lines[i].find('\t');
      if (tab == std::string_view::npos) parse_fail(edges_path, i + 1, "expected 'u<TAB>v'");
      raw.push_back(Edge{parse_number<Index>(lines[i].substr(0, tab), edges_path, i + 1),
                         parse_number<Index>(lines[i].substr(tab + 1), edges_path, i + 1)});
    }
  }
  auto edges = canonicalize_edges(n, raw);
  if (static_cast<Index>(edges.size()) != declared_edges) {
    throw Error(ErrorCode::ParseError, "meta.json: num_edges=" + std::to_string(declared_edges) + " but edges.tsv has " +
                                           std::to_string(edges.size()));
  }

  // features.csv
  const fs::path features_path = dir / "features.csv";
  Matrix features(n, d);
  {
    const std::string text = read_file(features_path);
    const auto lines = split_lines(text);
    if (static_cast<Index>(lines.size()) != n) parse_fail(features_path, lines.size(), "expected num_nodes lines");
    for (Index i = 0; i < n; ++i) {
      std::string_view line = lines[i];
      Index col = 0;
      std::size_t start = 0;
      while (true) {
        const auto comma = line.find(',', start);
        const auto token = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (col >= d) parse_fail(features_path, i + 1, "too many columns");
        features(i, col++) = parse_number<double>(token, features_path, i + 1);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (col != d) parse_fail(features_path, i + 1, "expected " + std::to_string(d) + " columns");
    }
  }

  // labels.tsv
  const fs::path labels_path = dir / "labels.tsv";
  std::vector<int> labels;
  {
    const std::string text = read_file(labels_path);
    const auto lines = split_lines(text);
    if (static_cast<Index>(lines.size()) != n) parse_fail(labels_path, lines.size(), "expected num_nodes lines");
    labels.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const int y = parse_number<int>(lines[i], labels_path, i + 1);
      if (y < 0 || y >= classes) {
        throw Error(ErrorCode::IndexOutOfRange, "labels.tsv line " + std::to_string(i + 1) + ": label " + std::to_string(y));
      }
      labels.push_back(y);
    }
  }

  const fs::path splits_path = dir / "splits.json";
  const auto sj = parse_json(splits_path);
  Splits splits{json_index_array(sj, "train", splits_path), json_index_array(sj, "val", splits_path),
                json_index_array(sj, "test", splits_path)};

  GraphDataset ds(classes, std::move(features), Adjacency(n, std::move(edges)), std::move(labels), std::move(splits));
  if (options.row_normalize_features) return ds.row_normalized();
  return ds;
}

void save_dataset(const GraphDataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());

  nlohmann::ordered_json meta;
  meta["num_nodes"] = ds.num_nodes();
  meta["num_features"] = ds.num_features();
  meta["num_classes"] = ds.num_classes();
  meta["num_edges"] = ds.num_edges();
  write_file(dir / "meta.json", meta.dump() + "\n");

  std::string edges;
  for (const Edge& e : ds.adjacency().edges()) {
    edges += std::to_string(e.u);
    edges += '\t';
    edges += std::to_string(e.v);
    edges += '\n';
  }
  write_file(dir / "edges.tsv", edges);

  std::string features;
  const Matrix& x = ds.features();
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) features += ',';
      append_double(features, x(i, j));
    }
    features += '\n';
  }
  write_file(dir / "features.csv", features);

  std::string labels;
  for (int y : ds.labels()) {
    labels += std::to_string(y);
    labels += '\n';
  }
  write_file(dir / "labels.tsv", labels);

  nlohmann::ordered_json splits;
  splits["train"] = ds.splits().train;
  splits["val"] = ds.splits().val;
  splits["test"] = ds.splits().test;
  write_file(dir / "splits.json", splits.dump() + "\n");
}

GraphDataset synth_sbm(Index num_blocks, Index nodes_per_block, double p_in, double p_out, Index d,
                       std::uint64_t seed, const SbmOptions& options) {
  if (num_blocks < 1 || nodes_per_block < 1) throw Error(ErrorCode::DegenerateConfig, "need at least one node per block");
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "require 0 <= p_out <= p_in <= 1");
  }
  if (d < num_blocks) throw Error(ErrorCode::DegenerateConfig, "feature dim must be >= num_blocks for one-hot");
  const Index n_train = std::llround(0.6 * static_cast<double>(nodes_per_block));
  const Index n_val = std::llround(0.2 * static_cast<double>(nodes_per_block));
  const Index n_test = nodes_per_block - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw Error(ErrorCode::DegenerateConfig, "a block of " + std::to_string(nodes_per_block) + " nodes has an empty split");
  }

  const Index n = num_blocks * nodes_per_block;
  auto block = [&](Index i) { return i / nodes_per_block; };

  Rng edge_rng = Rng::stream(seed, 1);
  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      const double p = block(u) == block(v) ? p_in : p_out;
      if (edge_rng.uniform() < p) edges.push_back({u, v});
    }
  }

  Rng feature_rng = Rng::stream(seed, 2);
  Matrix x(n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(block(i));
    for (Index j = 0; j < d; ++j) x(i, j) = (j == block(i) ? 1.0 : 0.0) + options.noise_std * feature_rng.normal();
  }

  Rng split_rng = Rng::stream(seed, 3);
  Splits splits;
  for (Index b = 0; b < num_blocks; ++b) {
    std::vector<Index> members(static_cast<std::size_t>(nodes_per_block));
    std::iota(members.begin(), members.end(), b * nodes_per_block);
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[split_rng.below(i)]);
    splits.train.insert(splits.train.end(), members.begin(), members.begin() + n_train);
    splits.val.insert(splits.val.end(), members.begin() + n_train, members.begin() + n_train + n_val);
    splits.test.insert(splits.test.end(), members.begin() + n_train + n_val, members.end());
  }
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.val.begin(), splits.val.end());
  std::sort(splits.test.begin(), splits.test.end());

  return GraphDataset(num_blocks, std::move(x), Adjacency(n, std::move(edges)), std::move(labels), std::move(splits));
}

}  // namespace glt
