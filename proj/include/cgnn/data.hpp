#pragma once

#include "cgnn/graph.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cgnn {

// ---------------------------------------------------------------------------
// Feature normalization and splits
// ---------------------------------------------------------------------------

// Standardizes each feature column to zero mean and unit population standard
// deviation; constant columns become all-zero.
inline AttributedGraph normalize_features(const AttributedGraph& graph) {
  if (graph.vertex_count() < 2)
    throw std::invalid_argument("normalize_features: need at least 2 vertices");
  Matrix x = graph.features();
  const double n = static_cast<double>(x.rows());
  for (Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    x.col(c).array() -= mean;
    const double sd = std::sqrt(x.col(c).squaredNorm() / n);
    if (sd > 0.0) {
      x.col(c) /= sd;
    } else {
      x.col(c).setZero();
    }
  }
  return graph.with_features(std::move(x));
}

struct SplitConfig {
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct Splits {
  IndexList train;
  IndexList val;
  IndexList test;
};

// Random disjoint cover of [0, n). Sizes follow largest-remainder rounding
// with ties resolved in the order train, test, val.
inline Splits split_vertices(Index n, const SplitConfig& cfg) {
  if (n < 3) throw std::invalid_argument("split_vertices: need n >= 3");
  const double total = cfg.train_fraction + cfg.val_fraction + cfg.test_fraction;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split_vertices: fractions must sum to 1");
  if (cfg.train_fraction < 0 || cfg.val_fraction < 0 || cfg.test_fraction < 0)
    throw std::invalid_argument("split_vertices: fractions must be nonnegative");

  // Tie order train, test, val.
  struct Part {
    int priority;
    double fraction;
    Index size;
    double remainder;
  };
  std::array<Part, 3> parts = {Part{0, cfg.train_fraction, 0, 0.0},
                               Part{2, cfg.val_fraction, 0, 0.0},
                               Part{1, cfg.test_fraction, 0, 0.0}};
  Index assigned = 0;
  for (auto& p : parts) {
    const double exact = p.fraction * static_cast<double>(n);
    p.size = static_cast<Index>(std::floor(exact + 1e-12));
    p.remainder = exact - static_cast<double>(p.size);
    assigned += p.size;
  }
  for (Index left = n - assigned; left > 0; --left) {
    Part* best = nullptr;
    for (auto& p : parts)
      if (!best || p.remainder > best->remainder + 1e-12 ||
          (std::abs(p.remainder - best->remainder) <= 1e-12 && p.priority < best->priority))
        best = &p;
    ++best->size;
    best->remainder = -1.0;
  }

  IndexList order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(cfg.seed, 0x59113));
  rng.shuffle(order);

  Splits s;
  auto take = [&order](Index from, Index count) {
    return sorted_copy(IndexList(order.begin() + from, order.begin() + from + count));
  };
  s.train = take(0, parts[0].size);
  s.val = take(parts[0].size, parts[1].size);
  s.test = take(parts[0].size + parts[1].size, parts[2].size);
  return s;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// R^2 = 1 - SS_res / SS_tot with SS_tot about the truth's mean.
inline double r_squared(const Vector& predictions, const Vector& truth) {
  if (predictions.size() != truth.size() || truth.size() < 1)
    throw std::invalid_argument("r_squared: size mismatch or empty input");
  const double mean = truth.mean();
  const double ss_tot = (truth.array() - mean).matrix().squaredNorm();
  if (ss_tot == 0.0) throw std::domain_error("r_squared: constant truth, undefined");
  const double ss_res = (predictions - truth).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

// Fraction of sign agreements after thresholding predictions at 0; a
// prediction of exactly 0 counts as +1.
inline double binary_accuracy(const Vector& predictions, const Vector& truth) {
  if (predictions.size() != truth.size() || truth.size() < 1)
    throw std::invalid_argument("binary_accuracy: size mismatch or empty input");
  Index hits = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (truth[i] != 1.0 && truth[i] != -1.0)
      throw std::invalid_argument("binary_accuracy: truth must be +-1");
    const double sign = predictions[i] >= 0.0 ? 1.0 : -1.0;
    if (sign == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Dataset bundle directory:
//   edges.tsv     u <tab> v <tab> type   (type optional on read, default 0)
//   features.csv  vertex_id,f0,...       (header row)
//   labels.csv    vertex_id,label        (empty label cell = unlabeled)
//   splits.json   {"train": [...], "val": [...], "test": [...]}
// Writers format numbers with shortest round-trip representations, so
// write -> read -> write is byte-stable.
// ---------------------------------------------------------------------------

struct DataBundle {
  AttributedGraph graph;
  std::optional<Splits> splits;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const char* where) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw std::runtime_error(std::string("bundle: bad number in ") + where + ": '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s, const char* where) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error(std::string("bundle: bad integer in ") + where + ": '" + s + "'");
  return v;
}

inline std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

inline void write_bundle(const std::filesystem::path& dir, const DataBundle& bundle) {
  namespace fs = std::filesystem;
  const AttributedGraph& g = bundle.graph;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv");
    for (const auto& e : g.edges())
      out << e.u << '\t' << e.v << '\t' << e.type << '\n';
  }
  {
    std::ofstream out(dir / "features.csv");
    out << "vertex_id";
    for (Index c = 0; c < g.feature_dim(); ++c) out << ",f" << c;
    out << '\n';
    for (Index i = 0; i < g.vertex_count(); ++i) {
      out << i;
      for (Index c = 0; c < g.feature_dim(); ++c)
        out << ',' << detail::format_double(g.features()(i, c));
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    out << "vertex_id,label\n";
    for (Index i = 0; i < g.vertex_count(); ++i) {
      out << i << ',';
      if (g.has_label(i)) out << detail::format_double(g.label(i));
      out << '\n';
    }
  }
  if (bundle.splits) {
    nlohmann::json j;
    j["train"] = bundle.splits->train;
    j["val"] = bundle.splits->val;
    j["test"] = bundle.splits->test;
    std::ofstream out(dir / "splits.json");
    out << j.dump(2) << '\n';
  }
}

inline DataBundle read_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  auto require = [&](const char* name) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw std::runtime_error("bundle: missing file " + p.string());
    return std::ifstream(p);
  };

  std::string line;

  // features.csv defines the vertex count and dimensions.
  auto features_in = require("features.csv");
  if (!std::getline(features_in, line)) throw std::runtime_error("bundle: empty features.csv");
  std::vector<std::vector<double>> rows;
  while (std::getline(features_in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_line(line, ',');
    if (fields.empty()) continue;
    const long id = detail::parse_long(fields[0], "features.csv");
    if (id != static_cast<long>(rows.size()))
      throw std::runtime_error("bundle: features.csv rows must be 0..n-1 in order");
    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i)
      row.push_back(detail::parse_double(fields[i], "features.csv"));
    rows.push_back(std::move(row));
  }
  const Index n = static_cast<Index>(rows.size());
  const Index d = n > 0 ? static_cast<Index>(rows.front().size()) : 0;
  Matrix features(n, d);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != d)
      throw std::runtime_error("bundle: inconsistent feature dimension");
    for (Index c = 0; c < d; ++c) features(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  }

  auto edges_in = require("edges.tsv");
  std::vector<Edge> edges;
  while (std::getline(edges_in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_line(line, '\t');
    if (fields.size() != 2 && fields.size() != 3)
      throw std::runtime_error("bundle: edges.tsv expects 'u<TAB>v[<TAB>type]'");
    Edge e;
    e.u = detail::parse_long(fields[0], "edges.tsv");
    e.v = detail::parse_long(fields[1], "edges.tsv");
    e.type = fields.size() == 3 ? static_cast<int>(detail::parse_long(fields[2], "edges.tsv")) : 0;
    edges.push_back(e);
  }

  std::vector<std::optional<double>> labels(static_cast<std::size_t>(n));
  auto labels_in = require("labels.csv");
  std::getline(labels_in, line);  // header
  while (std::getline(labels_in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_line(line, ',');
    if (fields.size() != 2) throw std::runtime_error("bundle: labels.csv expects 'vertex_id,label'");
    const long id = detail::parse_long(fields[0], "labels.csv");
    if (id < 0 || id >= n) throw std::runtime_error("bundle: labels.csv vertex id out of range");
    if (!fields[1].empty())
      labels[static_cast<std::size_t>(id)] = detail::parse_double(fields[1], "labels.csv");
  }

  DataBundle bundle{AttributedGraph(n, std::move(edges), std::move(features), std::move(labels)),
                    std::nullopt};

  const fs::path splits_path = dir / "splits.json";
  if (fs::exists(splits_path)) {
    std::ifstream in(splits_path);
    nlohmann::json j = nlohmann::json::parse(in);
    Splits s;
    s.train = j.at("train").get<IndexList>();
    s.val = j.at("val").get<IndexList>();
    s.test = j.at("test").get<IndexList>();
    bundle.splits = std::move(s);
  }
  return bundle;
}

}  // namespace cgnn
