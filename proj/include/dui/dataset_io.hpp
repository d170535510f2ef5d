#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dui/dataset.hpp"

namespace dui {

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const char* field, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4)
    throw FormatError("idx: truncated file while reading " + std::string(field) + " in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

inline std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IDX image/label pairs. Images: magic 0x00000803, count, rows, cols, then
// count*rows*cols bytes. Labels: magic 0x00000801, count, then count bytes.
// All integers big-endian. Pixels are scaled to [0,1]; rows are flattened
// row-major.
// ---------------------------------------------------------------------------
inline DatasetTable load_idx(const std::string& images_path, const std::string& labels_path) {
  auto img = detail::open_binary(images_path);
  const std::uint32_t img_magic = detail::read_u32_be(img, "image magic", images_path);
  if (img_magic != 0x00000803u)
    throw FormatError("idx: bad image magic (expected 0x00000803) in " + images_path);
  const std::uint32_t n_images = detail::read_u32_be(img, "image count", images_path);
  const std::uint32_t rows = detail::read_u32_be(img, "image rows", images_path);
  const std::uint32_t cols = detail::read_u32_be(img, "image cols", images_path);

  auto lab = detail::open_binary(labels_path);
  const std::uint32_t lab_magic = detail::read_u32_be(lab, "label magic", labels_path);
  if (lab_magic != 0x00000801u)
    throw FormatError("idx: bad label magic (expected 0x00000801) in " + labels_path);
  const std::uint32_t n_labels = detail::read_u32_be(lab, "label count", labels_path);

  if (n_images != n_labels)
    throw FormatError("idx: count mismatch, " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");
  if (n_images == 0) throw FormatError("idx: empty dataset in " + images_path);
  if (rows == 0 || cols == 0) throw FormatError("idx: zero image dimensions in " + images_path);

  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  DatasetTable t;
  t.features.resize(n_images, static_cast<Eigen::Index>(pixels));
  t.labels.resize(n_images);
  t.class_count = 10;
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (img.gcount() != static_cast<std::streamsize>(pixels))
      throw FormatError("idx: truncated file while reading pixel data of image " +
                        std::to_string(i) + " in " + images_path);
    for (std::size_t p = 0; p < pixels; ++p)
      t.features(i, static_cast<Eigen::Index>(p)) = static_cast<double>(buf[p]) / 255.0;
  }
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    unsigned char v;
    lab.read(reinterpret_cast<char*>(&v), 1);
    if (lab.gcount() != 1)
      throw FormatError("idx: truncated file while reading label " + std::to_string(i) + " in " +
                        labels_path);
    if (v > 9)
      throw FormatError("idx: label value " + std::to_string(int(v)) + " out of range at item " +
                        std::to_string(i) + " in " + labels_path);
    t.labels(i) = v;
  }
  validate(t);
  return t;
}

inline DatasetTable concat(const DatasetTable& a, const DatasetTable& b) {
  if (a.m() != b.m()) throw PreconditionError("concat: feature dimension mismatch");
  if (a.class_count != b.class_count) throw PreconditionError("concat: class_count mismatch");
  DatasetTable out;
  out.features.resize(a.n() + b.n(), a.m());
  out.features << a.features, b.features;
  out.labels.resize(a.n() + b.n());
  out.labels << a.labels, b.labels;
  out.class_count = a.class_count;
  out.feature_names = a.feature_names;
  out.label_names = a.label_names;
  return out;
}

// ---------------------------------------------------------------------------
// Planetoid-style citation graphs: a `.content` file with one
// `id f1 ... fm label` line per node and a `.cites` file with
// `cited_id citing_id` pairs. Node and label-id order follow first
// appearance in the content file. Edges naming unknown ids and self-citations
// are dropped, not errors; the counts are reported for the run log.
// ---------------------------------------------------------------------------
struct CitationLoadResult {
  GraphDataset graph;
  int dropped_unknown_edges = 0;
  int dropped_self_edges = 0;
};

inline CitationLoadResult load_citation_graph(const std::string& content_path,
                                              const std::string& cites_path) {
  std::ifstream content(content_path);
  if (!content) throw FormatError("cannot open file: " + content_path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::unordered_map<std::string, int> node_id;
  std::unordered_map<std::string, int> label_id;
  std::vector<std::string> label_names;
  std::string line;
  int line_no = 0;
  Eigen::Index m = -1;
  while (std::getline(content, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 3)
      throw FormatError("content: line " + std::to_string(line_no) +
                        " has fewer than 3 fields (id, features, label)");
    const Eigen::Index feats = static_cast<Eigen::Index>(tok.size()) - 2;
    if (m < 0) m = feats;
    if (feats != m)
      throw FormatError("content: line " + std::to_string(line_no) + " has " +
                        std::to_string(feats) + " feature values, expected " + std::to_string(m));
    if (node_id.count(tok.front()))
      throw FormatError("content: duplicate node id '" + tok.front() + "' at line " +
                        std::to_string(line_no));
    node_id.emplace(tok.front(), static_cast<int>(rows.size()));
    std::vector<double> vals(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
      try {
        vals[static_cast<std::size_t>(j)] = std::stod(tok[static_cast<std::size_t>(j) + 1]);
      } catch (const std::exception&) {
        throw FormatError("content: non-numeric feature value at line " + std::to_string(line_no));
      }
    }
    rows.push_back(std::move(vals));
    const std::string& lab = tok.back();
    auto it = label_id.find(lab);
    if (it == label_id.end()) {
      it = label_id.emplace(lab, static_cast<int>(label_names.size())).first;
      label_names.push_back(lab);
    }
    labels.push_back(it->second);
  }
  if (rows.empty()) throw FormatError("content: empty dataset in " + content_path);

  const auto n = static_cast<Eigen::Index>(rows.size());
  DatasetTable table;
  table.features.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      table.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  table.labels = Eigen::Map<IVec>(labels.data(), n);
  table.class_count = std::max(2, static_cast<int>(label_names.size()));
  table.label_names = label_names;

  std::ifstream cites(cites_path);
  if (!cites) throw FormatError("cannot open file: " + cites_path);
  CitationLoadResult result;
  std::vector<Eigen::Triplet<double>> trips;
  std::map<std::pair<int, int>, bool> seen;
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string a, b;
    if (!(ss >> a)) continue;
    if (!(ss >> b))
      throw FormatError("cites: line " + std::to_string(line_no) + " has a single id");
    auto ia = node_id.find(a);
    auto ib = node_id.find(b);
    if (ia == node_id.end() || ib == node_id.end()) {
      ++result.dropped_unknown_edges;
      continue;
    }
    if (ia->second == ib->second) {
      ++result.dropped_self_edges;
      continue;
    }
    const int lo = std::min(ia->second, ib->second);
    const int hi = std::max(ia->second, ib->second);
    if (seen.emplace(std::make_pair(lo, hi), true).second) {
      trips.emplace_back(lo, hi, 1.0);
      trips.emplace_back(hi, lo, 1.0);
    }
  }
  SpMat adj(n, n);
  adj.setFromTriplets(trips.begin(), trips.end());
  result.graph = make_graph(std::move(table), adj);
  return result;
}

// ---------------------------------------------------------------------------
// Generic tabular CSV: header row, numeric feature columns, last column is
// the label. Integer-valued label columns keep their values; anything else
// is mapped to ids by first appearance.
// ---------------------------------------------------------------------------
inline DatasetTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: empty dataset in " + path);
  auto split_commas = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  };
  const std::vector<std::string> header = split_commas(line);
  if (header.size() < 2) throw FormatError("csv: need at least one feature column and a label column");
  const std::size_t cols = header.size();

  std::vector<std::vector<double>> feats;
  std::vector<std::string> raw_labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto tok = split_commas(line);
    if (tok.size() != cols)
      throw FormatError("csv: line " + std::to_string(line_no) + " has " +
                        std::to_string(tok.size()) + " fields, expected " + std::to_string(cols));
    std::vector<double> vals(cols - 1);
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      try {
        vals[j] = std::stod(tok[j]);
      } catch (const std::exception&) {
        throw FormatError("csv: non-numeric feature value '" + tok[j] + "' at line " +
                          std::to_string(line_no));
      }
    }
    feats.push_back(std::move(vals));
    raw_labels.push_back(tok.back());
  }
  if (feats.empty()) throw FormatError("csv: empty dataset in " + path);

  const auto n = static_cast<Eigen::Index>(feats.size());
  const auto m = static_cast<Eigen::Index>(cols - 1);
  DatasetTable t;
  t.features.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      t.features(i, j) = feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  t.feature_names.assign(header.begin(), header.end() - 1);
  t.labels.resize(n);

  bool all_int = true;
  for (const auto& s : raw_labels) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      all_int = false;
      break;
    }
  }
  if (all_int) {
    int max_label = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      t.labels(i) = std::stoi(raw_labels[static_cast<std::size_t>(i)]);
      max_label = std::max(max_label, t.labels(i));
    }
    t.class_count = std::max(2, max_label + 1);
  } else {
    std::unordered_map<std::string, int> ids;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto it = ids.find(raw_labels[static_cast<std::size_t>(i)]);
      if (it == ids.end()) {
        it = ids.emplace(raw_labels[static_cast<std::size_t>(i)], static_cast<int>(t.label_names.size())).first;
        t.label_names.push_back(raw_labels[static_cast<std::size_t>(i)]);
      }
      t.labels(i) = it->second;
    }
    t.class_count = std::max(2, static_cast<int>(t.label_names.size()));
  }
  validate(t);
  return t;
}

}  // namespace dui
