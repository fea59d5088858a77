#include "biasbench/feature_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "biasbench/errors.hpp"

namespace biasbench {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trimmed(s);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_nonneg_int(const std::string& s, int& out) {
  const std::string t = trimmed(s);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && out >= 0;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void row_error(const std::filesystem::path& path, std::size_t row,
                            const std::string& what) {
  std::ostringstream os;
  os << path.string() << ": row " << row << ": " << what;
  throw DataError(os.str());
}

}  // namespace

int LabelMap::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw DataError("LabelMap: unknown class name '" + name + "'");
  return it->second;
}

bool LabelMap::contains(const std::string& name) const { return by_name_.count(name) > 0; }

const std::string& LabelMap::name_of(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= by_index_.size())
    throw DataError("LabelMap: index " + std::to_string(index) + " out of range");
  return by_index_[static_cast<std::size_t>(index)];
}

int LabelMap::add(const std::string& name) {
  auto it = by_name_.find(name);
  if (it != by_name_.end()) return it->second;
  const int idx = static_cast<int>(by_index_.size());
  by_name_.emplace(name, idx);
  by_index_.push_back(name);
  return idx;
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("LabelMap: cannot open " + path.string());
  LabelMap map;
  std::string line;
  std::size_t row = 0;
  std::getline(in, line);  // header
  ++row;
  if (trimmed(line) != "class_name,class_index")
    throw DataError("LabelMap: " + path.string() + " has an unexpected header");
  while (std::getline(in, line)) {
    ++row;
    if (trimmed(line).empty()) continue;
    auto fields = split_csv_line(line);
    int idx = -1;
    if (fields.size() != 2 || !parse_nonneg_int(fields[1], idx))
      row_error(path, row, "malformed label-map row");
    const std::string name = trimmed(fields[0]);
    if (map.contains(name)) row_error(path, row, "duplicate class name '" + name + "'");
    if (static_cast<std::size_t>(idx) != map.by_index_.size())
      row_error(path, row, "label indices must be dense and ascending");
    map.add(name);
  }
  return map;
}

void LabelMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("LabelMap: cannot write " + path.string());
  out << "class_name,class_index\n";
  for (std::size_t i = 0; i < by_index_.size(); ++i)
    out << by_index_[i] << "," << i << "\n";
  if (!out) throw DataError("LabelMap: write failed for " + path.string());
}

std::vector<Dataset> load_feature_tables(const std::filesystem::path& path,
                                         std::optional<int> expected_dim,
                                         const LabelMap* labels) {
  std::ifstream in(path);
  if (!in) throw DataError("load_feature_table: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  std::size_t row = 1;

  const auto header = split_csv_line(line);
  if (header.size() < 4 || trimmed(header[0]) != "id" || trimmed(header[1]) != "collection" ||
      trimmed(header[2]) != "class")
    throw DataError(path.string() + ": header must be id,collection,class,f0,...");
  const int dim = static_cast<int>(header.size()) - 3;
  for (int k = 0; k < dim; ++k)
    if (trimmed(header[static_cast<std::size_t>(k) + 3]) != "f" + std::to_string(k))
      throw DataError(path.string() + ": feature columns must be named f0..f" +
                      std::to_string(dim - 1));
  if (expected_dim && *expected_dim != dim)
    throw DataError(path.string() + ": dim " + std::to_string(dim) + " does not match expected " +
                    std::to_string(*expected_dim));

  std::vector<std::string> collection_order;
  std::map<std::string, int> collection_ids;
  std::map<int, std::vector<LabeledSample>> grouped;

  while (std::getline(in, line)) {
    ++row;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      row_error(path, row, "expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));

    LabeledSample s;
    s.sample_id = trimmed(fields[0]);

    const std::string coll = trimmed(fields[1]);
    auto [it, inserted] = collection_ids.try_emplace(coll, static_cast<int>(collection_order.size()));
    if (inserted) collection_order.push_back(coll);
    s.collection_id = it->second;

    const std::string cls = trimmed(fields[2]);
    int label = -1;
    if (parse_nonneg_int(cls, label)) {
      s.class_label = label;
    } else if (labels != nullptr) {
      if (!labels->contains(cls)) row_error(path, row, "unknown class name '" + cls + "'");
      s.class_label = labels->index_of(cls);
    } else {
      row_error(path, row, "class '" + cls + "' is not an integer and no label map was provided");
    }

    s.features.resize(dim);
    for (int k = 0; k < dim; ++k) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<std::size_t>(k) + 3], v))
        row_error(path, row, "feature f" + std::to_string(k) + " is not a number");
      if (!std::isfinite(v)) row_error(path, row, "feature f" + std::to_string(k) + " is not finite");
      s.features[k] = v;
    }
    grouped[s.collection_id].push_back(std::move(s));
  }

  if (collection_order.empty()) throw DataError(path.string() + ": no data rows");

  std::vector<Dataset> out;
  out.reserve(collection_order.size());
  for (std::size_t i = 0; i < collection_order.size(); ++i)
    out.emplace_back(collection_order[i], static_cast<int>(i), dim,
                     std::move(grouped[static_cast<int>(i)]));
  return out;
}

Dataset load_feature_table(const std::filesystem::path& path, std::optional<int> expected_dim,
                           const LabelMap* labels) {
  auto all = load_feature_tables(path, expected_dim, labels);
  if (all.size() != 1)
    throw DataError(path.string() + ": expected a single collection, found " +
                    std::to_string(all.size()));
  return std::move(all.front());
}

void save_feature_tables(const std::filesystem::path& path, const std::vector<Dataset>& all) {
  if (all.empty()) throw DataError("save_feature_table: no datasets");
  const int dim = all.front().dim();
  for (const Dataset& ds : all)
    if (ds.dim() != dim) throw DataError("save_feature_table: datasets disagree on dim");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_feature_table: cannot write " + path.string());
  out << "id,collection,class";
  for (int k = 0; k < dim; ++k) out << ",f" << k;
  out << "\n";
  for (const Dataset& ds : all) {
    for (const LabeledSample& s : ds.samples()) {
      out << s.sample_id << "," << ds.name() << "," << s.class_label;
      for (int k = 0; k < dim; ++k) out << "," << format_double(s.features[k]);
      out << "\n";
    }
  }
  if (!out) throw DataError("save_feature_table: write failed for " + path.string());
}

void save_feature_table(const std::filesystem::path& path, const Dataset& ds) {
  save_feature_tables(path, std::vector<Dataset>{ds});
}

LabelMap build_label_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("build_label_map: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 4) throw DataError(path.string() + ": header too short");

  std::set<std::string> names;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      row_error(path, row, "expected " + std::to_string(header.size()) + " fields");
    const std::string cls = trimmed(fields[2]);
    int ignored = 0;
    if (!parse_nonneg_int(cls, ignored)) names.insert(cls);
  }
  LabelMap map;
  for (const std::string& n : names) map.add(n);  // sorted order: deterministic
  return map;
}

}  // namespace biasbench
