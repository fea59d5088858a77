#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biasbench/dataset.hpp"

namespace biasbench {

// Mapping between on-disk class-name strings and dense integer labels.
// Serialized as a two-column CSV `class_name,class_index`.
class LabelMap {
 public:
  LabelMap() = default;

  int index_of(const std::string& name) const;    // throws DataError if unknown
  bool contains(const std::string& name) const;
  const std::string& name_of(int index) const;    // throws DataError if unknown
  int add(const std::string& name);               // idempotent
  std::size_t size() const { return by_name_.size(); }

  static LabelMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, int> by_name_;
  std::vector<std::string> by_index_;
};

// Feature CSV contract: UTF-8, header `id,collection,class,f0,...,f{d-1}`,
// one sample per subsequent line, floats in decimal or scientific notation.
// The collection field may be any string; rows are grouped by it in order of
// first appearance and each group becomes one Dataset. Class fields that are
// non-negative integers are used directly; other strings require `labels`.

// All collections in the file, in order of first appearance.
std::vector<Dataset> load_feature_tables(const std::filesystem::path& path,
                                         std::optional<int> expected_dim = std::nullopt,
                                         const LabelMap* labels = nullptr);

// Single-collection convenience; throws DataError when the file holds more
// than one collection.
Dataset load_feature_table(const std::filesystem::path& path,
                           std::optional<int> expected_dim = std::nullopt,
                           const LabelMap* labels = nullptr);

// Writes one or many datasets using the same contract. Floats are printed
// with round-trip precision so write-then-load is exact.
void save_feature_table(const std::filesystem::path& path, const Dataset& ds);
void save_feature_tables(const std::filesystem::path& path, const std::vector<Dataset>& all);

// Scans a raw feature CSV whose class fields may be arbitrary strings and
// builds a label map over the distinct names in sorted order.
LabelMap build_label_map(const std::filesystem::path& path);

}  // namespace biasbench
