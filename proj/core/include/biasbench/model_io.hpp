#pragma once

#include <filesystem>

#include "biasbench/linear_svm.hpp"
#include "biasbench/unbias.hpp"

namespace biasbench {

// Structured-text model format (one file per model):
//
//   biasbench-model v1
//   tie_rule = <tag>
//   dim = <d>
//   ...one `class <label> : w0 ... w{d-1} b` line per one-vs-all head...
//   ...optional `delta <i> : ...` block for multi-collection models...
//
// Weights are printed with round-trip precision, so save/load is exact.

void save_ova_model(const std::filesystem::path& path, const OvaModel& model);
OvaModel load_ova_model(const std::filesystem::path& path);

void save_unbias_model(const std::filesystem::path& path, const UnbiasModel& model);
UnbiasModel load_unbias_model(const std::filesystem::path& path);

}  // namespace biasbench
