#include "biasbench/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "biasbench/errors.hpp"

namespace biasbench {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_weight_line(std::ostream& os, const std::string& head, const Eigen::VectorXd& w,
                       double offset) {
  os << head << " :";
  for (Eigen::Index i = 0; i < w.size(); ++i) os << " " << fmt(w[i]);
  os << " " << fmt(offset) << "\n";
}

struct Parser {
  std::ifstream in;
  std::string path;
  explicit Parser(const std::filesystem::path& p) : in(p), path(p.string()) {
    if (!in) throw DataError("model_io: cannot open " + path);
  }
  std::string line() {
    std::string l;
    if (!std::getline(in, l)) throw DataError("model_io: " + path + ": unexpected end of file");
    if (!l.empty() && l.back() == '\r') l.pop_back();
    return l;
  }
  std::string expect_kv(const std::string& key) {
    const std::string l = line();
    const std::string prefix = key + " = ";
    if (l.rfind(prefix, 0) != 0)
      throw DataError("model_io: " + path + ": expected '" + key + " = ...', got '" + l + "'");
    return l.substr(prefix.size());
  }
  // "head : v0 v1 ... vk" -> (head, values)
  std::pair<std::string, std::vector<double>> weight_line() {
    const std::string l = line();
    const auto colon = l.find(" : ");
    if (colon == std::string::npos)
      throw DataError("model_io: " + path + ": malformed weight line '" + l + "'");
    std::istringstream values(l.substr(colon + 3));
    std::vector<double> v;
    double x = 0.0;
    while (values >> x) v.push_back(x);
    return {l.substr(0, colon), v};
  }
};

}  // namespace

void save_ova_model(const std::filesystem::path& path, const OvaModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("model_io: cannot write " + path.string());
  out << "biasbench-model v1\n";
  out << "tie_rule = " << kTieRuleTag << "\n";
  out << "dim = " << model.dim() << "\n";
  out << "classes = " << model.num_classes() << "\n";
  for (std::size_t k = 0; k < model.models.size(); ++k) {
    out << "C = " << fmt(model.models[k].trained_c) << "\n";
    write_weight_line(out, "class " + std::to_string(model.classes[k]), model.models[k].weights,
                      model.models[k].offset);
  }
  if (!out) throw DataError("model_io: write failed for " + path.string());
}

OvaModel load_ova_model(const std::filesystem::path& path) {
  Parser p(path);
  if (p.line() != "biasbench-model v1")
    throw DataError("model_io: " + path.string() + ": unknown format header");
  if (p.expect_kv("tie_rule") != kTieRuleTag)
    throw DataError("model_io: " + path.string() + ": tie-rule tag mismatch");
  const int dim = std::stoi(p.expect_kv("dim"));
  const int classes = std::stoi(p.expect_kv("classes"));

  OvaModel model;
  for (int k = 0; k < classes; ++k) {
    const double c = std::stod(p.expect_kv("C"));
    auto [head, values] = p.weight_line();
    if (head.rfind("class ", 0) != 0)
      throw DataError("model_io: " + path.string() + ": expected a class line");
    if (static_cast<int>(values.size()) != dim + 1)
      throw DataError("model_io: " + path.string() + ": weight count mismatch");
    LinearModel m;
    m.trained_c = c;
    m.weights = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
    m.offset = values.back();
    model.classes.push_back(std::stoi(head.substr(6)));
    model.models.push_back(std::move(m));
  }
  return model;
}

void save_unbias_model(const std::filesystem::path& path, const UnbiasModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("model_io: cannot write " + path.string());
  out << "biasbench-model v1\n";
  out << "tie_rule = " << kTieRuleTag << "\n";
  out << "dim = " << model.dim() << "\n";
  out << "collections = " << model.num_collections() << "\n";
  out << "lambda = " << fmt(model.lambda) << "\n";
  out << "C1 = " << fmt(model.c1) << "\n";
  out << "C2 = " << fmt(model.c2) << "\n";
  write_weight_line(out, "w_vw", model.w_vw, model.w_vw_offset);
  for (std::size_t i = 0; i < model.deltas.size(); ++i)
    write_weight_line(out, "delta " + std::to_string(i), model.deltas[i],
                      model.delta_offsets[i]);
  if (!out) throw DataError("model_io: write failed for " + path.string());
}

UnbiasModel load_unbias_model(const std::filesystem::path& path) {
  Parser p(path);
  if (p.line() != "biasbench-model v1")
    throw DataError("model_io: " + path.string() + ": unknown format header");
  if (p.expect_kv("tie_rule") != kTieRuleTag)
    throw DataError("model_io: " + path.string() + ": tie-rule tag mismatch");
  const int dim = std::stoi(p.expect_kv("dim"));
  const int collections = std::stoi(p.expect_kv("collections"));

  UnbiasModel model;
  model.lambda = std::stod(p.expect_kv("lambda"));
  model.c1 = std::stod(p.expect_kv("C1"));
  model.c2 = std::stod(p.expect_kv("C2"));

  auto [head, values] = p.weight_line();
  if (head != "w_vw" || static_cast<int>(values.size()) != dim + 1)
    throw DataError("model_io: " + path.string() + ": malformed w_vw line");
  model.w_vw = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
  model.w_vw_offset = values.back();

  for (int i = 0; i < collections; ++i) {
    auto [dhead, dvalues] = p.weight_line();
    if (dhead != "delta " + std::to_string(i) || static_cast<int>(dvalues.size()) != dim + 1)
      throw DataError("model_io: " + path.string() + ": malformed delta line " +
                      std::to_string(i));
    model.deltas.emplace_back(Eigen::Map<Eigen::VectorXd>(dvalues.data(), dim));
    model.delta_offsets.push_back(dvalues.back());
  }
  return model;
}

}  // namespace biasbench
