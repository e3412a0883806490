#include "oad/evalmetrics/classification.hpp"

#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>

#include "oad/core/error.hpp"

namespace oad {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

nlohmann::json metrics_json(const AveragedMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

}  // namespace

double harmonic_mean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

double macro_average(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / double(values.size());
}

double weighted_average(std::span<const double> values, std::span<const double> weights) {
  require(values.size() == weights.size(), ErrorCode::kDimension, "values and weights differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += values[i] * weights[i];
    den += weights[i];
  }
  return ratio(num, den);
}

ClassificationReport classification_report(std::span<const std::string> truth, std::span<const std::string> pred,
                                           const std::vector<std::string>& class_order) {
  require(truth.size() == pred.size(), ErrorCode::kDimension, "label sequences differ in length");
  require(!class_order.empty(), ErrorCode::kInvalidInput, "class order is empty");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_order.size(); ++i)
    require(index.emplace(class_order[i], i).second, ErrorCode::kInvalidInput, "duplicate class " + class_order[i]);
  auto lookup = [&](const std::string& label) {
    const auto it = index.find(label);
    require(it != index.end(), ErrorCode::kLabel, "unknown label '" + label + "'");
    return it->second;
  };
  const std::size_t n = class_order.size();
  ClassificationReport r;
  r.confusion.assign(n, std::vector<long>(n, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion[lookup(truth[i])][lookup(pred[i])];
  r.total = static_cast<long>(truth.size());

  long correct = 0;
  std::vector<double> p(n), rc(n), f(n), w(n);
  for (std::size_t c = 0; c < n; ++c) {
    long tp = r.confusion[c][c], support = 0, predicted = 0;
    for (std::size_t k = 0; k < n; ++k) {
      support += r.confusion[c][k];
      predicted += r.confusion[k][c];
    }
    correct += tp;
    ClassMetrics m;
    m.name = class_order[c];
    m.support = support;
    m.zero_support = support == 0;
    m.precision = ratio(double(tp), double(predicted));
    m.recall = ratio(double(tp), double(support));
    m.f1 = harmonic_mean(m.precision, m.recall);
    p[c] = m.precision;
    rc[c] = m.recall;
    f[c] = m.f1;
    w[c] = double(support);
    r.classes.push_back(m);
  }
  r.accuracy = ratio(double(correct), double(r.total));
  r.macro = {macro_average(p), macro_average(rc), macro_average(f)};
  r.weighted = {weighted_average(p, w), weighted_average(rc, w), weighted_average(f, w)};
  return r;
}

nlohmann::json ClassificationReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : classes)
    rows.push_back({{"class", c.name},
                    {"precision", c.precision},
                    {"recall", c.recall},
                    {"f1", c.f1},
                    {"support", c.support},
                    {"zero_support", c.zero_support}});
  return {{"classes", rows},
          {"accuracy", accuracy},
          {"total", total},
          {"macro_avg", metrics_json(macro)},
          {"weighted_avg", metrics_json(weighted)},
          {"confusion", confusion}};
}

std::string ClassificationReport::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s\n", "", "precision", "recall", "f1-score", "support");
  out += line;
  for (const auto& c : classes) {
    std::snprintf(line, sizeof line, "%-14s %9.4f %9.4f %9.4f %9ld%s\n", c.name.c_str(), c.precision, c.recall, c.f1,
                  c.support, c.zero_support ? "  (no samples)" : "");
    out += line;
  }
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9.4f %9ld\n", "accuracy", "", "", accuracy, total);
  out += line;
  std::snprintf(line, sizeof line, "%-14s %9.4f %9.4f %9.4f %9ld\n", "macro avg", macro.precision, macro.recall,
                macro.f1, total);
  out += line;
  std::snprintf(line, sizeof line, "%-14s %9.4f %9.4f %9.4f %9ld\n", "weighted avg", weighted.precision,
                weighted.recall, weighted.f1, total);
  out += line;
  return out;
}

}  // namespace oad
