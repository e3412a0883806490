#pragma once

#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

namespace oad {

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
  bool zero_support = false;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> classes;
  std::vector<std::vector<long>> confusion;  // [true][pred]
  double accuracy = 0.0;
  long total = 0;
  AveragedMetrics macro;
  AveragedMetrics weighted;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Ratios with a zero denominator are 0. Classes without true samples are
/// flagged and still enter the macro average.
ClassificationReport classification_report(std::span<const std::string> truth, std::span<const std::string> pred,
                                           const std::vector<std::string>& class_order);

double harmonic_mean(double a, double b);
double macro_average(std::span<const double> values);
double weighted_average(std::span<const double> values, std::span<const double> weights);

}  // namespace oad
