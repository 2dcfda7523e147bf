#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dergcn {

struct MetricsReport {
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  std::vector<std::size_t> support;
  std::vector<double> per_class_accuracy;  // recall per class, 0/0 -> 0
  std::vector<double> per_class_f1;        // 0/0 -> 0
  double wa = 0.0;
  double wf1 = 0.0;
  std::size_t total = 0;
};

MetricsReport compute_metrics(const std::vector<int>& y_true,
                              const std::vector<int>& y_pred,
                              std::size_t num_classes);

// WF1 of the constant-majority predictor, closed form:
// p = support_max / N, F1 = 2p/(p+1), WF1 = p * F1
double majority_baseline_wf1(const std::vector<int>& labels,
                             std::size_t num_classes);
double majority_baseline_wa(const std::vector<int>& labels,
                            std::size_t num_classes);

std::string format_metrics(const MetricsReport& r);     // aligned text
std::string format_metrics_kv(const MetricsReport& r);  // key=value lines

}  // namespace dergcn
