#include "dergcn/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "dergcn/errors.hpp"

namespace dergcn {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

MetricsReport compute_metrics(const std::vector<int>& y_true,
                              const std::vector<int>& y_pred,
                              std::size_t num_classes) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw DimensionMismatch("compute_metrics: label/prediction counts");
  }
  MetricsReport r;
  r.total = y_true.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || static_cast<std::size_t>(y_true[i]) >= num_classes ||
        y_pred[i] < 0 || static_cast<std::size_t>(y_pred[i]) >= num_classes) {
      throw DimensionMismatch("compute_metrics: class index out of range");
    }
    ++r.confusion[static_cast<std::size_t>(y_true[i])]
                 [static_cast<std::size_t>(y_pred[i])];
  }

  r.support.resize(num_classes);
  r.per_class_accuracy.resize(num_classes);
  r.per_class_f1.resize(num_classes);
  std::size_t correct = 0;
  double wf1_acc = 0.0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t sup = 0, predicted = 0;
    for (std::size_t j = 0; j < num_classes; ++j) {
      sup += r.confusion[k][j];
      predicted += r.confusion[j][k];
    }
    r.support[k] = sup;
    std::size_t diag = r.confusion[k][k];
    correct += diag;
    double recall = sup == 0 ? 0.0
                             : static_cast<double>(diag) /
                                   static_cast<double>(sup);
    double precision = predicted == 0
                           ? 0.0
                           : static_cast<double>(diag) /
                                 static_cast<double>(predicted);
    r.per_class_accuracy[k] = recall;
    r.per_class_f1[k] = (precision + recall) == 0.0
                            ? 0.0
                            : 2.0 * precision * recall / (precision + recall);
    wf1_acc += static_cast<double>(sup) * r.per_class_f1[k];
  }
  r.wa = static_cast<double>(correct) / static_cast<double>(r.total);
  r.wf1 = wf1_acc / static_cast<double>(r.total);
  return r;
}

double majority_baseline_wa(const std::vector<int>& labels,
                            std::size_t num_classes) {
  std::vector<std::size_t> support(num_classes, 0);
  for (int y : labels) ++support[static_cast<std::size_t>(y)];
  std::size_t best = *std::max_element(support.begin(), support.end());
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

double majority_baseline_wf1(const std::vector<int>& labels,
                             std::size_t num_classes) {
  double p = majority_baseline_wa(labels, num_classes);
  double f1 = 2.0 * p / (p + 1.0);
  return p * f1;
}

std::string format_metrics(const MetricsReport& r) {
  std::ostringstream os;
  os << "class   support  accuracy      f1\n";
  for (std::size_t k = 0; k < r.support.size(); ++k) {
    os << k;
    std::string sup = std::to_string(r.support[k]);
    os << std::string(12 - 1 - sup.size(), ' ') << sup;
    char buf[32];
    snprintf(buf, sizeof(buf), "%10.4f%8.4f", r.per_class_accuracy[k],
             r.per_class_f1[k]);
    os << buf << '\n';
  }
  char buf[64];
  snprintf(buf, sizeof(buf), "WA  %.6f\nWF1 %.6f\n", r.wa, r.wf1);
  os << buf;
  os << "confusion (rows = true class):\n";
  for (const auto& row : r.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      os << (j ? " " : "") << row[j];
    }
    os << '\n';
  }
  return os.str();
}

std::string format_metrics_kv(const MetricsReport& r) {
  std::ostringstream os;
  os << "total=" << r.total << '\n';
  os << "wa=" << shortest(r.wa) << '\n';
  os << "wf1=" << shortest(r.wf1) << '\n';
  for (std::size_t k = 0; k < r.support.size(); ++k) {
    os << "class." << k << ".support=" << r.support[k] << '\n';
    os << "class." << k << ".accuracy=" << shortest(r.per_class_accuracy[k])
       << '\n';
    os << "class." << k << ".f1=" << shortest(r.per_class_f1[k]) << '\n';
  }
  for (std::size_t k = 0; k < r.confusion.size(); ++k) {
    os << "confusion." << k << '=';
    for (std::size_t j = 0; j < r.confusion[k].size(); ++j) {
      os << (j ? ";" : "") << r.confusion[k][j];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dergcn
