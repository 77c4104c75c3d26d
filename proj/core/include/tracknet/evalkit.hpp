#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tracknet/supervision.hpp"
#include "tracknet/tensor.hpp"

namespace tracknet::eval {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Detection {
  int frame = 0;
  std::optional<Point> center;  // original-resolution pixels
  double peak = 0.0;
};

enum class Outcome { tp, fp1, fp2, tn, fn };

std::string_view to_string(Outcome o);

struct ConfusionCounts {
  long tp = 0;
  long fp1 = 0;
  long fp2 = 0;
  long tn = 0;
  long fn = 0;

  [[nodiscard]] long fp() const { return fp1 + fp2; }
  [[nodiscard]] long total() const { return tp + fp1 + fp2 + tn + fn; }
  void add(Outcome o);
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

struct EvalConfig {
  double tolerance = 4.0;
  double threshold = 0.5;
  double scale_x = 1.0;  // model -> original resolution
  double scale_y = 1.0;
};

void validate(const EvalConfig& cfg);

/// Largest 8-connected component of pixels strictly above the threshold,
/// reduced to its intensity-weighted centroid. Equal areas break toward the
/// higher peak, then the component met first in scan order.
/// `heatmap` is (1, 1, H, W) or any tensor with a single channel plane.
Detection extract_coordinate(const Tensor4& heatmap, const EvalConfig& cfg, int frame = 0);

/// `gt` is at original resolution.
Outcome classify_frame(const Detection& pred, const supervision::GroundTruthSpec& gt, const EvalConfig& cfg);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool accuracy_undefined = false;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

/// Zero denominators give 0 with the matching undefined flag set.
Metrics compute_metrics(const ConfusionCounts& c);

struct ReportRow {
  std::string model;
  ConfusionCounts counts;
};

/// Fixed-width table: Model Acc Precision Recall F1 Total TP FP1 FP2 FP TN FN.
void write_report_table(std::ostream& os, const std::vector<ReportRow>& rows);
/// Header model,acc,precision,recall,f1,total,tp,fp1,fp2,fp,tn,fn.
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);

}  // namespace tracknet::eval
