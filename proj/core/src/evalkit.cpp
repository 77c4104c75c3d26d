#include "tracknet/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tracknet::eval {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::tp: return "TP";
    case Outcome::fp1: return "FP1";
    case Outcome::fp2: return "FP2";
    case Outcome::tn: return "TN";
    case Outcome::fn: return "FN";
  }
  return "?";
}

void ConfusionCounts::add(Outcome o) {
  switch (o) {
    case Outcome::tp: ++tp; break;
    case Outcome::fp1: ++fp1; break;
    case Outcome::fp2: ++fp2; break;
    case Outcome::tn: ++tn; break;
    case Outcome::fn: ++fn; break;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp1 += o.fp1;
  fp2 += o.fp2;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

void validate(const EvalConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("eval: tolerance must be positive");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw std::invalid_argument("eval: threshold must be in (0, 1)");
  if (!(cfg.scale_x > 0.0 && cfg.scale_y > 0.0)) throw std::invalid_argument("eval: scale factors must be positive");
}

Detection extract_coordinate(const Tensor4& heatmap, const EvalConfig& cfg, int frame) {
  const Shape s = heatmap.shape();
  if (s.n * s.c != 1) throw TensorError("extract_coordinate: expected a single heatmap plane, got " + s.str());
  const int h = s.h;
  const int w = s.w;
  const auto& v = heatmap.values();

  Detection best{frame, std::nullopt, 0.0};
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  std::vector<int> stack;
  std::size_t best_area = 0;
  int next_label = 0;

  for (int start = 0; start < h * w; ++start) {
    if (!(v[start] > cfg.threshold) || label[start] >= 0) continue;
    const int id = next_label++;
    label[start] = id;
    stack.assign(1, start);
    std::size_t area = 0;
    double mass = 0.0, mx = 0.0, my = 0.0, peak = 0.0;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int py = p / w;
      const int px = p % w;
      ++area;
      mass += v[p];
      mx += v[p] * px;
      my += v[p] * py;
      peak = std::max(peak, v[p]);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qy = py + dy;
          const int qx = px + dx;
          if (qy < 0 || qy >= h || qx < 0 || qx >= w) continue;
          const int q = qy * w + qx;
          if (label[q] < 0 && v[q] > cfg.threshold) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
    if (area > best_area || (area == best_area && peak > best.peak)) {
      best_area = area;
      best.peak = peak;
      best.center = Point{mx / mass * cfg.scale_x, my / mass * cfg.scale_y};
    }
  }
  return best;
}

Outcome classify_frame(const Detection& pred, const supervision::GroundTruthSpec& gt, const EvalConfig& cfg) {
  if (!gt.visible) return pred.center ? Outcome::fp2 : Outcome::tn;
  if (!pred.center) return Outcome::fn;
  const double dist = std::hypot(pred.center->x - gt.cx, pred.center->y - gt.cy);
  return dist <= cfg.tolerance ? Outcome::tp : Outcome::fp1;
}

namespace {

double ratio(double num, long den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : num / static_cast<double>(den);
}

}  // namespace

Metrics compute_metrics(const ConfusionCounts& c) {
  Metrics m;
  m.accuracy = ratio(static_cast<double>(c.tp + c.tn), c.total(), m.accuracy_undefined);
  m.precision = ratio(static_cast<double>(c.tp), c.tp + c.fp1 + c.fp2, m.precision_undefined);
  m.recall = ratio(static_cast<double>(c.tp), c.tp + c.fn, m.recall_undefined);
  const double pr = m.precision + m.recall;
  m.f1_undefined = m.precision_undefined || m.recall_undefined || pr == 0.0;
  m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / pr;
  return m;
}

namespace {

std::string metric_text(double value, bool undefined) {
  if (undefined) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

}  // namespace

void write_report_table(std::ostream& os, const std::vector<ReportRow>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %9s %7s %7s %6s %6s %6s %6s %6s\n", "Model", "Acc",
                "Precision", "Recall", "F1", "Total", "TP", "FP1", "FP2", "FP", "TN", "FN");
  os << line;
  for (const auto& r : rows) {
    const Metrics m = compute_metrics(r.counts);
    const auto& c = r.counts;
    std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %9s %7ld %7ld %6ld %6ld %6ld %6ld %6ld\n", r.model.c_str(),
                  metric_text(m.accuracy, m.accuracy_undefined).c_str(),
                  metric_text(m.precision, m.precision_undefined).c_str(),
                  metric_text(m.recall, m.recall_undefined).c_str(), metric_text(m.f1, m.f1_undefined).c_str(),
                  c.total(), c.tp, c.fp1, c.fp2, c.fp(), c.tn, c.fn);
    os << line;
  }
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "model,acc,precision,recall,f1,total,tp,fp1,fp2,fp,tn,fn\n";
  char buf[64];
  for (const auto& r : rows) {
    const Metrics m = compute_metrics(r.counts);
    const auto& c = r.counts;
    os << r.model;
    for (const double x : {m.accuracy, m.precision, m.recall, m.f1}) {
      std::snprintf(buf, sizeof buf, ",%.6f", x);
      os << buf;
    }
    os << ',' << c.total() << ',' << c.tp << ',' << c.fp1 << ',' << c.fp2 << ',' << c.fp() << ',' << c.tn << ','
       << c.fn << '\n';
  }
}

}  // namespace tracknet::eval
