#include <gtest/gtest.h>

#include <sstream>

#include "tracknet/evalkit.hpp"

using namespace tracknet;
using namespace tracknet::eval;

namespace {

Tensor4 plane(int h, int w) { return Tensor4(Shape{1, 1, h, w}); }

}  // namespace

TEST(Extract, WeightedCentroidOfSingleBlob) {
  Tensor4 m = plane(10, 10);
  m.at(0, 0, 4, 4) = 0.9;
  m.at(0, 0, 4, 5) = 0.6;
  const Detection d = extract_coordinate(m, {});
  ASSERT_TRUE(d.center);
  EXPECT_NEAR(d.center->x, (4 * 0.9 + 5 * 0.6) / 1.5, 1e-12);
  EXPECT_NEAR(d.center->y, 4.0, 1e-12);
  EXPECT_EQ(d.peak, 0.9);
}

TEST(Extract, LargestComponentWins) {
  Tensor4 m = plane(10, 10);
  m.at(0, 0, 1, 1) = 0.99;  // small but bright
  for (int x = 5; x < 8; ++x) m.at(0, 0, 7, x) = 0.7;
  const Detection d = extract_coordinate(m, {});
  ASSERT_TRUE(d.center);
  EXPECT_NEAR(d.center->x, 6.0, 1e-12);
  EXPECT_NEAR(d.center->y, 7.0, 1e-12);
}

TEST(Extract, DiagonalNeighboursAreConnected) {
  Tensor4 m = plane(6, 6);
  m.at(0, 0, 0, 0) = 0.8;
  m.at(0, 0, 1, 1) = 0.8;
  m.at(0, 0, 4, 4) = 0.9;
  const Detection d = extract_coordinate(m, {});
  EXPECT_NEAR(d.center->x, 0.5, 1e-12);
}

TEST(Extract, TiesBreakTowardHigherPeakThenScanOrder) {
  Tensor4 m = plane(6, 6);
  m.at(0, 0, 0, 0) = 0.7;
  m.at(0, 0, 4, 4) = 0.8;
  EXPECT_NEAR(extract_coordinate(m, {}).center->x, 4.0, 1e-12);
  m.at(0, 0, 4, 4) = 0.7;
  EXPECT_NEAR(extract_coordinate(m, {}).center->x, 0.0, 1e-12);
}

TEST(Extract, ThresholdIsStrict) {
  Tensor4 m = plane(4, 4);
  m.at(0, 0, 2, 2) = 0.5;
  EXPECT_FALSE(extract_coordinate(m, {}).center);
  m.at(0, 0, 2, 2) = 0.5000001;
  EXPECT_TRUE(extract_coordinate(m, {}).center);
}

TEST(Extract, ScalesToOriginalResolution) {
  Tensor4 m = plane(4, 4);
  m.at(0, 0, 1, 3) = 0.9;
  EvalConfig cfg;
  cfg.scale_x = 2.0;
  cfg.scale_y = 3.0;
  const Detection d = extract_coordinate(m, cfg, 7);
  EXPECT_EQ(d.frame, 7);
  EXPECT_DOUBLE_EQ(d.center->x, 6.0);
  EXPECT_DOUBLE_EQ(d.center->y, 3.0);
}

TEST(Extract, RejectsMultiChannelInput) {
  EXPECT_THROW(extract_coordinate(Tensor4(Shape{1, 2, 4, 4}), {}), TensorError);
}

TEST(Classify, FiveWayOutcomes) {
  const EvalConfig cfg;
  const supervision::GroundTruthSpec vis{10, 10, 3, true};
  const supervision::GroundTruthSpec hidden{0, 0, 3, false};
  EXPECT_EQ(classify_frame({0, Point{13, 10}, 1}, vis, cfg), Outcome::tp);
  EXPECT_EQ(classify_frame({0, Point{14, 10}, 1}, vis, cfg), Outcome::tp);  // exactly at tolerance
  EXPECT_EQ(classify_frame({0, Point{14.01, 10}, 1}, vis, cfg), Outcome::fp1);
  EXPECT_EQ(classify_frame({0, Point{5, 5}, 1}, hidden, cfg), Outcome::fp2);
  EXPECT_EQ(classify_frame({0, std::nullopt, 0}, hidden, cfg), Outcome::tn);
  EXPECT_EQ(classify_frame({0, std::nullopt, 0}, vis, cfg), Outcome::fn);
}

TEST(Metrics, PublishedRowArithmetic) {
  ConfusionCounts c{16573, 116, 13, 636, 344};
  EXPECT_EQ(c.total(), 17682);
  EXPECT_EQ(c.fp(), 129);
  const Metrics m = compute_metrics(c);
  EXPECT_DOUBLE_EQ(m.accuracy, 17209.0 / 17682.0);
  EXPECT_NEAR(m.precision, 0.9923, 5e-5);
  EXPECT_NEAR(m.recall, 0.9797, 5e-5);
  EXPECT_NEAR(m.f1, 0.9859, 5e-5);
}

TEST(Metrics, ZeroDenominatorsAreFlagged) {
  const Metrics m = compute_metrics({0, 0, 0, 5, 0});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_TRUE(m.precision_undefined);
  EXPECT_TRUE(m.recall_undefined);
  EXPECT_TRUE(m.f1_undefined);
  EXPECT_EQ(m.precision, 0.0);
  const Metrics e = compute_metrics({});
  EXPECT_TRUE(e.accuracy_undefined);
}

TEST(Metrics, CountsAccumulate) {
  ConfusionCounts c;
  for (const Outcome o : {Outcome::tp, Outcome::tp, Outcome::fp1, Outcome::fp2, Outcome::tn, Outcome::fn}) c.add(o);
  EXPECT_EQ(c, (ConfusionCounts{2, 1, 1, 1, 1}));
  c += c;
  EXPECT_EQ(c.total(), 12);
}

TEST(Report, CsvAndTableLayout) {
  const std::vector<ReportRow> rows{{"v5", {16573, 116, 13, 636, 344}}};
  std::ostringstream csv;
  write_report_csv(csv, rows);
  EXPECT_EQ(csv.str(),
            "model,acc,precision,recall,f1,total,tp,fp1,fp2,fp,tn,fn\n"
            "v5,0.973250,0.992276,0.979665,0.985931,17682,16573,116,13,129,636,344\n");
  std::ostringstream table;
  write_report_table(table, rows);
  EXPECT_NE(table.str().find("0.9923"), std::string::npos);
  EXPECT_NE(table.str().find("Precision"), std::string::npos);
}
