#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace promissing {

inline constexpr int kResultsSchemaVersion = 1;

struct ResultRow {
  std::string experiment;
  std::string dataset;
  std::string mechanism;
  double fraction = 0.0;
  std::string method;
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::size_t step = 0;  // epoch for learning curves, 0 otherwise
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ResultRow&) const = default;
};

// Rows as written to disk. The file starts with `# promissing-results 1`
// followed by the header line; numbers use %.17g so a read gives back
// exactly what was written (NaN included).
struct ResultTable {
  std::vector<ResultRow> rows;

  static const std::vector<std::string>& columns();

  void append(const ResultTable& other);
  std::string to_csv() const;
  static ResultTable from_csv(const std::string& text);
  void write(const std::filesystem::path& path) const;
  static ResultTable read(const std::filesystem::path& path);

  std::vector<ResultRow> select(const std::string& method, const std::string& metric) const;
};

struct PlotPoint {
  std::string curve_id;
  double x = 0.0;
  double y = 0.0;
  double y_std = 0.0;
};

// Tidy plotting data: curve_id,x,y,y_std.
std::string plot_csv(const std::vector<PlotPoint>& points);
void write_plot_csv(const std::vector<PlotPoint>& points, const std::filesystem::path& path);

// Averages `value` over repetitions and folds for every
// (dataset, mechanism, fraction, method, metric) curve, with step as x.
// y_std is the population standard deviation.
std::vector<PlotPoint> learning_curves(const ResultTable& table);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

}  // namespace promissing
