#include "promissing/results.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "promissing/errors.hpp"
#include "text_util.hpp"

namespace promissing {

namespace {

std::string header_line() {
  std::string out;
  for (const auto& c : ResultTable::columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

double number_field(const std::string& s, std::size_t row, std::size_t col) {
  if (detail::lower(s) == "nan") return std::nan("");
  const auto v = detail::parse_double(s);
  if (!v) throw ParseError(row, col, "expected a number, got '" + s + "'");
  return *v;
}

std::uint64_t integer_field(const std::string& s, std::size_t row, std::size_t col) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError(row, col, "expected an integer, got '" + s + "'");
}

void check_text(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw ConfigError("result field '" + s + "' may not contain commas or newlines");
  }
}

}  // namespace

const std::vector<std::string>& ResultTable::columns() {
  static const std::vector<std::string> cols = {"experiment", "dataset", "mechanism", "fraction",
                                                "method",     "repetition", "fold", "step",
                                                "metric",     "value",   "seed"};
  return cols;
}

void ResultTable::append(const ResultTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "# promissing-results " << kResultsSchemaVersion << '\n' << header_line() << '\n';
  for (const auto& r : rows) {
    for (const auto* s : {&r.experiment, &r.dataset, &r.mechanism, &r.method, &r.metric}) {
      check_text(*s);
    }
    out << r.experiment << ',' << r.dataset << ',' << r.mechanism << ','
        << detail::format_double(r.fraction) << ',' << r.method << ',' << r.repetition << ','
        << r.fold << ',' << r.step << ',' << r.metric << ',' << detail::format_double(r.value)
        << ',' << r.seed << '\n';
  }
  return out.str();
}

ResultTable ResultTable::from_csv(const std::string& text) {
  const auto lines = detail::lines_of(text);
  std::size_t ln = 0;
  if (ln < lines.size() && !lines[ln].empty() && lines[ln][0] == '#') {
    const std::string expect = "# promissing-results " + std::to_string(kResultsSchemaVersion);
    if (lines[ln] != expect) throw IoError("unsupported results schema: " + lines[ln]);
    ++ln;
  }
  if (ln >= lines.size() || lines[ln] != header_line()) throw IoError("results header mismatch");
  ++ln;
  ResultTable t;
  for (; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto f = detail::split(lines[ln], ',');
    if (f.size() != columns().size()) throw ParseError(ln, 0, "wrong number of fields");
    ResultRow r;
    r.experiment = f[0];
    r.dataset = f[1];
    r.mechanism = f[2];
    r.fraction = number_field(f[3], ln, 3);
    r.method = f[4];
    r.repetition = integer_field(f[5], ln, 5);
    r.fold = integer_field(f[6], ln, 6);
    r.step = integer_field(f[7], ln, 7);
    r.metric = f[8];
    r.value = number_field(f[9], ln, 9);
    r.seed = integer_field(f[10], ln, 10);
    t.rows.push_back(std::move(r));
  }
  return t;
}

void ResultTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
}

ResultTable ResultTable::read(const std::filesystem::path& path) {
  return from_csv(detail::read_file(path.string()));
}

std::vector<ResultRow> ResultTable::select(const std::string& method,
                                           const std::string& metric) const {
  std::vector<ResultRow> out;
  for (const auto& r : rows) {
    if (r.method == method && r.metric == metric) out.push_back(r);
  }
  return out;
}

std::string plot_csv(const std::vector<PlotPoint>& points) {
  std::ostringstream out;
  out << "curve_id,x,y,y_std\n";
  for (const auto& p : points) {
    out << p.curve_id << ',' << detail::format_double(p.x) << ',' << detail::format_double(p.y)
        << ',' << detail::format_double(p.y_std) << '\n';
  }
  return out.str();
}

void write_plot_csv(const std::vector<PlotPoint>& points, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << plot_csv(points);
}

std::vector<PlotPoint> learning_curves(const ResultTable& table) {
  using Key = std::tuple<std::string, std::size_t>;
  std::map<Key, std::vector<double>> groups;
  std::vector<std::string> order;
  for (const auto& r : table.rows) {
    std::string id = r.dataset + "/" + r.mechanism + "/" + detail::format_double(r.fraction) +
                     "/" + r.method + "/" + r.metric;
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
    groups[{id, r.step}].push_back(r.value);
  }
  std::vector<PlotPoint> out;
  for (const auto& id : order) {
    for (auto it = groups.lower_bound({id, 0}); it != groups.end() && std::get<0>(it->first) == id;
         ++it) {
      const auto& v = it->second;
      const double m = mean(v);
      double ss = 0.0;
      for (const double x : v) ss += (x - m) * (x - m);
      out.push_back({id, static_cast<double>(std::get<1>(it->first)), m,
                     std::sqrt(ss / static_cast<double>(v.size()))});
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return std::nan("");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace promissing
