#include "citlab/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace citlab {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r\"");
    const auto b = cell.find_last_not_of(" \t\r\"");
    out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last)
    throw CsvValueError(where + ": '" + cell + "' is not a number");
  return v;
}

}  // namespace

Dataset parse_dataset_csv(std::istream& in, const std::string& response, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw CsvFormatError(source + ": empty file, expected a header row");
  const std::vector<std::string> header = split_line(line);
  Index y_col = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k].empty()) throw CsvFormatError(source + ": empty column name in header");
    if (header[k] == response) {
      if (y_col >= 0) throw CsvFormatError(source + ": response column '" + response + "' appears twice");
      y_col = static_cast<Index>(k);
    }
  }
  if (y_col < 0) throw CsvFormatError(source + ": no response column '" + response + "' in header");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw CsvFormatError(source + ": line " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(header.size()));
    std::vector<double> row;
    for (std::size_t k = 0; k < cells.size(); ++k)
      row.push_back(parse_cell(cells[k], source + ":" + std::to_string(line_no) + " column '" +
                                             header[k] + "'"));
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(header.size()) - 1;
  MatrixXd x(n, p);
  VectorXd y(n);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < header.size(); ++k)
    if (static_cast<Index>(k) != y_col) names.push_back(header[k]);
  for (Index i = 0; i < n; ++i) {
    Index c = 0;
    for (Index k = 0; k <= p; ++k) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      if (k == y_col) y(i) = v;
      else x(i, c++) = v;
    }
  }
  for (std::size_t k = 0; k < header.size(); ++k) {
    const bool finite = static_cast<Index>(k) == y_col
                            ? y.allFinite()
                            : x.col(static_cast<Index>(k) - (static_cast<Index>(k) > y_col)).allFinite();
    if (!finite) throw NonFiniteColumnError(source + ": column '" + header[k] + "' contains NaN or Inf");
  }
  Dataset d(std::move(x), std::move(y), std::move(names));
  d.validate();
  return d;
}

Dataset read_dataset_csv(const std::string& path, const std::string& response) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  return parse_dataset_csv(in, response, path);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  const auto names = data.column_names.empty() ? default_column_names(data.cols()) : data.column_names;
  for (const auto& n : names) out << n << ',';
  out << "y\n";
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index k = 0; k < data.cols(); ++k) out << format_double(data.x(i, k)) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

void write_results_csv(const std::vector<TestRun>& runs, const std::vector<std::string>& names,
                       double alpha, std::ostream& out) {
  out << "variable,method,statistic,pvalue,reject,seconds,degenerate,ml_y_given_x,ml_x,"
         "ml_xj_given_rest,predict_xj_given_rest,predict_y_given_x\n";
  for (const auto& run : runs) {
    const auto reject = bonferroni_select(run.pvalues(), alpha);
    for (std::size_t k = 0; k < run.outcomes.size(); ++k) {
      const TestOutcome& o = run.outcomes[k];
      const auto j = static_cast<std::size_t>(o.variable_index);
      const std::string name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
      const CounterSnapshot& c = o.counters;
      out << name << ',' << to_string(run.method) << ',' << format_double(o.statistic) << ','
          << format_double(o.pvalue) << ',' << (reject[k] ? 1 : 0) << ',' << format_double(o.wall_time)
          << ',' << (o.degenerate ? 1 : 0) << ',' << c.ml_y_given_x << ',' << c.ml_x << ','
          << c.ml_xj_given_rest << ',' << c.predict_xj_given_rest << ',' << c.predict_y_given_x << '\n';
    }
  }
}

void write_results_csv(const std::vector<TestRun>& runs, const std::vector<std::string>& names,
                       double alpha, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_results_csv(runs, names, alpha, out);
}

}  // namespace citlab
