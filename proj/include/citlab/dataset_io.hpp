#pragma once

#include "citlab/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace citlab {

/// CSV structure problems (ragged rows, missing header or response column).
class CsvFormatError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A cell that does not parse as a number.
class CsvValueError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A column containing NaN or infinite values.
class NonFiniteColumnError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Comma-separated file with a header row. The column named `response`
/// becomes Y; all remaining columns are predictors, in file order.
Dataset read_dataset_csv(const std::string& path, const std::string& response = "y");
Dataset parse_dataset_csv(std::istream& in, const std::string& response = "y",
                          const std::string& source = "<stream>");
void write_dataset_csv(const Dataset& data, const std::string& path);

/// Columns: variable, method, statistic, pvalue, reject, seconds,
/// degenerate, then the five cost counters. `reject` is the Bonferroni
/// decision at `alpha` within each run.
void write_results_csv(const std::vector<TestRun>& runs, const std::vector<std::string>& names,
                       double alpha, const std::string& path);
void write_results_csv(const std::vector<TestRun>& runs, const std::vector<std::string>& names,
                       double alpha, std::ostream& out);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace citlab
