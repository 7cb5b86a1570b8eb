#pragma once

#include "citlab/config.hpp"
#include "citlab/equivalence.hpp"
#include "citlab/simbench.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace citlab {

/// Schema: setting,vary,value,method,metric,estimate,mc_se. Absent values
/// are blank cells.
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);
std::vector<SummaryRow> read_summary_csv(std::istream& in, const std::string& source = "<stream>");
std::vector<SummaryRow> read_summary_csv(const std::string& path);

Json to_json(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> summary_from_json(const Json& j);

/// One row per (setting, replicate, method) with 0/1 strings for the
/// rejection and truth vectors.
void write_replicates_csv(const ResultStore& store, const std::string& path);

void write_timing_csv(const std::vector<TimingRow>& rows, const std::string& path);

Json to_json(const EquivalenceReport& r);

/// Line chart of one metric against one varied parameter; one series per
/// method with +-2 SE error bars. Rows without an estimate are skipped.
std::string render_svg(const std::vector<SummaryRow>& rows, const std::string& vary,
                       const std::string& metric);

/// Writes <dir>/<vary>_<metric>.svg for every combination with data and
/// returns the paths.
std::vector<std::string> write_plots(const std::vector<SummaryRow>& rows, const std::string& dir);

}  // namespace citlab
