#include "citlab/report.hpp"

#include "citlab/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace citlab {

namespace {

const char* kSummaryHeader = "setting,vary,value,method,metric,estimate,mc_se";

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

double parse_number(const std::string& cell, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw CsvValueError(where + ": '" + cell + "' is not a number");
  return v;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string bits(const std::vector<bool>& v) {
  std::string s;
  for (bool b : v) s += b ? '1' : '0';
  return s;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(3);
  o << v;
  return o.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows)
    out << r.setting << ',' << r.vary << ',' << format_double(r.value) << ',' << r.method << ','
        << r.metric << ',' << optional_cell(r.estimate) << ',' << optional_cell(r.mc_se) << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_summary_csv(rows, out);
}

std::vector<SummaryRow> read_summary_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw CsvFormatError(source + ": empty summary file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSummaryHeader) throw CsvFormatError(source + ": unexpected summary header");
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split_commas(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (c.size() != 7) throw CsvFormatError(where + ": expected 7 fields");
    SummaryRow r;
    r.setting = static_cast<int>(parse_number(c[0], where));
    r.vary = c[1];
    r.value = parse_number(c[2], where);
    r.method = c[3];
    r.metric = c[4];
    if (!c[5].empty()) r.estimate = parse_number(c[5], where);
    if (!c[6].empty()) r.mc_se = parse_number(c[6], where);
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  return read_summary_csv(in, path);
}

Json to_json(const std::vector<SummaryRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j{{"setting", r.setting}, {"vary", r.vary},     {"value", r.value},
           {"method", r.method},   {"metric", r.metric}};
    j["estimate"] = r.estimate ? Json(*r.estimate) : Json(nullptr);
    j["mc_se"] = r.mc_se ? Json(*r.mc_se) : Json(nullptr);
    arr.push_back(j);
  }
  return arr;
}

std::vector<SummaryRow> summary_from_json(const Json& j) {
  std::vector<SummaryRow> rows;
  for (const auto& e : j) {
    SummaryRow r;
    r.setting = e.at("setting").get<int>();
    r.vary = e.at("vary").get<std::string>();
    r.value = e.at("value").get<double>();
    r.method = e.at("method").get<std::string>();
    r.metric = e.at("metric").get<std::string>();
    if (!e.at("estimate").is_null()) r.estimate = e.at("estimate").get<double>();
    if (!e.at("mc_se").is_null()) r.mc_se = e.at("mc_se").get<double>();
    rows.push_back(r);
  }
  return rows;
}

void write_replicates_csv(const ResultStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << "setting,replicate,method,rejections,truth,seconds,shared_fit,ml_y_given_x,ml_x,"
         "ml_xj_given_rest,predict_xj_given_rest,predict_y_given_x,error\n";
  for (const auto& r : store.results) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    const CounterSnapshot& c = r.counters;
    out << r.setting << ',' << r.replicate << ',' << to_string(r.method) << ',' << bits(r.rejections)
        << ',' << bits(r.truth) << ',' << format_double(r.wall_time) << ',' << (r.shared_fit ? 1 : 0)
        << ',' << c.ml_y_given_x << ',' << c.ml_x << ',' << c.ml_xj_given_rest << ','
        << c.predict_xj_given_rest << ',' << c.predict_y_given_x << ',' << err << '\n';
  }
}

void write_timing_csv(const std::vector<TimingRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << "p,method,seconds,resamples,ml_y_given_x,ml_x,ml_xj_given_rest,predict_xj_given_rest,"
         "predict_y_given_x\n";
  for (const auto& r : rows) {
    const CounterSnapshot& c = r.counters;
    out << r.p << ',' << to_string(r.method) << ',' << format_double(r.seconds) << ',' << r.resamples
        << ',' << c.ml_y_given_x << ',' << c.ml_x << ',' << c.ml_xj_given_rest << ','
        << c.predict_xj_given_rest << ',' << c.predict_y_given_x << '\n';
  }
}

Json to_json(const EquivalenceReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"n", r.n},
              {"reps", r.reps},
              {"identity_max_abs_error", num(r.identity_max_abs_error)},
              {"decision_agreement_rate", num(r.decision_agreement_rate)},
              {"agreement_se", num(r.agreement_se)},
              {"ks_statistic", num(r.ks_statistic)},
              {"ks_pvalue", num(r.ks_pvalue)},
              {"level", num(r.level)},
              {"level_se", num(r.level_se)},
              {"hrt_level", num(r.hrt_level)},
              {"assumption_terms", r.assumption_terms}};
}

// ---------------------------------------------------------------------------

std::string render_svg(const std::vector<SummaryRow>& rows, const std::string& vary,
                       const std::string& metric) {
  std::map<std::string, std::vector<const SummaryRow*>> series;
  for (const auto& r : rows)
    if (r.vary == vary && r.metric == metric && r.estimate) series[r.method].push_back(&r);

  const double width = 640;
  const double height = 420;
  const double left = 70;
  const double right = 150;
  const double top = 40;
  const double bottom = 55;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (auto& [m, pts] : series) {
    std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->value < b->value; });
    for (const auto* r : pts) {
      const double se = r->mc_se.value_or(0.0);
      xmin = std::min(xmin, r->value);
      xmax = std::max(xmax, r->value);
      ymin = std::min(ymin, *r->estimate - 2 * se);
      ymax = std::max(ymax, *r->estimate + 2 * se);
    }
  }
  if (series.empty()) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (metric != "time") ymin = std::min(ymin, 0.0);
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  static const char* colors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(metric) << " vs " << escape(vary) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    s << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << fmt(xv)
      << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv)
      << "</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << sy(yv) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(yv)
      << "\" stroke=\"#ddd\"/>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
    << escape(vary) << "</text>\n";
  std::size_t k = 0;
  for (const auto& [method, pts] : series) {
    const char* color = colors[k % 6];
    s << "<g class=\"series\" data-method=\"" << escape(method) << "\">\n<polyline fill=\"none\" stroke=\""
      << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : pts) s << sx(r->value) << ',' << sy(*r->estimate) << ' ';
    s << "\"/>\n";
    for (const auto* r : pts) {
      const double se = r->mc_se.value_or(0.0);
      const double x = sx(r->value);
      s << "<line x1=\"" << x << "\" y1=\"" << sy(*r->estimate - 2 * se) << "\" x2=\"" << x << "\" y2=\""
        << sy(*r->estimate + 2 * se) << "\" stroke=\"" << color << "\"/>\n";
      s << "<circle cx=\"" << x << "\" cy=\"" << sy(*r->estimate) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 16 + 18 * static_cast<double>(k);
    s << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << escape(method) << "</text>\n</g>\n";
    ++k;
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<std::string> write_plots(const std::vector<SummaryRow>& rows, const std::string& dir) {
  std::set<std::pair<std::string, std::string>> panels;
  for (const auto& r : rows)
    if (r.estimate) panels.insert({r.vary, r.metric});
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& [vary, metric] : panels) {
    const std::string path = (std::filesystem::path(dir) / (vary + "_" + metric + ".svg")).string();
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << render_svg(rows, vary, metric);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace citlab
