#include "bolab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "bolab/error.hpp"

namespace bolab {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool matches(const ReportRow& r, const std::string& regime, int j, int k) {
  return r.regime == regime && (j == 0 || r.j == j) && (k < 0 || r.k_or_alpha == k);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IOError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IOError, "write to " + path.string() + " failed");
}

std::string series_name(const std::string& regime, int j, int k, bool surface) {
  std::string s = regime;
  if (j > 0) s += " j=" + std::to_string(j);
  if (k >= 0) s += std::string(surface ? " alpha=" : " k=") + std::to_string(k);
  return s;
}

}  // namespace

bool ExperimentReport::passed() const {
  return failure.empty() && !verdicts.empty() &&
         std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

bool SweepReport::passed() const {
  return std::all_of(experiments.begin(), experiments.end(), [](const ExperimentReport& e) { return e.passed(); });
}

bool SweepReport::computation_failed() const {
  return std::any_of(experiments.begin(), experiments.end(),
                     [](const ExperimentReport& e) { return !e.failure.empty(); });
}

void sort_rows(std::vector<ReportRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& l, const ReportRow& r) {
    if (l.h != r.h) return l.h > r.h;
    return std::tie(l.regime, l.j, l.k_or_alpha, l.ell) < std::tie(r.regime, r.j, r.k_or_alpha, r.ell);
  });
}

FitRecord fit_rows(const std::vector<ReportRow>& rows, const std::string& regime, int j, int k_or_alpha,
                   bool use_hbar, double claimed) {
  FitRecord rec;
  rec.regime = regime;
  rec.j = j;
  rec.k_or_alpha = k_or_alpha;
  rec.series = series_name(regime, j, k_or_alpha, regime == "surface");
  rec.variable = use_hbar ? "hbar" : "h";
  rec.claimed = claimed;
  std::vector<std::pair<double, double>> points;
  int positive = 0;
  int negative = 0;
  for (const ReportRow& r : rows) {
    if (!matches(r, regime, j, k_or_alpha)) continue;
    if (r.disc_budget > 0.1 * std::abs(r.error)) {
      ++rec.excluded;
      continue;
    }
    points.emplace_back(use_hbar ? r.hbar : r.h, std::abs(r.error));
    if (r.error > 0.0) ++positive;
    if (r.error < 0.0) ++negative;
  }
  rec.used = points.size();
  if (positive > 0 && negative > 0) {
    rec.diagnostic = "errors change sign across the sweep (predicted crossing); slope not fitted";
    return rec;
  }
  try {
    rec.fit = fit_slope(points);
  } catch (const Error& e) {
    rec.diagnostic = std::string(to_string(e.code())) + ": " + e.what();
  }
  return rec;
}

std::string format_csv(const std::vector<ReportRow>& rows, bool surface) {
  std::ostringstream out;
  out << kCsvHeader;
  if (surface) out << kSurfaceColumns;
  out << '\n';
  for (const ReportRow& r : rows) {
    out << r.regime << ',' << r.j << ',' << r.k_or_alpha << ',' << num(r.h) << ',' << num(r.hbar) << ','
        << num(r.predicted) << ',' << num(r.computed) << ',' << num(r.error) << ',' << num(r.disc_budget);
    if (surface) out << ',' << r.m << ',' << r.alpha << ',' << r.ell << ',' << num(r.theta_min);
    out << '\n';
  }
  return out.str();
}

std::vector<ReportRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IOError, "empty CSV");
  bool surface = false;
  if (line == std::string(kCsvHeader) + kSurfaceColumns) {
    surface = true;
  } else if (line != kCsvHeader) {
    throw Error(ErrorCode::IOError, "unexpected CSV header: " + line);
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != (surface ? 13u : 9u)) throw Error(ErrorCode::IOError, "malformed CSV row: " + line);
    ReportRow r;
    r.regime = f[0];
    r.j = std::stoi(f[1]);
    r.k_or_alpha = std::stoi(f[2]);
    r.h = std::stod(f[3]);
    r.hbar = std::stod(f[4]);
    r.predicted = std::stod(f[5]);
    r.computed = std::stod(f[6]);
    r.error = std::stod(f[7]);
    r.disc_budget = std::stod(f[8]);
    if (surface) {
      r.m = std::stoi(f[9]);
      r.alpha = std::stoi(f[10]);
      r.ell = std::stoi(f[11]);
      r.theta_min = std::stod(f[12]);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string format_json(const SweepReport& report) {
  using nlohmann::ordered_json;
  ordered_json root;
  root["config"] = report.config_path;
  root["config_hash"] = report.config_hash;
  root["seed"] = report.seed;
  root["started"] = report.started;
  root["finished"] = report.finished;
  root["passed"] = report.passed();
  ordered_json exps = ordered_json::array();
  for (const ExperimentReport& e : report.experiments) {
    ordered_json je;
    je["name"] = e.name;
    je["type"] = e.type;
    je["passed"] = e.passed();
    je["seconds"] = e.seconds;
    if (!e.failure.empty()) je["failure"] = e.failure;
    je["notes"] = e.notes;
    ordered_json rows = ordered_json::array();
    for (const ReportRow& r : e.rows) {
      ordered_json jr{{"regime", r.regime}, {"j", r.j},           {"k_or_alpha", r.k_or_alpha},
                      {"h", r.h},           {"hbar", r.hbar},     {"predicted", r.predicted},
                      {"computed", r.computed}, {"error", r.error}, {"disc_budget", r.disc_budget}};
      if (e.surface()) {
        jr["m"] = r.m;
        jr["alpha"] = r.alpha;
        jr["ell"] = r.ell;
        jr["theta_min"] = r.theta_min;
      }
      rows.push_back(std::move(jr));
    }
    je["rows"] = std::move(rows);
    ordered_json fits = ordered_json::array();
    for (const FitRecord& f : e.fits) {
      ordered_json jf{{"series", f.series}, {"variable", f.variable}, {"claimed", f.claimed},
                      {"used", f.used},     {"excluded", f.excluded}};
      if (f.fit) {
        jf["slope"] = f.fit->slope;
        jf["intercept"] = f.fit->intercept;
        jf["residual"] = f.fit->residual;
        jf["notes"] = f.fit->notes;
      }
      if (!f.diagnostic.empty()) jf["diagnostic"] = f.diagnostic;
      fits.push_back(std::move(jf));
    }
    je["fits"] = std::move(fits);
    ordered_json verdicts = ordered_json::array();
    for (const Verdict& v : e.verdicts) {
      verdicts.push_back(
          {{"name", v.name}, {"pass", v.pass}, {"measured", v.measured}, {"threshold", v.threshold}, {"detail", v.detail}});
    }
    je["verdicts"] = std::move(verdicts);
    exps.push_back(std::move(je));
  }
  root["experiments"] = std::move(exps);
  return root.dump(2) + "\n";
}

std::string format_plot(const ExperimentReport& e, const std::string& csv_name) {
  std::ostringstream out;
  out << "# error against the small parameter, log-log\n";
  out << "set datafile separator ','\n";
  out << "set logscale xy\n";
  out << "set key left top\n";
  out << "set xlabel '" << (e.surface() ? "h" : "hbar") << "'\n";
  out << "set ylabel '|computed - predicted|'\n";
  out << "set title '" << e.name << "'\n";
  std::vector<std::string> items;
  int index = 0;
  for (const FitRecord& f : e.fits) {
    const int column = f.variable == "hbar" ? 5 : 4;
    std::ostringstream cond;
    cond << "strcol(1) eq '" << f.regime << "'";
    if (f.j > 0) cond << " && $2 == " << f.j;
    if (f.k_or_alpha >= 0) cond << " && $3 == " << f.k_or_alpha;
    std::ostringstream item;
    item << "'" << csv_name << "' skip 1 using (" << cond.str() << " ? $" << column << " : 1/0):(abs($8)) with linespoints title '"
         << f.series << "'";
    items.push_back(item.str());
    if (f.fit) {
      out << "ref" << index << "(x) = exp(" << num(f.fit->intercept) << ") * x**" << num(f.claimed) << "\n";
      items.push_back("ref" + std::to_string(index) + "(x) with lines dashtype 2 title '" + f.series + " slope " +
                      num(f.claimed) + "'");
      ++index;
    }
  }
  if (items.empty()) {
    out << "plot '" << csv_name << "' skip 1 using " << (e.surface() ? 4 : 5) << ":(abs($8)) title 'all rows'\n";
  } else {
    out << "plot ";
    for (std::size_t i = 0; i < items.size(); ++i) out << (i ? ", \\\n     " : "") << items[i];
    out << "\n";
  }
  return out.str();
}

std::vector<std::filesystem::path> emit(const SweepReport& report, const std::filesystem::path& dir, bool plot) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IOError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const ExperimentReport& e : report.experiments) {
    const std::string csv = e.name + ".csv";
    write_file(dir / csv, format_csv(e.rows, e.surface()));
    written.push_back(dir / csv);
    if (plot) {
      write_file(dir / (e.name + ".gp"), format_plot(e, csv));
      written.push_back(dir / (e.name + ".gp"));
    }
  }
  write_file(dir / "report.json", format_json(report));
  written.push_back(dir / "report.json");
  return written;
}

}  // namespace bolab
