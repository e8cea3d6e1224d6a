#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bolab/effective.hpp"
#include "bolab/fit.hpp"

namespace bolab {

/// One compared eigenvalue. Surface rows also fill m, alpha, ell, theta_min.
struct ReportRow {
  std::string regime;
  int j = 1;
  int k_or_alpha = 1;
  double h = 0.0;
  double hbar = 0.0;
  double predicted = 0.0;
  double computed = 0.0;
  double error = 0.0;  ///< computed - predicted
  double disc_budget = 0.0;
  int m = 0;
  int alpha = 0;
  int ell = 0;
  double theta_min = 0.0;

  bool operator==(const ReportRow&) const = default;
};

/// Slope fit of |error| against the small parameter for one series.
struct FitRecord {
  std::string series;
  std::string regime;
  int j = 0;           ///< 0 matches every band
  int k_or_alpha = -1; ///< -1 matches every level
  std::string variable;  ///< "hbar" or "h"
  double claimed = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  ///< rows dropped by the 10% budget rule
  std::optional<SlopeFit> fit;
  std::string diagnostic;
};

struct Verdict {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentReport {
  std::string name;
  std::string type;
  std::vector<ReportRow> rows;  ///< sorted by descending h
  std::vector<FitRecord> fits;
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;
  std::string failure;  ///< computation error that aborted the experiment
  double seconds = 0.0;

  bool surface() const { return type == "surface"; }
  bool passed() const;
};

struct SweepReport {
  std::string config_path;
  std::string config_hash;  ///< FNV-1a of the config file bytes
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<ExperimentReport> experiments;

  bool passed() const;
  bool computation_failed() const;
};

inline constexpr const char* kCsvHeader = "regime,j,k_or_alpha,h,hbar,predicted,computed,error,disc_budget";
inline constexpr const char* kSurfaceColumns = ",m,alpha,ell,theta_min";

/// Rows sorted by descending h, then regime, j, k_or_alpha, ell.
void sort_rows(std::vector<ReportRow>& rows);

/// Fit over the rows whose budget is at most 10% of |error|, using hbar or h
/// as abscissa. Mixed error signs yield a diagnostic and no fit.
/// Only rows matching regime, j and k_or_alpha take part.
FitRecord fit_rows(const std::vector<ReportRow>& rows, const std::string& regime, int j, int k_or_alpha,
                   bool use_hbar, double claimed);

std::string format_csv(const std::vector<ReportRow>& rows, bool surface);
/// Inverse of format_csv; the header decides whether surface columns are read.
std::vector<ReportRow> parse_csv(const std::string& text);

std::string format_json(const SweepReport& report);
/// Gnuplot script plotting |error| against the small parameter for every
/// fitted series, with reference lines of the claimed slopes.
std::string format_plot(const ExperimentReport& experiment, const std::string& csv_name);

/// Writes <name>.csv and <name>.gp per experiment plus report.json into `dir`.
std::vector<std::filesystem::path> emit(const SweepReport& report, const std::filesystem::path& dir,
                                        bool plot = true);

}  // namespace bolab
