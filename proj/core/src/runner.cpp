#include "bolab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <mutex>
#include <thread>

#include "bolab/error.hpp"

namespace bolab {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string num_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int worker_count(int jobs, std::size_t tasks) {
  int n = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, static_cast<int>(tasks)));
}

// Runs fn(0..n-1) on a bounded pool; the first exception is rethrown after
// every worker has stopped.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const int workers = worker_count(jobs, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !stop; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void say(const RunOptions& opts, const std::string& text) {
  if (opts.log) opts.log(text);
}

Verdict slope_verdict(const FitRecord& fit) {
  Verdict v;
  v.name = "slope " + fit.series;
  v.threshold = 0.9 * fit.claimed;
  if (fit.fit) {
    v.measured = fit.fit->slope;
    v.pass = v.measured >= v.threshold;
    v.detail = "fitted " + num(v.measured) + " on " + std::to_string(fit.used) + " points, claimed " +
               num(fit.claimed);
  } else {
    v.pass = false;
    v.detail = fit.diagnostic;
  }
  if (fit.excluded > 0) v.detail += "; " + std::to_string(fit.excluded) + " rows excluded by the budget rule";
  return v;
}

// max/min of |error| / scale over the given rows.
Verdict ratio_verdict(const std::string& name, const std::vector<ReportRow>& rows,
                      const std::function<double(const ReportRow&)>& scale, double max_ratio) {
  Verdict v;
  v.name = name;
  v.threshold = max_ratio;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const ReportRow& r : rows) {
    const double q = std::abs(r.error) / scale(r);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (rows.empty() || !(lo > 0.0)) {
    v.detail = rows.empty() ? "no rows" : "a normalized error vanishes";
    return v;
  }
  v.measured = hi / lo;
  v.pass = v.measured <= max_ratio;
  v.detail = "normalized errors in [" + num(lo) + ", " + num(hi) + "]";
  return v;
}

// The k lowest full levels against the k lowest levels of the reduced operator
// with mu_1, which the full operator dominates.
std::vector<ReportRow> lowest_rows(const ModelSpec& model, const SemiclassicalParams& params,
                                   const std::vector<double>& mu, int levels, const FiberedNumerics& nm,
                                   ResultCache* cache) {
  const double top = mu[0] + params.hbar * harmonic_levels(model.hess_f0, mu[0], model.a, levels).back();
  std::size_t bands = 1;
  while (bands < mu.size() && mu[bands] < top) ++bands;
  const Grid coarse = fibered_grid(model, params, std::span<const double>(mu.data(), bands), levels + 1, nm);
  const TwoGridLevels full = full_lowest(model, params, coarse, levels, mu[0], nm, cache);
  const TwoGridLevels reduced = reduced_lowest(model, params, mu[0], coarse, levels, nm, cache);
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < static_cast<std::size_t>(levels); ++i) {
    rows.push_back({"lowest", 1, static_cast<int>(i + 1), params.h, params.hbar, reduced.value[i], full.value[i],
                    full.value[i] - reduced.value[i], full.budget[i] + reduced.budget[i]});
  }
  return rows;
}

void run_low(const LowExperiment& x, ExperimentReport& rep, const RunOptions& opts) {
  const ModelSpec model = validate_model(x.model);
  const int top = *std::max_element(x.bands.begin(), x.bands.end());
  const TransverseSpectrum spec = transverse_spectrum(model.g, model.a, top + 1, x.transverse, opts.cache);
  say(opts, rep.name + ": transverse mu_1 = " + num(spec.mu[0]));

  // Band rows need a unique band assignment; the lower bound compares the
  // k-th full level with the k-th reduced level and needs none.
  const bool band_rows = x.slope_check || x.coefficient_check || !x.lower_bound_check;
  std::vector<std::pair<int, double>> tasks;
  for (int j : x.bands) {
    for (double hb : x.hbar) {
      if (band_rows) tasks.emplace_back(j, hb);
    }
  }
  if (x.lower_bound_check) {
    for (double hb : x.hbar) tasks.emplace_back(0, hb);
  }
  std::vector<std::vector<ReportRow>> out(tasks.size());
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t t) {
    const auto [j, hb] = tasks[t];
    const SemiclassicalParams params = h_of_hbar(hb, model.a);
    if (j == 0) {
      out[t] = lowest_rows(model, params, spec.mu, x.levels, x.numerics, opts.cache);
      say(opts, rep.name + ": lowest levels at hbar " + num(hb) + " done");
      return;
    }
    const BandComparison band = compare_band(model, params, spec.mu, j, x.levels, x.numerics, opts.cache);
    for (int k = 1; k <= x.levels; ++k) {
      const std::size_t i = static_cast<std::size_t>(k - 1);
      ReportRow reduced{"reduced", j, k, params.h, params.hbar, band.reduced[i], band.full[i],
                        band.full[i] - band.reduced[i], band.full_budget[i] + band.reduced_budget[i]};
      const Prediction p = predict_low(model, params, spec.mu, j, k);
      ReportRow low{"low", j, k, params.h, params.hbar, p.value, band.full[i], band.full[i] - p.value,
                    band.full_budget[i]};
      out[t].push_back(reduced);
      out[t].push_back(low);
    }
    say(opts, rep.name + ": band " + std::to_string(j) + " at hbar " + num(hb) + " done");
  });
  for (auto& rows : out) rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  sort_rows(rep.rows);

  if (band_rows) {
    for (int j : x.bands) {
      for (int k = 1; k <= x.levels; ++k) {
        rep.fits.push_back(fit_rows(rep.rows, "reduced", j, k, true, 2.0));
        const SemiclassicalParams any = h_of_hbar(x.hbar.front(), model.a);
        rep.fits.push_back(
            fit_rows(rep.rows, "low", j, k, true, predict_low(model, any, spec.mu, j, k).remainder_order));
      }
    }
  }
  if (x.slope_check) {
    for (const FitRecord& f : rep.fits) rep.verdicts.push_back(slope_verdict(f));
  }
  if (x.lower_bound_check) {
    Verdict v;
    v.name = "lower bound full >= reduced - budget";
    v.measured = std::numeric_limits<double>::infinity();
    for (const ReportRow& r : rep.rows) {
      if (r.regime == "lowest") v.measured = std::min(v.measured, r.error + r.disc_budget);
    }
    v.pass = v.measured >= 0.0;
    v.detail = "smallest full - reduced + budget is " + num(v.measured);
    rep.verdicts.push_back(v);
  }
  if (x.coefficient_check) {
    for (int j : x.bands) {
      std::vector<double> hb;
      std::vector<double> q;
      const double mu = spec.mu[static_cast<std::size_t>(j - 1)];
      for (const ReportRow& r : rep.rows) {
        if (r.regime == "low" && r.j == j && r.k_or_alpha == 1) {
          hb.push_back(r.hbar);
          q.push_back((r.computed - mu) / r.hbar);
        }
      }
      Verdict v;
      v.name = "first-order coefficient j=" + std::to_string(j);
      const double expected = ground_coefficient(model.hess_f0, mu, model.a);
      v.threshold = x.coefficient_tolerance;
      if (hb.size() >= 2) {
        const LineFit line = fit_line(hb, q);
        v.measured = std::abs(line.intercept - expected) / expected;
        v.pass = v.measured <= v.threshold;
        v.detail = "intercept of (lambda - mu_j)/hbar against hbar is " + num(line.intercept) + ", expected " +
                   num(expected);
      } else {
        v.detail = "needs at least two hbar values";
      }
      rep.verdicts.push_back(v);
    }
  }
}

void run_middle(const MiddleExperiment& x, ExperimentReport& rep, const RunOptions& opts) {
  const ModelSpec model = validate_model(x.model);
  const int top = *std::max_element(x.bands.begin(), x.bands.end());
  const TransverseSpectrum spec = transverse_spectrum(model.g, model.a, top + 1, x.transverse, opts.cache);
  const SemiclassicalParams params = h_of_hbar(x.hbar, model.a);
  std::vector<ReportRow> rows(x.bands.size());
  parallel_for(x.bands.size(), opts.jobs, [&](std::size_t t) {
    const int j = x.bands[t];
    const Prediction p = predict_middle(model, params, spec.mu, j);
    const BandLevel level = band_ground_level(model, params, spec, j, p.value, x.nearest, x.numerics, opts.cache);
    rows[t] = {"middle", j, 1, params.h, params.hbar, p.value, level.value, level.value - p.value, level.budget};
    say(opts, rep.name + ": band " + std::to_string(j) + " overlap " + num(level.overlap));
  });
  rep.rows = std::move(rows);
  sort_rows(rep.rows);
  rep.verdicts.push_back(ratio_verdict(
      "bounded |error| / (mu_j hbar^2)", rep.rows,
      [&](const ReportRow& r) { return spec.mu[static_cast<std::size_t>(r.j - 1)] * r.hbar * r.hbar; },
      x.max_ratio));
}

void run_surface(const SurfaceExperiment& x, ExperimentReport& rep, const RunOptions& opts) {
  const Expr V = Expr::parse(x.potential, {"x", "y"});
  Curve gamma = build_gamma(Expr::parse(x.curve_x, {"t"}), Expr::parse(x.curve_y, {"t"}), x.orientation, x.samples);
  const SurfaceWell well = make_surface_well(V, x.m, std::move(gamma));
  const std::string g = "y^" + std::to_string(2 * x.m);
  const TransverseSpectrum spec =
      transverse_spectrum(Expr::parse(g, {"y"}), 2.0 * x.m, x.bands + 1, x.transverse, opts.cache);
  const std::vector<double> mu(spec.mu.begin(), spec.mu.begin() + x.bands);
  rep.notes.push_back("eta0 = " + num(well.eta0) + ", minima: " + std::to_string(well.minima.size()));

  if (x.expect_eta0 > 0.0) {
    Verdict v{"extracted eta0", false, std::abs(well.eta0 - x.expect_eta0), x.expect_tolerance,
              "eta0 = " + num(well.eta0) + ", expected " + num(x.expect_eta0)};
    v.pass = v.measured <= v.threshold;
    rep.verdicts.push_back(v);
  }
  if (x.expect_rho > 0.0) {
    Verdict v{"extracted rho", false, 0.0, x.expect_tolerance, ""};
    for (const SurfaceMinimum& s : well.minima) v.measured = std::max(v.measured, std::abs(s.rho - x.expect_rho));
    v.pass = !well.minima.empty() && v.measured <= v.threshold;
    v.detail = "largest deviation from " + num(x.expect_rho) + " over " + std::to_string(well.minima.size()) + " minima";
    rep.verdicts.push_back(v);
  }

  std::vector<std::vector<ReportRow>> out(x.h.size());
  parallel_for(x.h.size(), opts.jobs, [&](std::size_t t) {
    const double h = x.h[t];
    const std::vector<SurfaceRow> rows =
        verify_surface(well, mu, x.alpha_max, std::span<const double>(&x.h[t], 1), x.numerics, opts.cache);
    for (const SurfaceRow& s : rows) {
      ReportRow r{"surface", s.prediction.j, s.prediction.alpha, h, h, s.prediction.value, s.computed, s.error,
                  s.budget};
      r.m = x.m;
      r.alpha = s.prediction.alpha;
      r.ell = s.prediction.ell;
      r.theta_min = s.theta_min;
      out[t].push_back(r);
    }
    say(opts, rep.name + ": h " + num(h) + " done");
  });
  for (auto& rows : out) rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  sort_rows(rep.rows);

  for (int j = 1; j <= x.bands; ++j) {
    for (int alpha = 0; alpha <= x.alpha_max; ++alpha) rep.fits.push_back(fit_rows(rep.rows, "surface", j, alpha, false, 2.0));
  }
  const double m = x.m;
  rep.verdicts.push_back(ratio_verdict(
      "bounded |error| / (h^2 mu_j^(2+3/(2m)))", rep.rows,
      [&](const ReportRow& r) {
        return r.h * r.h * std::pow(mu[static_cast<std::size_t>(r.j - 1)], 2.0 + 3.0 / (2.0 * m));
      },
      x.max_ratio));
}

void run_transverse(const TransverseExperiment& x, ExperimentReport& rep, const RunOptions& opts) {
  const Expr g = Expr::parse(x.g, {"y"});
  std::vector<double> scales{1.0};
  for (double c : x.scales) {
    if (c != 1.0) scales.push_back(c);
  }
  std::vector<TransverseSpectrum> spectra(scales.size());
  parallel_for(scales.size(), opts.jobs, [&](std::size_t t) {
    const Expr gc = scales[t] == 1.0 ? g : Expr::parse(num_exact(scales[t]) + "*(" + x.g + ")", {"y"});
    spectra[t] = transverse_spectrum(gc, x.a, x.levels, x.options, opts.cache);
  });
  const TransverseSpectrum& base = spectra[0];
  for (std::size_t j = 0; j < x.exact.size(); ++j) {
    rep.rows.push_back({"exact", static_cast<int>(j + 1), 0, 1.0, 1.0, x.exact[j], base.mu[j],
                        base.mu[j] - x.exact[j], base.budget[j]});
  }
  for (std::size_t t = 1; t < scales.size(); ++t) {
    const double c = scales[t];
    const double factor = std::pow(c, 2.0 / (2.0 + x.a));
    for (std::size_t j = 0; j < base.size(); ++j) {
      rep.rows.push_back({"scaled", static_cast<int>(j + 1), 0, c, factor, factor * base.mu[j], spectra[t].mu[j],
                          spectra[t].mu[j] - factor * base.mu[j], spectra[t].budget[j] + factor * base.budget[j]});
    }
  }
  sort_rows(rep.rows);
  if (!x.exact.empty()) {
    Verdict v{"matches known eigenvalues", false, 0.0, x.tolerance, "largest absolute deviation"};
    for (const ReportRow& r : rep.rows) {
      if (r.regime == "exact") v.measured = std::max(v.measured, std::abs(r.error));
    }
    v.pass = v.measured <= v.threshold;
    rep.verdicts.push_back(v);
  }
  if (scales.size() > 1) {
    Verdict v{"homogeneity covariance", false, 0.0, x.tolerance, "largest relative deviation"};
    for (const ReportRow& r : rep.rows) {
      if (r.regime == "scaled") v.measured = std::max(v.measured, std::abs(r.error) / std::abs(r.predicted));
    }
    v.pass = v.measured <= v.threshold;
    rep.verdicts.push_back(v);
  }
  if (rep.verdicts.empty()) rep.notes.push_back("no checks requested");
}

}  // namespace

ExperimentReport run_experiment(const Experiment& experiment, const RunOptions& options) {
  ExperimentReport rep;
  rep.name = experiment.name;
  rep.type = experiment.type();
  const auto start = std::chrono::steady_clock::now();
  try {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, LowExperiment>) run_low(x, rep, options);
          if constexpr (std::is_same_v<T, MiddleExperiment>) run_middle(x, rep, options);
          if constexpr (std::is_same_v<T, SurfaceExperiment>) run_surface(x, rep, options);
          if constexpr (std::is_same_v<T, TransverseExperiment>) run_transverse(x, rep, options);
        },
        experiment.spec);
  } catch (const Error& e) {
    rep.failure = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    rep.failure = std::string("internal: ") + e.what();
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

SweepReport run(const RunConfig& config, const RunOptions& options) {
  SweepReport report;
  report.config_hash = config.hash;
  report.seed = config.seed;
  report.started = utc_now();
  for (const Experiment& e : config.experiments) {
    say(options, "running " + e.name + " (" + e.type() + ")");
    report.experiments.push_back(run_experiment(e, options));
  }
  report.finished = utc_now();
  return report;
}

int exit_code(const SweepReport& report) {
  if (report.computation_failed()) return 3;
  return report.passed() ? 0 : 1;
}

}  // namespace bolab
