#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "bolab/effective.hpp"
#include "bolab/hypersurface.hpp"
#include "bolab/model.hpp"
#include "bolab/transverse.hpp"

namespace bolab {

/// Full against reduced operator, and full against mu_j + hbar e_k.
struct LowExperiment {
  ModelDescription model;
  std::vector<double> hbar;
  std::vector<int> bands{1};
  int levels = 3;
  bool slope_check = true;
  bool lower_bound_check = false;
  bool coefficient_check = false;
  double coefficient_tolerance = 0.02;  ///< relative
  FiberedNumerics numerics;
  TransverseOptions transverse;
};

/// Lowest level of several bands at one hbar against the C mu_j hbar^2 shape.
struct MiddleExperiment {
  ModelDescription model;
  double hbar = 0.15;
  std::vector<int> bands;
  int nearest = 10;
  double max_ratio = 10.0;
  FiberedNumerics numerics;
  TransverseOptions transverse;
};

struct SurfaceExperiment {
  std::string potential;  ///< V in the variables x, y
  std::string curve_x;    ///< in the variable t
  std::string curve_y;
  int m = 1;
  int orientation = 1;
  int samples = 256;
  std::vector<double> h;
  int bands = 1;
  int alpha_max = 1;
  double max_ratio = 10.0;
  /// Optional checks of the extracted profile; negative disables.
  double expect_eta0 = -1.0;
  double expect_rho = -1.0;
  double expect_tolerance = 1e-4;
  SurfaceNumerics numerics;
  TransverseOptions transverse;
};

/// mu_j of D^2 + c g against c^{2/(2+a)} mu_j, and optionally against known values.
struct TransverseExperiment {
  std::string g;  ///< in the variable y
  double a = 2.0;
  int levels = 6;
  std::vector<double> scales{1.0};
  std::vector<double> exact;
  double tolerance = 1e-8;
  TransverseOptions options;
};

struct Experiment {
  std::string name;
  std::variant<LowExperiment, MiddleExperiment, SurfaceExperiment, TransverseExperiment> spec;

  std::string type() const;
};

struct RunConfig {
  int schema_version = 1;
  std::uint64_t seed = 1;
  std::vector<Experiment> experiments;
  std::string hash;  ///< FNV-1a of the source text
};

inline constexpr int kSchemaVersion = 1;

/// Parses a JSON config. Schema violations, unknown keys included, raise
/// ConfigError with the JSON path of the offending field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Builds every model, curve and well once, turning failures into ConfigError.
void validate_config(const RunConfig& config);

}  // namespace bolab
