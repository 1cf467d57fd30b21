#pragma once

// Experiment driver: the four model problems on the unit square/cube with
// checkerboard coefficients, errors against a fine reference solution, rate
// fitting, CSV/plot-script output and the invariant validation suite.

#include "curlod/assembly.hpp"
#include "curlod/falk_winther.hpp"
#include "curlod/lod.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace curlod {

struct ExperimentConfig {
  int example = 1;          ///< 1..4
  int dim = 2;
  std::vector<int> levels;  ///< coarse levels j, H = sqrt(dim) 2^-j
  std::vector<int> m;       ///< layers per level; ignored when ideal
  int ref_level = 6;
  SourceCorrection source = SourceCorrection::none;
  ProjectionVariant pi_variant = ProjectionVariant::standard;
  bool ideal = false;
  int boundary_layers = 0;  ///< selection depth of boundary source correction
  std::string out;          ///< CSV path ("" = none)
  std::string cache_dir;    ///< corrector cache directory ("" = none)

  /// Throws Error on inconsistent settings.
  void check() const;
};

struct ExperimentRow {
  int example = 0, dim = 0, j = 0;
  double H = 0;
  int m = 0;  ///< -1 for the ideal method
  int dof_coarse = 0, dof_fine = 0;
  double err_lod = 0, err_fem = 0;
  double seconds = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ExperimentRow> rows;  ///< H descending
  double slope_lod = 0, slope_fem = 0;
};

BoundaryCondition example_bc(int example);
LoadSpec example_load(int example, int dim);
/// Checkerboard with blocks twice the reference mesh size.
Checkerboard example_checkerboard(int ref_level);
/// Layers per level: 1,1,2,2,3,4 for j = 0..5, then growing like j.
std::vector<int> default_m_schedule(const std::vector<int>& levels);
double mesh_size(int dim, int level);

/// sqrt(e^T B e / u_ref^T B u_ref) with e = u - u_ref.
double energy_error(const Eigen::VectorXd& u, const Eigen::VectorXd& u_ref, const SpMat& B);
/// Least-squares slope of log(err) against log(H).
double fit_rate(const std::vector<double>& H, const std::vector<double>& err);

/// Shared fine reference of one experiment.
struct Reference {
  std::shared_ptr<const Mesh> mesh;
  Checkerboard mu, kappa;
  LoadSpec load;
  BoundaryCondition bc = BoundaryCondition::natural;
  Eigen::VectorXd F, u;
  SparseOperator B;
};

Reference reference_solve(int example, int dim, int ref_level);

/// One (j, m) row against a given reference. m = kWholeDomain for the ideal
/// method.
ExperimentRow run_level(const ExperimentConfig& cfg, const Reference& ref, int j, int m,
                        std::ostream* log = nullptr);

ExperimentReport run_example(const ExperimentConfig& cfg, std::ostream* log = nullptr);

void write_csv(const ExperimentReport& report, std::ostream& os);
/// Stand-alone Python/matplotlib script plotting the CSV at `csv_path`.
std::string plot_script(const std::string& csv_path);

/// key=value lines; '#' starts a comment. Keys use the long flag names.
std::map<std::string, std::string> parse_config(std::istream& is);
/// Applies parsed keys to a config; unknown keys throw.
void apply_config(const std::map<std::string, std::string>& kv, ExperimentConfig& cfg);
/// "j0:j1" or a comma list.
std::vector<int> parse_levels(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

struct ValidationCheck {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool pass = false;
};

/// Invariant suite on 2D levels 2/4 and 3D levels 1/2. Prints one line per
/// check when `os` is given.
std::vector<ValidationCheck> validate(std::ostream* os = nullptr);

}  // namespace curlod
