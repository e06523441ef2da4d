#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "caplab/geometry.hpp"
#include "caplab/grid.hpp"

namespace caplab {

/// Structural data {p, N, C_o, C_1, Lambda} with the derived critical value
/// p_* = 2N/(N+1).
struct StructureParams {
  double p = 1.5;
  int N = 2;
  double C_o = 1.0;
  double C_1 = 1.0;
  double Lambda = 0.0;

  double p_star() const { return 2.0 * N / (N + 1.0); }
  bool subcritical() const { return p <= p_star() + 1e-15; }
  void validate() const;
};

/// Flux A(x,t,u,xi): the prototype |xi|^{p-2} xi, or the diagonal-matrix
/// variant a_d |xi|^{p-2} xi_d with constant per-axis conductivities.
struct FluxModel {
  enum class Kind { prototype, diagonal };
  Kind kind = Kind::prototype;
  std::array<double, 3> diag{{1.0, 1.0, 1.0}};

  double axis_coefficient(int axis) const {
    return kind == Kind::prototype ? 1.0 : diag[axis];
  }
  /// Ellipticity bounds of the model (the structure constants it realizes).
  double lower_bound(int dim) const;
  double upper_bound(int dim) const;
  void validate(const StructureParams& sp) const;
};

FluxModel parse_flux_model(const Config& cfg, const std::string& prefix, int dim);

/// Smallest sampled value of (A(xi1)-A(xi2)).(xi1-xi2) / |xi1-xi2|^2; the
/// model is monotone when this stays non-negative. Deterministic sampling.
double min_monotonicity(const FluxModel& model, double p, int dim, int samples,
                        std::uint64_t seed);

/// Time partition. `graded` refines geometrically toward `anchor` (typically
/// t_o), so boundary-decay measurements get dense snapshots where the
/// backward cylinders shrink; steps before and after the anchor grow from
/// dt_min up to dt_max. Times at or before the anchor do not depend on t_end,
/// which makes anchored reports invariant under horizon extension.
struct TimeGridSpec {
  std::string kind = "fixed";  // fixed | graded
  double t_end = 1.0;
  double dt = 1e-3;       // fixed kind
  double anchor = -1.0;   // graded kind; < 0 means t_end
  double dt_min = 1e-5;
  double dt_max = 1e-3;
  double growth = 1.25;
  double store_from = 0.0;  // store every step at t >= store_from
  int store_stride = 1;     // before store_from, store every k-th step
};
std::vector<double> make_time_grid(const TimeGridSpec& spec);
TimeGridSpec parse_time_grid(const Config& cfg, const std::string& prefix);

struct SolveSettings {
  double tol = 1e-8;        // max-norm residual of the implicit step equation
  int max_picard = 80;      // lagged-diffusivity iterations per step
  int max_halvings = 4;     // recursive dt splitting on non-convergence
  double cg_rtol = 1e-8;
  int cg_max_iters = 4000;
  double eps_factor = 1.0;  // flux regularization eps = factor * h
  int verbosity = 0;
};
SolveSettings parse_solve_settings(const Config& cfg, const std::string& prefix);

using SourceFn = std::function<double(const Point&, double)>;

/// Stored solution snapshots on the full bounding-cube grid. Snapshots are
/// kept in float32 (measurement tolerances sit far above that resolution);
/// the march itself runs in float64.
class Trajectory {
public:
  DomainMask domain;
  FluxModel model;
  double p = 1.5;
  double eps = 0.0;
  TimeGridSpec timegrid;
  std::vector<double> times;              // ascending, starts at 0
  std::vector<std::vector<float>> fields;  // one per stored time

  std::size_t snapshot_count() const { return times.size(); }
  double value(std::size_t snap, std::size_t cell) const {
    return fields[snap][cell];
  }
  /// Snapshot indices with time in (t0, t1].
  std::vector<std::size_t> snapshots_in(double t0, double t1) const;
  /// Snapshot index whose time matches t (tolerance 1e-12 * max(1,|t|)).
  std::size_t snapshot_at(double t) const;
  /// Mean of u over cells of `cube` at snapshot `snap` (all mask cells).
  double cube_average(std::size_t snap, const Cube& cube) const;
  /// Max of u over the whole grid at snapshot `snap`.
  double sup_at(std::size_t snap) const;
};

struct StepStats {
  int picard_iters = 0;
  int cg_iters = 0;
  int halvings = 0;
  double residual = 0.0;
};

/// One implicit Euler step of u_t = div A_eps(x,t,u,Du) + f on the masked
/// domain (Dirichlet data imposed on every non-domain cell). Solves the
/// nonlinear system by damped lagged-diffusivity iteration with CG inner
/// solves; on non-convergence the step is split in halves up to
/// settings.max_halvings before giving up.
std::vector<double> step(const DomainMask& domain, const FluxModel& model,
                         double p, double eps, const std::vector<double>& u_old,
                         double t_old, double dt, const SolveSettings& settings,
                         const SourceFn& source = nullptr,
                         StepStats* stats = nullptr);

/// Cauchy-Dirichlet march over [0, T]: u(.,0) = g(.,0) unless an initial
/// field is supplied (auxiliary problems), boundary values from the mask's
/// datum. The returned trajectory stores snapshots per the time-grid policy.
Trajectory solve_cauchy_dirichlet(
    const DomainMask& domain, const FluxModel& model, const StructureParams& sp,
    const TimeGridSpec& timegrid, const SolveSettings& settings,
    std::optional<std::vector<double>> initial = std::nullopt,
    const SourceFn& source = nullptr);

struct OscStats {
  double mu_plus = 0.0;
  double mu_minus = 0.0;
  double omega = 0.0;
  std::size_t cells = 0;
  std::size_t snapshots = 0;
};

/// Essential sup/inf/oscillation of the stored fields over cyl intersected
/// with E_T (cells outside E excluded). Rejects empty intersections.
OscStats ess_osc(const Trajectory& traj, const Cylinder& cyl);

enum class TruncationMode { upper, lower };

/// Zero-extended truncation u_k over the working cylinder Q = cube x [s, t_o]
/// and the super-solution v = mu - u_k. Upper mode requires k >= sup_Sigma g,
/// lower mode k <= inf_Sigma g, where Sigma is the discrete lateral boundary
/// inside Q sampled at stored times.
struct TruncationExtension {
  Trajectory u_k;
  Trajectory v;
  double mu = 0.0;
  double level = 0.0;
  Cube cube;
  double s = 0.0;
  double t_end = 0.0;
};
TruncationExtension truncate_and_extend(const Trajectory& traj, double level,
                                        const Cube& working_cube, double s,
                                        double t_end, TruncationMode mode);

/// Flat binary checkpoint (header: dims, cube, times, mask; body: row-major
/// float32 fields per stored time).
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

/// CSV export of one snapshot: cell indices, coordinates, inside flag, value.
void export_slice_csv(const Trajectory& traj, std::size_t snap,
                      const std::string& path);

/// Total mass sum(u * h^N) over inside cells at a snapshot.
double inside_mass(const Trajectory& traj, std::size_t snap);

}  // namespace caplab
