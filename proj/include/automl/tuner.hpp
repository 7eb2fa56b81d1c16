#pragma once

// Greedy coordinate search over predicted training logs, filtered by user
// constraints, and an exhaustive grid search used as ground truth.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "automl/cards.hpp"
#include "automl/constraint.hpp"
#include "automl/oracle.hpp"
#include "automl/transfer.hpp"

namespace automl {

inline constexpr double kLogStep = 0.25;        // decades
inline constexpr double kLinearStep = 0.10;     // fraction of the domain span
inline constexpr int kDefaultBudget = 40;

/// Center first, then for each tunable parameter in name order its down-step
/// before its up-step (categoricals: every other category). Steps that clamp
/// back onto the center are dropped.
std::vector<HyperParamConfig> propose_candidates(const HyperParamConfig& center, const HyperParamSpace& space);

enum class StopReason { budget, converged, all_filtered };
std::string_view to_string(StopReason r);

struct TrialPoint {
  HyperParamConfig config;
  double final_metric = 0.0;
  bool feasible = true;
};

struct TuneResult {
  HyperParamConfig best_config;
  double best_final_metric = 0.0;
  std::vector<TrialPoint> trajectory;  // one entry per backend query
  int queries_used = 0;
  StopReason stop_reason = StopReason::converged;
  TrainingLog best_log;
};

json to_json(const TuneResult& r);

/// Every query costs one budget unit. A candidate whose tunable values
/// already break a constraint is skipped unqueried; otherwise constraints are
/// checked against the predicted log (train_loss, val_loss, val_metric and the
/// data card's first metric, all final-epoch) and the architecture estimates.
/// A constraint naming none of these is unsatisfiable. Throws
/// AllCandidatesFiltered when no queried config satisfies every constraint.
TuneResult tune(const Recommendation& seed, const DataCard& data, const ModelCard& model, Backend& backend,
                const std::vector<Constraint>& constraints, int budget = kDefaultBudget);

/// Final-epoch val_metric the backend predicts for `config`.
double predicted_metric(const DataCard& data, const ModelCard& model, Backend& backend,
                        const HyperParamConfig& config);

/// One axis per parameter; the grid is the Cartesian product in axis order.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<ParamValue>>> axes;
};

/// n log-uniform points from lo to hi inclusive.
std::vector<ParamValue> log_grid(double lo, double hi, int n);
std::vector<ParamValue> linear_grid(double lo, double hi, int n);

/// Parameters outside the grid take the space's defaults. Ties keep the
/// earliest grid point. Throws EmptyGrid.
std::pair<HyperParamConfig, double> grid_search_oracle(const HyperParamSpace& space,
                                                       const std::function<double(const HyperParamConfig&)>& evaluate,
                                                       const GridSpec& grid);

}  // namespace automl
