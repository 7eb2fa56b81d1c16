#pragma once

// Desk-scale unseen-dataset benchmark: synthetic Gaussian-cluster task
// families whose best learning rate depends on their feature scale, a tiny
// softmax-regression trainer, and a harness that compares transferred,
// random and default configurations.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "automl/cards.hpp"
#include "automl/registry.hpp"
#include "automl/training_log.hpp"

namespace automl {

inline constexpr int kFeatureDim = 16;
inline constexpr int kSamplesPerClass = 200;
inline constexpr double kClusterRadius = 3.0;
inline constexpr double kClusterSpread = 0.7;  // noise std relative to the mean radius unit
inline constexpr double kTrainFraction = 0.8;
inline constexpr double kDivergenceFactor = 10.0;  // times the untrained training loss

struct TaskFamily {
  std::string family_id;
  double sigma = 1.0;
  int n_classes = 2;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct SyntheticDatasetT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix train_x;
  Eigen::VectorXi train_y;
  Matrix val_x;
  Eigen::VectorXi val_y;
  int n_classes = 0;
};
using SyntheticDataset = SyntheticDatasetT<double>;

/// The fixed 100-word class-name vocabulary.
const std::vector<std::string>& class_vocabulary();

/// sigma in [0.1, 10] log-uniform, 5..15 classes named from the vocabulary.
TaskFamily sample_family(std::string family_id, std::mt19937_64& rng);

/// Quarter-decade bucket of sigma.
int sigma_bucket(double sigma);

/// Class c has mean mu_c on the radius-3 sphere; samples are
/// sigma * (mu_c + 0.7 * eps) with eps ~ N(0, I). Shuffled, split 80/20.
std::pair<SyntheticDataset, DataCard> generate_task(const TaskFamily& family);

/// Card for the trainer below.
ModelCard tiny_model_card();

/// Softmax regression, mini-batch gradient descent with coupled L2 decay.
/// Weights start at N(0, 0.5^2), biases at zero. Needs learning_rate,
/// weight_decay, batch_size and epochs. Throws DivergedTraining when a loss
/// stops being finite or the training loss exceeds kDivergenceFactor times
/// its untrained value.
TrainingLog train_tiny(const SyntheticDataset& data, const HyperParamConfig& config, std::uint64_t seed);

/// Final val accuracy, or chance level when training diverges.
double final_accuracy(const SyntheticDataset& data, const HyperParamConfig& config, std::uint64_t seed);

/// learning_rate from 1e-4 to 1e2 in half-decade steps.
std::vector<double> bench_lr_grid();

/// Grid search over the learning rate with the other parameters at defaults.
TuningRecord tune_family_record(const TaskFamily& family, std::uint64_t seed);

/// Spearman rank correlation (average ranks on ties).
double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct ArmScores {
  double recommended = 0.0;
  double nearest = 0.0;  // k = 1 copy of the closest dataset
  double random = 0.0;
  double defaults = 0.0;
};

struct TrialReport {
  std::uint64_t seed = 0;
  TaskFamily held_out;
  std::vector<std::pair<std::string, double>> neighbors;
  HyperParamConfig recommended_config;
  HyperParamConfig random_config;
  double grid_best_lr = 0.0;
  ArmScores accuracy;
};

struct BenchReport {
  int n_known = 0;
  int n_trials = 0;
  ArmScores mean_accuracy;
  double win_rate = 0.0;          // recommended >= random
  double default_win_rate = 0.0;  // recommended >= default
  std::vector<TrialReport> trials;
};

/// One trial per seed: n_known families are grid-searched into a registry,
/// a held-out family is recommended for by transfer, and the four arms are
/// trained with the same seed.
BenchReport run_unseen_benchmark(int n_known, int n_trials, const std::vector<std::uint64_t>& seeds);

json to_json(const BenchReport& report);
std::string format_table(const BenchReport& report);

struct CorrelationStudy {
  std::vector<double> similarities;  // one per family pair
  std::vector<double> lr_closeness;  // -|log10 lr*_a - log10 lr*_b|
  double rho = 0.0;
};

/// Grid-searches n families and correlates card similarity with optimum closeness.
CorrelationStudy correlation_study(int n_families, std::uint64_t seed);

}  // namespace automl
