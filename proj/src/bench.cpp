#include "automl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "automl/encoder.hpp"
#include "automl/error.hpp"
#include "automl/transfer.hpp"
#include "automl/tuner.hpp"

namespace automl {
namespace {

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> softmax_rows(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p = logits;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_max = p.rowwise().maxCoeff();
  p = (p.colwise() - row_max).array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

template <typename DerivedX, typename DerivedW, typename DerivedB>
typename DerivedX::Scalar mean_cross_entropy(const Eigen::MatrixBase<DerivedX>& x, const Eigen::VectorXi& y,
                                             const Eigen::MatrixBase<DerivedW>& w,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z = (x * w).rowwise() + b.transpose();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m = z.rowwise().maxCoeff();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lse =
      m.array() + (z.colwise() - m).array().exp().rowwise().sum().log();
  Scalar total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += lse[i] - z(i, y[i]);
  return total / static_cast<Scalar>(x.rows());
}

template <typename DerivedX, typename DerivedW, typename DerivedB>
double accuracy(const Eigen::MatrixBase<DerivedX>& x, const Eigen::VectorXi& y, const Eigen::MatrixBase<DerivedW>& w,
                const Eigen::MatrixBase<DerivedB>& b) {
  const Eigen::MatrixXd z = (x * w).rowwise() + b.transpose();
  int hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    hits += static_cast<int>(arg) == y[i];
  }
  return static_cast<double>(hits) / static_cast<double>(z.rows());
}

double required_number(const HyperParamConfig& config, const char* key) {
  const auto it = config.find(key);
  const auto v = it == config.end() ? std::nullopt : numeric_value(it->second);
  if (!v) throw Error(ErrorCode::PreconditionViolation, std::string("train_tiny needs a numeric '") + key + "'", key);
  return *v;
}

std::string band_token(int b) { return "band" + std::string(b < 0 ? "m" : "p") + std::to_string(std::abs(b)); }

double mean_of(const std::vector<TrialReport>& trials, double ArmScores::*arm) {
  double s = 0.0;
  for (const auto& t : trials) s += t.accuracy.*arm;
  return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

json arms_json(const ArmScores& a) {
  return json{{"recommended", a.recommended}, {"nearest", a.nearest}, {"random", a.random}, {"default", a.defaults}};
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const auto n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] == v[order[static_cast<std::size_t>(i)]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) r[order[static_cast<std::size_t>(t)]] = rank;
    i = j + 1;
  }
  return r;
}

}  // namespace

const std::vector<std::string>& class_vocabulary() {
  static const std::vector<std::string> words = {
      "acorn",   "anchor",  "anvil",   "apple",   "arrow",   "badger",  "banjo",   "barrel",  "beacon",  "beetle",
      "bison",   "blossom", "boulder", "bramble", "bridge",  "bucket",  "cactus",  "candle",  "canyon",  "carrot",
      "castle",  "cedar",   "cherry",  "cobalt",  "comet",   "copper",  "coral",   "cricket", "dagger",  "dolphin",
      "dragon",  "ember",   "falcon",  "feather", "fern",    "fiddle",  "flint",   "forest",  "fossil",  "garnet",
      "glacier", "goblet",  "granite", "harbor",  "hazel",   "heron",   "hollow",  "island",  "ivory",   "jasper",
      "juniper", "kettle",  "lantern", "lemon",   "lichen",  "lizard",  "lotus",   "magnet",  "maple",   "marble",
      "meadow",  "meteor",  "mitten",  "nectar",  "nutmeg",  "oasis",   "orchid",  "otter",   "paddle",  "pebble",
      "pepper",  "pigeon",  "pillow",  "planet",  "quartz",  "quill",   "raven",   "reef",    "ribbon",  "saddle",
      "salmon",  "sparrow", "spruce",  "summit",  "tablet",  "thistle", "thunder", "timber",  "tulip",   "tundra",
      "turnip",  "velvet",  "violet",  "walnut",  "willow",  "wizard",  "yarrow",  "zephyr",  "zinnia",  "zircon"};
  return words;
}

TaskFamily sample_family(std::string family_id, std::mt19937_64& rng) {
  TaskFamily f;
  f.family_id = std::move(family_id);
  f.sigma = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
  f.n_classes = std::uniform_int_distribution<int>(5, 15)(rng);
  std::vector<std::string> pool = class_vocabulary();
  std::shuffle(pool.begin(), pool.end(), rng);
  f.class_names.assign(pool.begin(), pool.begin() + f.n_classes);
  f.seed = rng();
  return f;
}

int sigma_bucket(double sigma) { return static_cast<int>(std::lround(4.0 * std::log10(sigma))); }

std::pair<SyntheticDataset, DataCard> generate_task(const TaskFamily& family) {
  if (family.n_classes < 2 || family.n_classes > 15 ||
      family.class_names.size() != static_cast<std::size_t>(family.n_classes) || !(family.sigma > 0.0)) {
    throw Error(ErrorCode::PreconditionViolation, "task family needs sigma > 0 and 2..15 named classes");
  }
  std::mt19937_64 rng(family.seed ^ fnv1a64(family.family_id));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return normal(rng); }));
  };

  const int k = family.n_classes;
  Eigen::MatrixXd means = draw(k, kFeatureDim);
  means = kClusterRadius * means.rowwise().normalized();

  const Eigen::Index n = static_cast<Eigen::Index>(k) * kSamplesPerClass;
  Eigen::MatrixXd x(n, kFeatureDim);
  Eigen::VectorXi y(n);
  for (int c = 0; c < k; ++c) {
    const auto rows = Eigen::seqN(c * kSamplesPerClass, kSamplesPerClass);
    x(rows, Eigen::all) =
        family.sigma * ((draw(kSamplesPerClass, kFeatureDim) * kClusterSpread).rowwise() + means.row(c));
    y(rows).setConstant(c);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<Eigen::Index>(std::llround(kTrainFraction * static_cast<double>(n)));
  const std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + n_train);
  const std::vector<Eigen::Index> val_idx(order.begin() + n_train, order.end());

  SyntheticDataset data;
  data.n_classes = k;
  data.train_x = x(train_idx, Eigen::all);
  data.train_y = y(train_idx);
  data.val_x = x(val_idx, Eigen::all);
  data.val_y = y(val_idx);

  DataCard card;
  card.name = family.family_id;
  card.input_type = InputType::tabular;
  card.label_space = family.class_names;
  card.scale = n;
  std::string description = "synthetic gaussian clusters with feature scale";
  const int b = sigma_bucket(family.sigma);
  for (int t = b - 3; t <= b + 3; ++t) description += " " + band_token(t);
  card.task_description = description;
  card.eval_metrics = {"accuracy"};
  return {std::move(data), canonicalize(std::move(card))};
}

ModelCard tiny_model_card() {
  ModelCard m;
  m.name = "logreg-tiny";
  m.structure = "linear layer 16 to n_classes followed by softmax";
  m.description = "multinomial logistic regression trained with mini-batch gradient descent";
  const auto add = [&](std::string name, ParamKind kind, double lo, double hi, ParamValue def) {
    HyperParamSpec s;
    s.name = name;
    s.kind = kind;
    s.min = lo;
    s.max = hi;
    s.default_value = std::move(def);
    s.flexibility = Flexibility::tunable;
    m.arch_hparams.emplace(std::move(name), std::move(s));
  };
  add("learning_rate", ParamKind::continuous_log, 1e-5, 1e2, 1e-2);
  add("weight_decay", ParamKind::continuous_log, 1e-6, 1e-1, 1e-4);
  add("batch_size", ParamKind::integer, 8, 256, std::int64_t{32});
  add("epochs", ParamKind::integer, 1, 20, std::int64_t{10});
  return m;
}

TrainingLog train_tiny(const SyntheticDataset& data, const HyperParamConfig& config, std::uint64_t seed) {
  const double lr = required_number(config, "learning_rate");
  const double wd = required_number(config, "weight_decay");
  const auto batch = static_cast<Eigen::Index>(required_number(config, "batch_size"));
  const auto epochs = static_cast<int>(required_number(config, "epochs"));
  if (lr < 0.0 || wd < 0.0 || batch < 1 || epochs < 1) {
    throw Error(ErrorCode::PreconditionViolation, "train_tiny needs lr, decay >= 0 and batch_size, epochs >= 1");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  const int k = data.n_classes;
  Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(kFeatureDim, k, [&] { return normal(rng); });
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);

  const Eigen::Index n = data.train_x.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  const double blowup = kDivergenceFactor * mean_cross_entropy(data.train_x, data.train_y, w, b);

  TrainingLog log;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + len);
      const Eigen::MatrixXd xb = data.train_x(idx, Eigen::all);
      Eigen::MatrixXd residual = softmax_rows((xb * w).rowwise() + b.transpose());
      for (Eigen::Index i = 0; i < len; ++i) residual(i, data.train_y[idx[static_cast<std::size_t>(i)]]) -= 1.0;
      residual /= static_cast<double>(len);
      w -= lr * (xb.transpose() * residual + wd * w);
      b -= lr * residual.colwise().sum().transpose();
    }
    const double train_loss = mean_cross_entropy(data.train_x, data.train_y, w, b);
    const double val_loss = mean_cross_entropy(data.val_x, data.val_y, w, b);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss) || train_loss > blowup) {
      throw Error(ErrorCode::DivergedTraining, "loss " + format_number(train_loss) + " in epoch " +
                                                   std::to_string(epoch) + " at learning_rate " + format_number(lr));
    }
    log.entries.push_back({epoch, train_loss, val_loss, accuracy(data.val_x, data.val_y, w, b)});
  }
  return log;
}

double final_accuracy(const SyntheticDataset& data, const HyperParamConfig& config, std::uint64_t seed) {
  try {
    return train_tiny(data, config, seed).final_entry().val_metric;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DivergedTraining) throw;
    return 1.0 / static_cast<double>(data.n_classes);
  }
}

std::vector<double> bench_lr_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));
  return grid;
}

TuningRecord tune_family_record(const TaskFamily& family, std::uint64_t seed) {
  const auto [data, card] = generate_task(family);
  const auto model = tiny_model_card();
  GridSpec grid;
  std::vector<ParamValue> lrs;
  for (double lr : bench_lr_grid()) lrs.emplace_back(lr);
  grid.axes.emplace_back("learning_rate", std::move(lrs));
  // Selection is by final validation loss.
  const auto [config, score] = grid_search_oracle(
      model.arch_hparams,
      [&](const HyperParamConfig& c) {
        try {
          return -train_tiny(data, c, seed).final_entry().val_loss;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DivergedTraining) throw;
          return -std::numeric_limits<double>::infinity();
        }
      },
      grid);
  (void)score;
  return {card, model.name, config, {"accuracy", final_accuracy(data, config, seed)}, Provenance::grid_search, 0};
}

double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::PreconditionViolation, "spearman needs two equal-length samples of size >= 2");
  }
  const Eigen::VectorXd rx = average_ranks(x);
  const Eigen::VectorXd ry = average_ranks(y);
  const Eigen::VectorXd cx = rx.array() - rx.mean();
  const Eigen::VectorXd cy = ry.array() - ry.mean();
  const double denom = std::sqrt(cx.squaredNorm() * cy.squaredNorm());
  return denom == 0.0 ? 0.0 : cx.dot(cy) / denom;
}

BenchReport run_unseen_benchmark(int n_known, int n_trials, const std::vector<std::uint64_t>& seeds) {
  if (n_known < 2) throw Error(ErrorCode::PreconditionViolation, "n_known must be at least 2");
  if (n_trials < 1) throw Error(ErrorCode::PreconditionViolation, "n_trials must be at least 1");
  if (seeds.size() < static_cast<std::size_t>(n_trials)) {
    throw Error(ErrorCode::PreconditionViolation, "need one seed per trial");
  }

  const auto model = tiny_model_card();
  const HashEmbedder embedder;
  BenchReport report;
  report.n_known = n_known;
  report.n_trials = n_trials;

  for (int t = 0; t < n_trials; ++t) {
    const std::uint64_t seed = seeds[static_cast<std::size_t>(t)];
    std::mt19937_64 rng(seed);
    Registry registry = add_model_card({}, model);
    for (int i = 0; i < n_known; ++i) {
      const auto family = sample_family("known-" + std::to_string(seed) + "-" + std::to_string(i), rng);
      registry = add_record(std::move(registry), tune_family_record(family, seed));
    }

    TrialReport trial;
    trial.seed = seed;
    trial.held_out = sample_family("heldout-" + std::to_string(seed), rng);
    const auto [data, card] = generate_task(trial.held_out);

    const auto rec = recommend(card, model, registry, embedder);
    const auto nearest = recommend(card, model, registry, embedder, 1);
    trial.neighbors = rec.neighbor_summary;
    trial.recommended_config = rec.config;

    for (const auto& [name, spec] : model.arch_hparams) {
      if (spec.kind == ParamKind::continuous_log) {
        trial.random_config[name] = std::pow(
            10.0, std::uniform_real_distribution<double>(std::log10(spec.min), std::log10(spec.max))(rng));
      } else {
        trial.random_config[name] = static_cast<std::int64_t>(std::uniform_int_distribution<std::int64_t>(
            static_cast<std::int64_t>(spec.min), static_cast<std::int64_t>(spec.max))(rng));
      }
    }

    trial.accuracy.recommended = final_accuracy(data, rec.config, seed);
    trial.accuracy.nearest = final_accuracy(data, nearest.config, seed);
    trial.accuracy.random = final_accuracy(data, trial.random_config, seed);
    trial.accuracy.defaults = final_accuracy(data, default_config(model.arch_hparams), seed);
    trial.grid_best_lr =
        std::get<double>(tune_family_record(trial.held_out, seed).config.at("learning_rate"));
    report.trials.push_back(std::move(trial));
  }

  report.mean_accuracy = {mean_of(report.trials, &ArmScores::recommended), mean_of(report.trials, &ArmScores::nearest),
                          mean_of(report.trials, &ArmScores::random), mean_of(report.trials, &ArmScores::defaults)};
  int wins = 0;
  int default_wins = 0;
  for (const auto& t : report.trials) {
    wins += t.accuracy.recommended >= t.accuracy.random;
    default_wins += t.accuracy.recommended >= t.accuracy.defaults;
  }
  report.win_rate = static_cast<double>(wins) / n_trials;
  report.default_win_rate = static_cast<double>(default_wins) / n_trials;
  return report;
}

json to_json(const BenchReport& report) {
  json trials = json::array();
  for (const auto& t : report.trials) {
    json neighbors = json::array();
    for (const auto& [name, w] : t.neighbors) neighbors.push_back({{"dataset", name}, {"weight", w}});
    trials.push_back({{"seed", t.seed},
                      {"held_out", {{"family_id", t.held_out.family_id},
                                    {"sigma", t.held_out.sigma},
                                    {"n_classes", t.held_out.n_classes}}},
                      {"neighbors", std::move(neighbors)},
                      {"recommended_config", config_to_json(t.recommended_config)},
                      {"random_config", config_to_json(t.random_config)},
                      {"grid_best_lr", t.grid_best_lr},
                      {"accuracy", arms_json(t.accuracy)}});
  }
  return json{{"n_known", report.n_known},
              {"n_trials", report.n_trials},
              {"mean_accuracy", arms_json(report.mean_accuracy)},
              {"win_rate", report.win_rate},
              {"default_win_rate", report.default_win_rate},
              {"trials", std::move(trials)}};
}

std::string format_table(const BenchReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-8s %-3s %-10s %-10s %-11s %-8s %-8s %-8s %-8s\n", "seed", "sigma", "K",
                "rec_lr", "grid_lr", "neighbors", "rec", "nearest", "random", "default");
  out += line;
  for (const auto& t : report.trials) {
    const double lr = numeric_value(t.recommended_config.at("learning_rate")).value_or(0.0);
    std::snprintf(line, sizeof line, "%-6llu %-8.3f %-3d %-10.3g %-10.3g %-11zu %-8.4f %-8.4f %-8.4f %-8.4f\n",
                  static_cast<unsigned long long>(t.seed), t.held_out.sigma, t.held_out.n_classes, lr, t.grid_best_lr,
                  t.neighbors.size(), t.accuracy.recommended, t.accuracy.nearest, t.accuracy.random,
                  t.accuracy.defaults);
    out += line;
  }
  const auto& m = report.mean_accuracy;
  std::snprintf(line, sizeof line, "mean accuracy: recommended %.4f  nearest %.4f  random %.4f  default %.4f\n",
                m.recommended, m.nearest, m.random, m.defaults);
  out += line;
  std::snprintf(line, sizeof line, "win rate vs random: %.2f  vs default: %.2f  (n_known=%d, trials=%d)\n",
                report.win_rate, report.default_win_rate, report.n_known, report.n_trials);
  out += line;
  return out;
}

CorrelationStudy correlation_study(int n_families, std::uint64_t seed) {
  if (n_families < 2) throw Error(ErrorCode::PreconditionViolation, "need at least two families");
  std::mt19937_64 rng(seed);
  const HashEmbedder embedder;
  std::vector<Embedding> embeddings;
  std::vector<double> log_optima;
  for (int i = 0; i < n_families; ++i) {
    const auto family = sample_family("corr-" + std::to_string(seed) + "-" + std::to_string(i), rng);
    const auto record = tune_family_record(family, seed);
    embeddings.push_back(embedder.embed(card_text(record.data_card)));
    log_optima.push_back(std::log10(std::get<double>(record.config.at("learning_rate"))));
  }
  CorrelationStudy study;
  for (int a = 0; a < n_families; ++a) {
    for (int b = a + 1; b < n_families; ++b) {
      study.similarities.push_back(similarity(embeddings[static_cast<std::size_t>(a)], embeddings[static_cast<std::size_t>(b)]));
      study.lr_closeness.push_back(-std::abs(log_optima[static_cast<std::size_t>(a)] - log_optima[static_cast<std::size_t>(b)]));
    }
  }
  study.rho = spearman(Eigen::Map<const Eigen::VectorXd>(study.similarities.data(),
                                                         static_cast<Eigen::Index>(study.similarities.size())),
                       Eigen::Map<const Eigen::VectorXd>(study.lr_closeness.data(),
                                                         static_cast<Eigen::Index>(study.lr_closeness.size())));
  return study;
}

}  // namespace automl
