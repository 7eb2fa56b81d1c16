#include <gtest/gtest.h>

#include <set>

#include "automl/bench.hpp"
#include "automl/error.hpp"
#include "automl/transfer.hpp"

using namespace automl;

namespace {

TaskFamily family(const std::string& id, double sigma, std::vector<std::string> classes, std::uint64_t seed = 7) {
  TaskFamily f;
  f.family_id = id;
  f.sigma = sigma;
  f.n_classes = static_cast<int>(classes.size());
  f.class_names = std::move(classes);
  f.seed = seed;
  return f;
}

std::vector<std::string> vocab_slice(std::size_t from, std::size_t count) {
  const auto& v = class_vocabulary();
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(from + count)};
}

HyperParamConfig config_with_lr(double lr) {
  auto c = default_config(tiny_model_card().arch_hparams);
  c["learning_rate"] = lr;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an automl::Error";
  return ErrorCode::Busy;
}

}  // namespace

TEST(Bench, VocabularyHasOneHundredDistinctWords) {
  const auto& v = class_vocabulary();
  EXPECT_EQ(v.size(), 100u);
  EXPECT_EQ(std::set<std::string>(v.begin(), v.end()).size(), 100u);
}

TEST(Bench, SampledFamiliesStayInRangeProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto f = sample_family("f" + std::to_string(i), rng);
    ASSERT_GE(f.sigma, 0.1);
    ASSERT_LE(f.sigma, 10.0);
    ASSERT_GE(f.n_classes, 5);
    ASSERT_LE(f.n_classes, 15);
    ASSERT_EQ(std::set<std::string>(f.class_names.begin(), f.class_names.end()).size(),
              static_cast<std::size_t>(f.n_classes));
  }
}

TEST(Bench, SigmaBuckets) {
  EXPECT_EQ(sigma_bucket(1.0), 0);
  EXPECT_EQ(sigma_bucket(10.0), 4);
  EXPECT_EQ(sigma_bucket(0.1), -4);
  EXPECT_EQ(sigma_bucket(std::pow(10.0, 0.3)), 1);
}

TEST(Bench, GenerationIsDeterministic) {
  const auto f = family("fam", 2.0, vocab_slice(0, 6));
  const auto [a, card_a] = generate_task(f);
  const auto [b, card_b] = generate_task(f);
  EXPECT_EQ(card_a, card_b);
  EXPECT_TRUE(a.train_x == b.train_x);
  EXPECT_TRUE(a.val_y == b.val_y);
  EXPECT_EQ(a.train_x.rows(), 960);
  EXPECT_EQ(a.val_x.rows(), 240);
  EXPECT_EQ(a.train_x.cols(), kFeatureDim);
  EXPECT_EQ(card_a.scale, 1200);
  EXPECT_EQ(card_a.input_type, InputType::tabular);
  EXPECT_NE(card_a.task_description.find("bandp1"), std::string::npos);

  auto other = f;
  other.seed = 8;
  EXPECT_FALSE(generate_task(other).first.train_x == a.train_x);
}

TEST(Bench, FeaturesScaleWithSigma) {
  const auto [small, c1] = generate_task(family("s", 0.5, vocab_slice(0, 4)));
  const auto [large, c2] = generate_task(family("s", 5.0, vocab_slice(0, 4)));
  EXPECT_NEAR(large.train_x.norm() / small.train_x.norm(), 10.0, 1e-9);
}

TEST(Bench, ClassOverlapRaisesCardSimilarity) {
  const HashEmbedder h;
  const auto base = generate_task(family("x", 1.0, vocab_slice(0, 10))).second;
  auto overlap = vocab_slice(0, 6);
  const auto fresh = vocab_slice(50, 4);
  overlap.insert(overlap.end(), fresh.begin(), fresh.end());
  const auto sixty = generate_task(family("y", 1.0, overlap)).second;
  const auto zero = generate_task(family("z", 1.0, vocab_slice(20, 10))).second;
  EXPECT_GT(card_similarity(base, sixty, h), card_similarity(base, zero, h));
}

TEST(Bench, InvalidFamiliesAreRejected) {
  EXPECT_EQ(code_of([] { generate_task(family("a", 1.0, vocab_slice(0, 1))); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { generate_task(family("a", 1.0, vocab_slice(0, 16))); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { generate_task(family("a", 0.0, vocab_slice(0, 3))); }), ErrorCode::PreconditionViolation);
}

TEST(Bench, TinyCardDefaults) {
  const auto m = tiny_model_card();
  EXPECT_EQ(m.name, "logreg-tiny");
  EXPECT_EQ(std::get<double>(m.arch_hparams.at("learning_rate").default_value), 1e-2);
  EXPECT_EQ(std::get<std::int64_t>(m.arch_hparams.at("epochs").default_value), 10);
}

TEST(Bench, EasyTwoClassTaskIsLearned) {
  const auto f = family("easy", 0.1, vocab_slice(0, 2), 1);
  const auto rec = tune_family_record(f, 1);
  EXPECT_GE(rec.best_metric.value, 0.99);
}

TEST(Bench, TrainerReachesTheNearestMeanCeiling) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto [data, card] = generate_task(family("easy", 0.1, vocab_slice(0, 2), seed));
    Eigen::RowVectorXd mean0 = Eigen::RowVectorXd::Zero(kFeatureDim), mean1 = mean0;
    for (Eigen::Index i = 0; i < data.train_x.rows(); ++i) (data.train_y[i] == 0 ? mean0 : mean1) += data.train_x.row(i);
    mean0 /= static_cast<double>((data.train_y.array() == 0).count());
    mean1 /= static_cast<double>((data.train_y.array() == 1).count());
    int hits = 0;
    for (Eigen::Index i = 0; i < data.val_x.rows(); ++i) {
      const int guess = (data.val_x.row(i) - mean0).squaredNorm() < (data.val_x.row(i) - mean1).squaredNorm() ? 0 : 1;
      hits += guess == data.val_y[i];
    }
    const double ceiling = hits / static_cast<double>(data.val_x.rows());
    double best = 0.0;
    for (double lr : bench_lr_grid()) best = std::max(best, final_accuracy(data, config_with_lr(lr), 1));
    EXPECT_GE(best, ceiling - 0.02) << "family seed " << seed;
  }
}

TEST(Bench, HugeLearningRateDivergesAtUnitScale) {
  const auto [data, card] = generate_task(family("unit", 1.0, vocab_slice(0, 5)));
  EXPECT_EQ(code_of([&] { train_tiny(data, config_with_lr(1e3), 1); }), ErrorCode::DivergedTraining);
}

TEST(Bench, HugeLearningRateDiverges) {
  const auto [data, card] = generate_task(family("big", 3.0, vocab_slice(0, 5)));
  auto c = config_with_lr(1e3);
  c["weight_decay"] = 1e-2;
  EXPECT_EQ(code_of([&] { train_tiny(data, c, 1); }), ErrorCode::DivergedTraining);
  EXPECT_DOUBLE_EQ(final_accuracy(data, c, 1), 0.2);
}

TEST(Bench, ZeroLearningRateLeavesTheModelUntouched) {
  const auto [data, card] = generate_task(family("flat", 1.0, vocab_slice(0, 10)));
  auto c = config_with_lr(0.0);
  c["weight_decay"] = 0.0;
  const auto log = train_tiny(data, c, 1);
  ASSERT_EQ(log.entries.size(), 10u);
  for (const auto& e : log.entries) {
    EXPECT_EQ(e.val_metric, log.entries.front().val_metric);
    EXPECT_EQ(e.val_loss, log.entries.front().val_loss);
  }
  EXPECT_NEAR(log.final_entry().val_metric, 0.1, 0.15);
}

TEST(Bench, TrainerNeedsItsParameters) {
  const auto [data, card] = generate_task(family("p", 1.0, vocab_slice(0, 3)));
  auto c = config_with_lr(1e-2);
  c.erase("batch_size");
  EXPECT_EQ(code_of([&] { train_tiny(data, c, 1); }), ErrorCode::PreconditionViolation);
  c = config_with_lr(-1.0);
  EXPECT_EQ(code_of([&] { train_tiny(data, c, 1); }), ErrorCode::PreconditionViolation);
}

TEST(Bench, TrainingIsDeterministic) {
  const auto [data, card] = generate_task(family("d", 1.0, vocab_slice(0, 5)));
  EXPECT_EQ(train_tiny(data, config_with_lr(0.1), 4), train_tiny(data, config_with_lr(0.1), 4));
}

TEST(Bench, LearningRateGrid) {
  const auto g = bench_lr_grid();
  ASSERT_EQ(g.size(), 13u);
  EXPECT_EQ(g.front(), 1e-4);
  EXPECT_EQ(g.back(), 1e2);
}

TEST(Bench, IdenticalFamilyTransfersItsOwnConfig) {
  std::mt19937_64 rng(5);
  Registry registry = add_model_card({}, tiny_model_card());
  std::vector<TaskFamily> families;
  for (int i = 0; i < 3; ++i) {
    families.push_back(sample_family("known-" + std::to_string(i), rng));
    registry = add_record(std::move(registry), tune_family_record(families.back(), 1));
  }
  const auto target = families[1];
  const auto card = generate_task(target).second;
  const auto rec = recommend(card, tiny_model_card(), registry, HashEmbedder{}, 1, 0.0);
  ASSERT_EQ(rec.neighbor_summary.size(), 1u);
  EXPECT_EQ(rec.neighbor_summary[0].first, target.family_id);
  const auto known = query_records(registry, "logreg-tiny")[1];
  EXPECT_EQ(rec.config, known.config);
  const auto data = generate_task(target).first;
  EXPECT_GE(final_accuracy(data, rec.config, 1), known.best_metric.value - 0.02);
}

TEST(Bench, Spearman) {
  const Eigen::VectorXd x = (Eigen::VectorXd(4) << 1, 2, 3, 4).finished();
  EXPECT_DOUBLE_EQ(spearman(x, (Eigen::VectorXd(4) << 10, 20, 30, 40).finished()), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, (Eigen::VectorXd(4) << 4, 3, 2, 1).finished()), -1.0);
  EXPECT_NEAR(spearman(x, (Eigen::VectorXd(4) << 1, 3, 2, 4).finished()), 0.8, 1e-12);
  EXPECT_NEAR(spearman(x, (Eigen::VectorXd(4) << 1, 2, 2, 3).finished()), 0.9486832980505138, 1e-12);
  EXPECT_EQ(code_of([&] { spearman(x, Eigen::VectorXd::Ones(3)); }), ErrorCode::PreconditionViolation);
}

TEST(Bench, BenchmarkPreconditions) {
  EXPECT_EQ(code_of([] { run_unseen_benchmark(0, 1, {1}); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { run_unseen_benchmark(1, 1, {1}); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { run_unseen_benchmark(3, 0, {}); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { run_unseen_benchmark(3, 2, {1}); }), ErrorCode::PreconditionViolation);
}

TEST(Bench, SmallBenchmarkIsDeterministicAndReported) {
  const auto a = run_unseen_benchmark(3, 2, {1, 2});
  const auto b = run_unseen_benchmark(3, 2, {1, 2});
  EXPECT_EQ(to_json(a), to_json(b));
  ASSERT_EQ(a.trials.size(), 2u);
  for (const auto& t : a.trials) {
    for (double acc : {t.accuracy.recommended, t.accuracy.nearest, t.accuracy.random, t.accuracy.defaults}) {
      EXPECT_GE(acc, 0.0);
      EXPECT_LE(acc, 1.0);
    }
    EXPECT_FALSE(t.neighbors.empty());
  }
  const auto j = to_json(a);
  EXPECT_TRUE(j["mean_accuracy"].contains("recommended"));
  EXPECT_TRUE(j["mean_accuracy"].contains("default"));
  EXPECT_EQ(j["n_known"], 3);
  const auto table = format_table(a);
  EXPECT_NE(table.find("recommended"), std::string::npos);
  EXPECT_NE(table.find("random"), std::string::npos);
}

TEST(Bench, SimilarCardsHaveCloserOptima) {
  const auto study = correlation_study(8, 1);
  EXPECT_EQ(study.similarities.size(), 28u);
  EXPECT_EQ(study.lr_closeness.size(), 28u);
  EXPECT_GT(study.rho, 0.0);
}
