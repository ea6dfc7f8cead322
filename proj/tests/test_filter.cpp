#include <vector>

#include <gtest/gtest.h>

#include "ggkaf/filter.hpp"
#include "ggkaf/systems.hpp"
#include "test_support.hpp"

namespace ggkaf {
namespace {

Hyperparams table1_params() { return Hyperparams{0.09, 0.03, 1e-3, 0.1, 1e-3, 0.05}; }

FilterState make(AlgoVariant v, Index dim = 2, Hyperparams hp = table1_params()) {
  return FilterState::with_width(v, hp, dim, 1.0);
}

double predict_from(const Dictionary& dict, const Vector& u) {
  return dict.coefficients().dot(kernel_vector(u, dict));
}

TEST(Filter, PredictOnEmptyDictionaryIsZero) {
  const FilterState f = make(AlgoVariant::Nmeg);
  EXPECT_EQ(f.predict(Vector::Zero(2)), 0.0);
  EXPECT_THROW(f.predict(Vector::Zero(3)), std::invalid_argument);
}

TEST(Filter, VariantTagsRoundTrip) {
  for (AlgoVariant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(parse_variant("nmeg_scalar"), AlgoVariant::NmegScalar);
  EXPECT_THROW(parse_variant("klms"), std::invalid_argument);
}

TEST(Filter, ConstructionValidatesInputs) {
  Matrix z(2, 2);
  z << 2, 0.5, 0.5, 1;
  EXPECT_THROW(FilterState(AlgoVariant::NmegScalar, table1_params(), SymMatrix(z)), std::invalid_argument);
  EXPECT_THROW(FilterState(AlgoVariant::KnlmsL1, table1_params(), SymMatrix(z)), std::invalid_argument);
  EXPECT_NO_THROW(FilterState(AlgoVariant::Meg, table1_params(), SymMatrix(z)));
  EXPECT_THROW(FilterState(AlgoVariant::Nmeg, table1_params(), SymMatrix(-z)), std::invalid_argument);
  Hyperparams bad = table1_params();
  bad.mu = 0.0;
  EXPECT_THROW(make(AlgoVariant::Nmeg, 2, bad), std::invalid_argument);
  EXPECT_THROW(FilterState::with_width(AlgoVariant::KnlmsL1, table1_params(), 2, 0.0), std::invalid_argument);
}

TEST(Filter, FirstStepAdmitsInputWithNormalizedCoefficient) {
  FilterState f = make(AlgoVariant::Nmeg, 2, Hyperparams{0.5, 0.5, 0.0, 0.1, 1e-3, 0.05});
  const Vector u = Vector::Constant(2, 0.25);
  const StepRecord rec = f.train_step(u, 1.0);
  EXPECT_EQ(rec.n, 0u);
  EXPECT_EQ(rec.y, 0.0);
  EXPECT_EQ(rec.e, 1.0);
  EXPECT_EQ(rec.sq_err, 1.0);
  ASSERT_EQ(f.dictionary().size(), 1u);
  EXPECT_EQ(rec.dict_size, 1u);
  // 0 + mu * e * 1 / (rho + 1)
  EXPECT_DOUBLE_EQ(f.dictionary()[0].coeff, 1.0 / 3.0);
  EXPECT_EQ(f.dictionary()[0].center, u);
  EXPECT_DOUBLE_EQ(f.predict(u), 1.0 / 3.0);
}

TEST(Filter, OnePredictionAtomAtItsCenter) {
  FilterState f = make(AlgoVariant::KnlmsL1, 2, Hyperparams{1.0, 1.0, 0.0, 0.1, 0.0, 0.0});
  f.train_step(Vector::Zero(2), 4.0);  // coeff = 1 * 4 * 1 / (1 + 1) = 2
  EXPECT_EQ(f.dictionary()[0].coeff, 2.0);
  EXPECT_EQ(f.predict(Vector::Zero(2)), 2.0);
}

TEST(Filter, LargeLambdaPrunesTheNewAtomImmediately) {
  Hyperparams hp = table1_params();
  hp.lambda = 1e6;
  FilterState f = make(AlgoVariant::Nmeg, 2, hp);
  const StepRecord rec = f.train_step(Vector::Ones(2), 0.3);
  EXPECT_EQ(f.dictionary().size(), 0u);
  EXPECT_EQ(rec.delta.pruned, 1u);
  EXPECT_EQ(f.step_count(), 1u);
}

TEST(Filter, KnlmsNeverMovesCentersOrPrecisions) {
  FilterState f = make(AlgoVariant::KnlmsL1);
  const auto samples = std_gauss_toy(3, 300);
  for (const Sample& s : samples) {
    const std::vector<DictEntry> before = f.dictionary().entries();
    f.train_step(s.u, s.d);
    // Survivors keep insertion order; match them to their pre-step copies by birth index.
    for (const DictEntry& after : f.dictionary().entries()) {
      for (const DictEntry& b : before) {
        if (b.birth_index != after.birth_index) continue;
        EXPECT_EQ(after.center, b.center);
        EXPECT_EQ(after.precision.matrix(), b.precision.matrix());
      }
    }
  }
}

TEST(Filter, ReportedPredictionPrecedesTheUpdate) {
  for (AlgoVariant v : kAllVariants) {
    FilterState f = make(v);
    for (const Sample& s : gen_gauss_toy((Matrix(2, 2) << 5, 0.5, 0.5, 0.2).finished(), 4, 300)) {
      const double y = f.predict(s.u);
      const StepRecord rec = f.train_step(s.u, s.d);
      EXPECT_NEAR(rec.y, y, 1e-11);  // summation order differs by the zero-weight new atom
      EXPECT_EQ(rec.e, s.d - rec.y);
    }
  }
}

TEST(Filter, InvariantsHoldAfterEveryStep) {
  for (AlgoVariant v : kAllVariants) {
    FilterState f = make(v);
    std::size_t n = 0;
    for (const Sample& s : std_gauss_toy(5, 1500)) {
      const StepRecord rec = f.train_step(s.u, s.d);
      ++n;
      ASSERT_EQ(f.step_count(), n);
      ASSERT_EQ(rec.dict_size, f.dictionary().size());
      for (const DictEntry& e : f.dictionary().entries()) {
        ASSERT_NE(e.coeff, 0.0);
        ASSERT_GT(min_eigenvalue(e.precision), 0.0);
        if (uses_scalar_width(v)) {
          ASSERT_TRUE(e.precision.is_scaled_identity());
        }
      }
    }
  }
}

TEST(Filter, AdaptiveVariantsDoMoveKernels) {
  for (AlgoVariant v : {AlgoVariant::NmegScalar, AlgoVariant::Meg, AlgoVariant::Nmeg}) {
    FilterState f = make(v);
    for (const Sample& s : std_gauss_toy(6, 200)) f.train_step(s.u, s.d);
    bool moved_center = false;
    bool moved_precision = false;
    const auto samples = std_gauss_toy(6, 200);
    for (const DictEntry& e : f.dictionary().entries()) {
      moved_center |= e.center != samples[e.birth_index].u;
      moved_precision |= e.precision.matrix() != Matrix::Identity(2, 2);
    }
    EXPECT_TRUE(moved_center) << to_string(v);
    EXPECT_TRUE(moved_precision) << to_string(v);
  }
}

TEST(Filter, MegSkipsPrecisionUpdatesItCannotTakeTheLogOf) {
  Matrix z(2, 2);
  z << 1e-14, 0, 0, 1;  // positive definite, below the relative log floor
  FilterState f(AlgoVariant::Meg, table1_params(), SymMatrix(z));
  const auto samples = std_gauss_toy(7, 50);
  EXPECT_NO_THROW(run_sequence(f, samples));
  EXPECT_GT(f.diagnostics().meg_log_failures, 0u);
  for (const DictEntry& e : f.dictionary().entries()) EXPECT_EQ(e.precision.matrix(), z);
}

TEST(Filter, NmegNeverTakesALogarithm) {
  FilterState f = make(AlgoVariant::Nmeg);
  const std::size_t before = mat_log_invocations();
  run_sequence(f, std_gauss_toy(8, 500));
  EXPECT_EQ(mat_log_invocations(), before);
  EXPECT_EQ(f.diagnostics().meg_log_failures, 0u);
}

TEST(RunSequence, EmptyStream) {
  FilterState f = make(AlgoVariant::Meg);
  EXPECT_TRUE(run_sequence(f, {}).empty());
  EXPECT_EQ(f.step_count(), 0u);
}

TEST(RunSequence, DeterministicForTheSameStream) {
  const auto samples = lorenz_stream(9, 400);
  for (AlgoVariant v : kAllVariants) {
    FilterState a = make(v, 5, Hyperparams{0.5, 0.05, 5e-4, 0.1, 0.5, 0.1});
    FilterState b = make(v, 5, Hyperparams{0.5, 0.05, 5e-4, 0.1, 0.5, 0.1});
    const auto ra = run_sequence(a, samples);
    const auto rb = run_sequence(b, samples);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t n = 0; n < ra.size(); ++n) {
      EXPECT_EQ(ra[n].y, rb[n].y);
      EXPECT_EQ(ra[n].sq_err, rb[n].sq_err);
      EXPECT_EQ(ra[n].dict_size, rb[n].dict_size);
    }
  }
}

TEST(RunSequence, SquaredErrorsReplayFromSerializedStates) {
  const auto samples = std_gauss_toy(10, 400);
  for (AlgoVariant v : kAllVariants) {
    FilterState f = make(v);
    for (std::size_t n = 0; n < samples.size(); ++n) {
      const Dictionary replayed = dictionary_from_json(nlohmann::json::parse(to_json(f.dictionary()).dump()));
      const StepRecord rec = f.train_step(samples[n].u, samples[n].d);
      const double e = samples[n].d - predict_from(replayed, samples[n].u);
      ASSERT_NEAR(rec.sq_err, e * e, 1e-10 * (1.0 + e * e)) << to_string(v) << " step " << n;
    }
  }
}

}  // namespace
}  // namespace ggkaf
