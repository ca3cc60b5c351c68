#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "capstate/core/random.hpp"
#include "capstate/eda/bateman.hpp"
#include "capstate/eda/cvxeda.hpp"
#include "capstate/eda/features.hpp"
#include "capstate/eda/log_transform.hpp"
#include "capstate/eda/preprocess.hpp"
#include "capstate/eda/scr.hpp"
#include "oracles/signal_oracles.hpp"

using namespace capstate;
using namespace capstate::eda;

namespace {

constexpr double kRate = 2.0;

// One phasic response with the given peak height, starting at onset_s.
double pulse(double t, double onset_s, double height) {
  return height * bateman(t - onset_s, 0.7, 2.0) / bateman_peak(0.7, 2.0);
}

dsp::UniformSeries series(std::size_t n, double rate,
                          const std::function<double(double)> &f) {
  dsp::UniformSeries s{std::vector<double>(n), rate, 0.0};
  for (std::size_t i = 0; i < n; ++i) s.values[i] = f(i / rate);
  return s;
}

double max_abs(const std::vector<double> &v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void expect_invariants(const dsp::UniformSeries &x, const EdaDecomposition &d) {
  for (std::size_t i = 0; i < x.size(); ++i)
    ASSERT_NEAR(d.tonic.values[i] + d.phasic.values[i] + d.residual.values[i],
                x.values[i], 1e-6);
  EXPECT_GE(*std::min_element(d.driver.values.begin(), d.driver.values.end()), -1e-9);
}

} // namespace

TEST(Bateman, KernelShape) {
  EXPECT_EQ(bateman(-1.0, 0.7, 2.0), 0.0);
  EXPECT_EQ(bateman(0.0, 0.7, 2.0), 0.0);
  const double tp = bateman_peak_time(0.7, 2.0);
  EXPECT_GT(bateman(tp, 0.7, 2.0), bateman(tp - 0.05, 0.7, 2.0));
  EXPECT_GT(bateman(tp, 0.7, 2.0), bateman(tp + 0.05, 0.7, 2.0));
  const auto k = bateman_kernel(kRate, 0.7, 2.0);
  EXPECT_EQ(k.front(), 0.0);
  EXPECT_NEAR(k[3], bateman(1.5, 0.7, 2.0) / kRate, 1e-15);
}

TEST(Preprocess, ConstantBecomesZero) {
  const auto y = preprocess_eda(series(32 * 70, 32.0, [](double) { return 5.0; }));
  EXPECT_EQ(y.rate_hz, 2.0);
  EXPECT_LT(max_abs(y.values), 1e-9);
}

TEST(Preprocess, SinusoidOnLineSurvives) {
  const auto y = preprocess_eda(series(32 * 120, 32.0, [](double t) {
    return 1.0 + 0.02 * t + 0.3 * std::sin(2 * std::numbers::pi * 0.1 * t);
  }));
  // Skip the filter's edge region before fitting.
  EXPECT_NEAR(oracle::sinusoid_amplitude(y.values, 0.1, 2.0, 20, y.size() - 20), 0.3, 0.3 * 0.02);
}

TEST(Preprocess, FiveHertzNoiseIsSuppressed) {
  const auto in = series(32 * 120, 32.0, [](double t) {
    return std::sin(2 * std::numbers::pi * 5.0 * t);
  });
  const auto y = preprocess_eda(in);
  // Attenuation measured before decimation would alias it.
  const auto filtered = dsp::butterworth_lowpass(dsp::detrend_linear(in), 4, 1.0);
  const std::size_t skip = 32 * 10;
  double pin = 0, pout = 0;
  for (std::size_t i = skip; i + skip < in.size(); ++i) {
    pin += in.values[i] * in.values[i];
    pout += filtered.values[i] * filtered.values[i];
  }
  EXPECT_LT(10.0 * std::log10(pout / pin), -40.0);
  const std::vector<double> inner(y.values.begin() + 20, y.values.end() - 20);
  EXPECT_LT(max_abs(inner), 0.01);
}

TEST(Preprocess, RejectsShortInput) {
  EXPECT_THROW(preprocess_eda(series(32 * 30, 32.0, [](double) { return 1.0; })),
               DataError);
}

TEST(CvxEda, ZeroSignal) {
  const dsp::UniformSeries x{std::vector<double>(120, 0.0), kRate, 0.0};
  const auto d = cvxeda_decompose(x);
  EXPECT_EQ(max_abs(d.driver.values), 0.0);
  EXPECT_LT(max_abs(d.tonic.values), 1e-12);
  EXPECT_NEAR(d.objective, 0.0, 1e-15);
}

TEST(CvxEda, LinearDriftGoesToTonic) {
  const auto x = series(240, kRate, [](double t) { return 2.0 + 0.01 * t; });
  const auto d = cvxeda_decompose(x);
  expect_invariants(x, d);
  const double range = 0.01 * x.time_at(239);
  EXPECT_LT(max_abs(d.phasic.values), 0.01 * range);
}

TEST(CvxEda, RecoversSinglePulse) {
  Rng rng(17);
  auto x = series(240, kRate, [](double t) { return 2.0 + pulse(t, 30.0, 1.0); });
  for (auto &v : x.values) v += rng.normal(0.0, 0.005);
  CvxEdaParams p;
  p.record_trace = true;
  const auto d = cvxeda_decompose(x, p);
  expect_invariants(x, d);
  double near = 0, total = 0;
  for (std::size_t i = 0; i < d.driver.size(); ++i) {
    total += d.driver.values[i];
    if (i >= 59 && i <= 61) near += d.driver.values[i];
  }
  EXPECT_GT(near / total, 0.9);
  EXPECT_NEAR(*std::max_element(d.phasic.values.begin(), d.phasic.values.end()), 1.0,
              0.1);
  for (std::size_t i = 1; i < d.objective_trace.size(); ++i)
    ASSERT_LE(d.objective_trace[i], d.objective_trace[i - 1]);
}

TEST(CvxEda, ScalingEquivariance) {
  Rng rng(23);
  auto x = series(200, kRate, [](double t) {
    return 1.5 + 0.004 * t + pulse(t, 20.0, 0.6) + pulse(t, 60.0, 0.3);
  });
  for (auto &v : x.values) v += rng.normal(0.0, 0.01);
  CvxEdaParams p;
  p.tolerance = 1e-9;
  p.rel_objective_tol = 0.0;
  p.max_iters = 200000;
  const auto a = cvxeda_decompose(x, p);
  const double k = 3.0;
  auto xk = x;
  for (auto &v : xk.values) v *= k;
  auto pk = p;
  pk.alpha *= k;
  pk.tolerance *= k;
  const auto b = cvxeda_decompose(xk, pk);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(b.tonic.values[i], k * a.tonic.values[i], 1e-4);
    EXPECT_NEAR(b.phasic.values[i], k * a.phasic.values[i], 1e-4);
    EXPECT_NEAR(b.driver.values[i], k * a.driver.values[i], 1e-3);
  }
}

TEST(CvxEda, FuzzedInvariants) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const double onset = rng.uniform(5, 80), h = rng.uniform(0.05, 1.5);
    const double level = rng.uniform(0.5, 10), slope = rng.uniform(-0.01, 0.01);
    auto x = series(200, kRate, [&](double t) {
      return level + slope * t + pulse(t, onset, h);
    });
    for (auto &v : x.values) v += rng.normal(0.0, 0.02);
    expect_invariants(x, cvxeda_decompose(x));
  }
}

TEST(CvxEda, ReportsNonConvergence) {
  auto x = series(200, kRate, [](double t) { return 2.0 + pulse(t, 30.0, 1.0); });
  CvxEdaParams p;
  p.max_iters = 3;
  p.rel_objective_tol = 0.0;
  try {
    cvxeda_decompose(x, p);
    FAIL() << "expected error";
  } catch (const NumericalError &e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(CvxEda, RejectsBadInput) {
  EXPECT_THROW(cvxeda_decompose({std::vector<double>(20, 1.0), kRate, 0.0}),
               ParameterError);
  CvxEdaParams p;
  p.tau0_s = 3.0;
  EXPECT_THROW(cvxeda_decompose({std::vector<double>(60, 1.0), kRate, 0.0}, p),
               ParameterError);
}

TEST(Scr, FlatPhasicHasNoEvents) {
  EXPECT_TRUE(detect_scrs({std::vector<double>(120, 0.0), kRate, 0.0}).empty());
}

TEST(Scr, TwoSeparatedPulses) {
  const auto ph = series(240, kRate, [](double t) {
    return pulse(t, 20.0, 0.5) + pulse(t, 70.0, 0.8);
  });
  const auto ev = detect_scrs(ph);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0].amplitude_us, 0.5, 0.05);
  EXPECT_NEAR(ev[1].amplitude_us, 0.8, 0.08);
  EXPECT_NEAR(ev[0].onset_s, 20.0, 0.5);
}

TEST(Scr, SubThresholdPulseDropped) {
  const auto ph = series(240, kRate, [](double t) { return pulse(t, 20.0, 0.005); });
  EXPECT_TRUE(detect_scrs(ph, 0.01).empty());
}

TEST(Scr, FuzzedEventsAreWellFormed) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    dsp::UniformSeries ph{std::vector<double>(120), kRate, 0.0};
    for (auto &v : ph.values) v = rng.uniform(0, 0.2);
    const double thr = rng.uniform(0.0, 0.1);
    for (const auto &e : detect_scrs(ph, thr)) {
      ASSERT_LT(e.onset_s, e.peak_s);
      ASSERT_GE(e.amplitude_us, thr);
    }
  }
}

TEST(EdaFeatures, ConstantWindow) {
  const dsp::UniformSeries c{std::vector<double>(120, 3.0), kRate, 0.0};
  const dsp::UniformSeries z{std::vector<double>(120, 0.0), kRate, 0.0};
  const auto f = eda_features(c, c, z, {}).to_array();
  const std::array<double, 12> want{3, 0, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(f[i], want[i], 1e-12) << i;
}

TEST(EdaFeatures, TonicRamp) {
  const auto tonic = series(120, kRate, [](double t) { return 0.1 * t; });
  const dsp::UniformSeries z{std::vector<double>(120, 0.0), kRate, 0.0};
  const auto f = eda_features(tonic, tonic, z, {});
  EXPECT_NEAR(f.scl_slope, 0.1, 1e-12);
  // 120 samples at 2 Hz span 59.5 s.
  EXPECT_NEAR(f.scl_range, 0.1 * 59.5, 1e-12);
}

TEST(EdaFeatures, EventStatistics) {
  const dsp::UniformSeries c{std::vector<double>(120, 3.0), kRate, 0.0};
  const std::vector<ScrEvent> ev{{5.0, 7.0, 0.5, 0.6}, {30.0, 32.0, 0.8, 0.9}};
  const auto f = eda_features(c, c, c, ev);
  EXPECT_NEAR(f.scr_amp_mean, 0.65, 1e-12);
  EXPECT_NEAR(f.scr_amp_sd, 0.15, 1e-12);
  EXPECT_EQ(f.scr_count, 2.0);
  EXPECT_NEAR(f.scr_peak_mean, 0.75, 1e-12);
  EXPECT_LE(f.raw_min, f.raw_mean);
  EXPECT_LE(f.raw_mean, f.raw_max);
}

TEST(EdaFeatures, WindowingByOnset) {
  const std::vector<ScrEvent> ev{{5.0, 7.0, 0.5, 0.5}, {59.0, 61.0, 0.5, 0.5},
                                 {60.0, 62.0, 0.5, 0.5}};
  EXPECT_EQ(events_in_window(ev, 0.0, 60.0).size(), 2u);
  EXPECT_EQ(events_in_window(ev, 60.0, 120.0).size(), 1u);
}

TEST(EdaFeatures, RejectsMisalignedWindows) {
  const dsp::UniformSeries a{std::vector<double>(120, 1.0), kRate, 0.0};
  const dsp::UniformSeries b{std::vector<double>(120, 1.0), kRate, 0.5};
  const dsp::UniformSeries c{std::vector<double>(119, 1.0), kRate, 0.0};
  EXPECT_THROW(eda_features(a, b, a, {}), DataError);
  EXPECT_THROW(eda_features(a, a, c, {}), DataError);
}

TEST(LogTransform, FlagsFollowCv) {
  Rng rng(6);
  std::vector<std::array<double, 2>> rows;
  for (int i = 0; i < 400; ++i) {
    // dim 0: CV ~0.2; dim 1: exponential-ish heavy tail, CV ~2.
    const double e = -std::log(rng.uniform());
    rows.push_back({10.0 + 2.0 * rng.normal(), std::pow(e, 2.5)});
  }
  const auto t = fit_log_transform(rows, 2);
  EXPECT_FALSE(t.flags[0]);
  EXPECT_TRUE(t.flags[1]);
  EXPECT_NEAR(t.train_cv[0], 0.2, 0.05);
  auto r = rows[3];
  const double before = r[0];
  t.apply(r);
  EXPECT_EQ(r[0], before);
  EXPECT_NEAR(r[1], std::log1p(rows[3][1] - t.train_min[1]), 1e-15);
}

TEST(LogTransform, HeldOutDataNeverChangesFlags) {
  Rng rng(10);
  std::vector<std::array<double, 3>> train, held;
  for (int i = 0; i < 100; ++i)
    train.push_back({rng.uniform(1, 2), rng.uniform(0, 5), 1.0 + rng.normal(0, 0.1)});
  // Held-out values would push every dimension across the threshold.
  for (int i = 0; i < 100; ++i) held.push_back({1e4 * rng.uniform(), 1e-3, 50.0});
  const auto a = fit_log_transform(train, 3);
  auto both = train;
  both.insert(both.end(), held.begin(), held.end());
  EXPECT_NE(fit_log_transform(both, 3).flags, a.flags);
  // What the pipeline does: fit on training windows, apply to both.
  const auto b = fit_log_transform(train, 3);
  EXPECT_EQ(a, b);
  auto h = held[0];
  b.apply(h);
  for (double v : h) EXPECT_TRUE(std::isfinite(v));
}
