#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "photocount/estimator.hpp"
#include "photocount/parallel.hpp"

namespace pc = photocount;
using pc::Parameter;

namespace {

const pc::AtomParams kFive{5.0, 0.0, 1.0, 1.0};
const double kSigma4 = 1.0 / std::sqrt(8.16e4);  // CRB at N = 1e4

std::vector<double> taus_for(const pc::AtomParams& p, std::size_t n, std::uint64_t stream) {
  return pc::waiting_times(pc::simulate_record(p, pc::StopAfterClicks{n}, 4242, stream)).taus;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

TEST(Histogram, BinsAndRange) {
  const pc::TauGrid grid{0.5, 5};
  const auto hist = pc::make_histogram({0.0, 0.49, 0.5, 1.9, 2.0}, grid);
  EXPECT_EQ(hist.counts, (std::vector<std::size_t>{2, 1, 0, 2}));
  EXPECT_EQ(hist.n_total, 5u);
  EXPECT_EQ(hist.bin_width(), 0.5);
  EXPECT_THROW(pc::make_histogram({2.01}, grid), std::out_of_range);
  EXPECT_THROW(pc::make_histogram({-0.1}, grid), std::out_of_range);
  EXPECT_THROW(pc::make_histogram({}, pc::TauGrid{0.5, 1}), std::invalid_argument);
}

TEST(Gain, ExpectedCountsGiveZeroCorrection) {
  const auto gain = pc::gain_at(kFive, Parameter::omega, 1e4, 0.0);
  const double dtau = gain.grid.step;
  const double unbiased = (gain.g * (1e4 * gain.w_bin * dtau)).sum() + gain.C;
  EXPECT_NEAR(unbiased, 0.0, 1e-10);
  EXPECT_EQ(gain.theta_prior, 5.0);

  pc::WaitingHistogram rounded{gain.grid, {}, 0};
  for (Eigen::Index j = 0; j < gain.w_bin.size(); ++j) {
    rounded.counts.push_back(static_cast<std::size_t>(std::llround(1e4 * gain.w_bin(j) * dtau)));
    rounded.n_total += rounded.counts.back();
  }
  EXPECT_LT(std::abs(pc::linear_estimate(rounded, gain)), kSigma4);
}

// Binning discards information. Near each density zero the score diverges as
// 1/(tau - tau_0), so the bin holding the node loses O(1) per unit width and
// the total deficit is first order in the bin width.
TEST(Gain, BinnedInformationApproachesContinuum) {
  std::vector<double> deficit;
  for (const std::size_t sub : {1u, 2u, 4u}) {
    pc::EstimatorOptions opts;
    opts.bin_subdivision = sub;
    deficit.push_back(8.16 - pc::gain_at(kFive, Parameter::omega, 1e4, 0.0, opts).fisher_per_photon);
  }
  EXPECT_GT(deficit[0], 0.0);
  EXPECT_LT(deficit[0] / 8.16, 0.03);
  EXPECT_NEAR(deficit[0] / deficit[1], 2.0, 0.4);
  EXPECT_NEAR(deficit[1] / deficit[2], 2.0, 0.4);
}

TEST(Gain, GainIsScaledScore) {
  const auto gain = pc::gain_at({3.0, 1.0, 1.0, 0.6}, Parameter::delta, 500, 0.0);
  const double beta = 1.0 / (500 * gain.fisher_per_photon / 2.0);
  for (Eigen::Index j = 0; j < gain.g.size(); j += 13) {
    if (gain.g(j) == 0.0) continue;
    EXPECT_NEAR(gain.g(j), beta * gain.dw_bin(j) / (2 * gain.w_bin(j)), 1e-12 * std::abs(gain.g(j)));
  }
}

TEST(Gain, BothFormsAgree) {
  const auto taus = taus_for(kFive, 3000, 1);
  const auto gain = pc::gain_at(kFive, Parameter::omega, 3000, max_of(taus));
  const auto hist = pc::make_histogram(taus, gain.grid);
  EXPECT_NEAR(pc::linear_estimate(hist, gain), pc::linear_estimate_ratio_form(hist, gain), 1e-10);
  pc::EstimatorOptions finer;
  finer.bin_subdivision = 2;
  const auto other = pc::gain_at(kFive, Parameter::omega, 3000, max_of(taus), finer);
  EXPECT_THROW(pc::linear_estimate(hist, other), std::invalid_argument);
}

TEST(Gain, FloorExcludesLowDensityBins) {
  const auto table = pc::wtd_numeric(kFive, pc::choose_grid(kFive));
  const auto deriv = pc::wtd_derivative(kFive, Parameter::omega, 1e-4, table.grid);
  const auto gain = pc::build_gain(table, deriv.dw(), 5.0, 100, 0.1);
  EXPECT_GT(gain.excluded_bins, 0u);
  EXPECT_GT(gain.excluded_mass, 0.0);
  EXPECT_LT(gain.excluded_mass, 1.0);
  const double floor = 0.1 * gain.w_bin.maxCoeff();
  for (Eigen::Index j = 0; j < gain.g.size(); ++j) {
    if (gain.w_bin(j) < floor) EXPECT_EQ(gain.g(j), 0.0);
  }
  EXPECT_THROW(pc::build_gain(table, Eigen::ArrayXd::Zero(table.w.size()), 5.0, 100), pc::NumericalFailure);
  EXPECT_THROW(pc::build_gain(table, deriv.dw().head(10), 5.0, 100), std::invalid_argument);
  EXPECT_THROW(pc::build_gain(table, deriv.dw(), 5.0, 0.5), std::invalid_argument);
}

struct Ensemble {
  std::vector<double> full;     // estimates from N = 1e4
  std::vector<double> quarter;  // estimates from the first 2500
};

Ensemble one_shot_ensemble(const pc::AtomParams& truth, double theta0, std::size_t records) {
  Ensemble out{std::vector<double>(records), std::vector<double>(records)};
  const auto gain_full = pc::gain_at(pc::with(truth, Parameter::omega, theta0), Parameter::omega, 1e4, 200.0);
  const auto gain_quarter = pc::gain_at(pc::with(truth, Parameter::omega, theta0), Parameter::omega, 2500, 200.0);
  pc::parallel_for(records, 4, [&](std::size_t k) {
    const auto taus = taus_for(truth, 10000, k);
    out.full[k] = theta0 + pc::linear_estimate(pc::make_histogram(taus, gain_full.grid), gain_full);
    const std::vector<double> head(taus.begin(), taus.begin() + 2500);
    out.quarter[k] = theta0 + pc::linear_estimate(pc::make_histogram(head, gain_quarter.grid), gain_quarter);
  });
  return out;
}

TEST(LinearEstimator, SpreadMatchesCramerRaoAndScalesWithN) {
  const auto ens = one_shot_ensemble(kFive, 5.0, 200);
  EXPECT_NEAR(oracle::stdev(ens.full) / kSigma4, 1.0, 0.15);
  EXPECT_LT(std::abs(oracle::mean(ens.full) - 5.0), 3 * kSigma4 / std::sqrt(200.0));
  const double ratio = oracle::stdev(ens.quarter) / oracle::stdev(ens.full);
  EXPECT_NEAR(ratio, 2.0, 0.3);
}

TEST(LinearEstimator, PullsBackSmallOffset) {
  const pc::AtomParams truth{5.05, 0.0, 1.0, 1.0};
  const auto ens = one_shot_ensemble(truth, 5.0, 20);
  const double recovered = oracle::mean(ens.full) - 5.0;
  EXPECT_NEAR(recovered / 0.05, 1.0, 0.2);
}

TEST(LinearEstimator, FinerBinsBarelyMoveEstimate) {
  const auto taus = taus_for(kFive, 10000, 3);
  pc::EstimatorOptions coarse;
  pc::EstimatorOptions fine;
  fine.bin_subdivision = 2;
  const auto a = pc::gain_at(kFive, Parameter::omega, 1e4, max_of(taus), coarse);
  const auto b = pc::gain_at(kFive, Parameter::omega, 1e4, max_of(taus), fine);
  EXPECT_NEAR(b.grid.step, a.grid.step / 2, 1e-15);
  const double da = pc::linear_estimate(pc::make_histogram(taus, a.grid), a);
  const double db = pc::linear_estimate(pc::make_histogram(taus, b.grid), b);
  EXPECT_LT(std::abs(da - db), 0.2 * kSigma4);
  fine.bin_subdivision = 0;
  EXPECT_THROW(pc::gain_at(kFive, Parameter::omega, 1e4, 0.0, fine), std::invalid_argument);
}

TEST(EstimateTrace, SingleStepEqualsOneShot) {
  const auto taus = taus_for(kFive, 4000, 5);
  const auto trace = pc::estimate_trace({taus}, kFive, Parameter::omega, 5.0, {4000});
  ASSERT_EQ(trace.points.size(), 1u);
  const auto gain = pc::gain_at(kFive, Parameter::omega, 4000, max_of(taus));
  const double expected = 5.0 + pc::linear_estimate(pc::make_histogram(taus, gain.grid), gain);
  EXPECT_DOUBLE_EQ(trace.points[0].theta_hat, expected);
  EXPECT_NEAR(trace.points[0].sigma_crb, 1.0 / std::sqrt(4000 * gain.fisher_per_photon), 1e-15);
  EXPECT_FALSE(trace.nonlinear);
}

TEST(EstimateTrace, IteratedTraceLandsWithinBound) {
  int within = 0;
  const auto schedule = pc::log_schedule(100, 10000, 5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const pc::WaitingTimes taus{taus_for(kFive, 10000, 100 + s)};
    const double start = pc::initial_guess(taus, kFive, Parameter::omega, 5.0);
    const auto trace = pc::estimate_trace(taus, kFive, Parameter::omega, start, schedule);
    EXPECT_EQ(trace.points.back().n_used, 10000u);
    if (std::abs(trace.points.back().theta_hat - 5.0) < 3 * trace.points.back().sigma_crb) ++within;
  }
  EXPECT_GE(within, 18);
}

TEST(EstimateTrace, TrustRegionClipsLargeSteps) {
  const pc::WaitingTimes taus{taus_for(kFive, 2000, 9)};
  pc::EstimatorOptions opts;
  opts.trust_region = 0.01;
  const auto trace = pc::estimate_trace(taus, kFive, Parameter::omega, 3.0, {2000}, opts);
  EXPECT_TRUE(trace.nonlinear);
  EXPECT_TRUE(trace.points[0].trust_clipped);
  EXPECT_NEAR(std::abs(trace.points[0].theta_hat - 3.0), 0.03, 1e-12);
}

TEST(EstimateTrace, RejectsBadSchedules) {
  const pc::WaitingTimes taus{taus_for(kFive, 100, 2)};
  EXPECT_THROW(pc::estimate_trace(taus, kFive, Parameter::omega, 5.0, {}), std::invalid_argument);
  EXPECT_THROW(pc::estimate_trace(taus, kFive, Parameter::omega, 5.0, {50, 20}), std::invalid_argument);
  EXPECT_THROW(pc::estimate_trace(taus, kFive, Parameter::omega, 5.0, {0, 20}), std::invalid_argument);
  EXPECT_THROW(pc::estimate_trace(taus, kFive, Parameter::omega, 5.0, {101}), std::invalid_argument);
}

TEST(EstimateTrace, InitialGuessNearTruth) {
  const pc::WaitingTimes taus{taus_for(kFive, 100, 4)};
  const double guess = pc::initial_guess(taus, kFive, Parameter::omega, 4.5);
  EXPECT_NEAR(guess, 5.0, 5 / std::sqrt(8.16 * 100));
  EXPECT_THROW(pc::initial_guess({}, kFive, Parameter::omega, 5.0), std::invalid_argument);
  pc::InitialGuessOptions one;
  one.candidates = 1;
  EXPECT_THROW(pc::initial_guess(taus, kFive, Parameter::omega, 5.0, one), std::invalid_argument);
}

TEST(Schedule, LogSpacing) {
  const auto s = pc::log_schedule(100, 10000);
  ASSERT_EQ(s.size(), 21u);
  EXPECT_EQ(s.front(), 100u);
  EXPECT_EQ(s[10], 1000u);
  EXPECT_EQ(s.back(), 10000u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(pc::log_schedule(7, 7), (std::vector<std::size_t>{7}));
  EXPECT_THROW(pc::log_schedule(0, 10), std::invalid_argument);
  EXPECT_THROW(pc::log_schedule(10, 5), std::invalid_argument);
}

}  // namespace
