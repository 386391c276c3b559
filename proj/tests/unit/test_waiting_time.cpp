#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "photocount/waiting_time.hpp"

namespace pc = photocount;

namespace {

pc::AtomParams make(double omega, double delta = 0.0, double eta = 1.0) { return {omega, delta, 1.0, eta}; }

double lambda(double omega) { return std::sqrt(omega * omega / 4.0 - 1.0 / 16.0); }

TEST(WaitingTime, AnalyticTableMatchesDirectFormula) {
  const pc::TauGrid grid{0.01, 6001};
  for (const double omega : {1.0, 5.0, 10.0}) {
    const auto table = pc::wtd_analytic(make(omega), grid);
    EXPECT_EQ(table.w(0), 0.0);
    for (std::size_t j = 1; j < grid.points; j += 7) {
      EXPECT_NEAR(table.w(j), oracle::resonant_wtd(omega, 1.0, grid.tau(j)), 1e-13);
      EXPECT_NEAR(table.survival(j), oracle::survival(omega, 0, 1, grid.tau(j)), 1e-12);
    }
  }
  EXPECT_THROW(pc::wtd_analytic(make(5, 1), grid), std::invalid_argument);
  EXPECT_THROW(pc::wtd_analytic(make(5, 0, 0.5), grid), std::invalid_argument);
}

TEST(WaitingTime, AnalyticMassReachesOne) {
  const pc::TauGrid grid{1e-3, 60001};
  for (const double omega : {1.0, 2.0, 5.0, 10.0}) {
    const auto table = pc::wtd_analytic(make(omega), grid);
    EXPECT_GE(table.mass, 1.0 - 1e-8) << omega;
    EXPECT_LE(table.mass, 1.0 + 1e-8) << omega;
  }
}

TEST(WaitingTime, NumericMatchesAnalytic) {
  for (const double omega : {0.4, 1.0, 5.0, 10.0}) {
    const auto p = make(omega);
    const pc::TauGrid grid{0.01, 4001};
    const auto num = pc::wtd_numeric(p, grid);
    const auto exact = pc::wtd_analytic(p, grid);
    EXPECT_LT((num.w - exact.w).abs().maxCoeff(), 1e-6) << omega;
    EXPECT_LT((num.survival - exact.survival).abs().maxCoeff(), 1e-6) << omega;
  }
}

TEST(WaitingTime, NodesAtMultiplesOfHalfPeriod) {
  const auto p = make(5);
  const auto grid = pc::choose_grid(p);
  const auto table = pc::wtd_numeric(p, grid);
  const double l = lambda(5);
  for (int k = 1; k * std::numbers::pi / l < 40.0; ++k) {
    const double node = k * std::numbers::pi / l;
    const auto centre = static_cast<Eigen::Index>(std::llround(node / grid.step));
    Eigen::Index best = centre - 3;
    for (Eigen::Index j = centre - 3; j <= centre + 3; ++j) {
      if (table.w(j) < table.w(best)) best = j;
    }
    EXPECT_LE(std::abs(grid.tau(static_cast<std::size_t>(best)) - node), grid.step) << k;
    EXPECT_LT(table.w(best), 1e-3 * table.w.maxCoeff());
  }
}

TEST(WaitingTime, ChosenGridMeetsResolutionAndMass) {
  for (const auto& p : {make(5), make(1), make(10, 3), make(2, 0, 0.3), make(0.3)}) {
    pc::GridOptions opts;
    const auto grid = pc::choose_grid(p, opts);
    EXPECT_LE(grid.step, 2 * std::numbers::pi / (pc::fastest_frequency(p) * opts.points_per_period) + 1e-15);
    const auto table = pc::wtd_numeric(p, grid);
    EXPECT_LT(table.tail_mass, 1.0 - opts.mass_target);
    EXPECT_NEAR(table.mass + table.tail_mass, 1.0, 1e-9) << p.omega << ' ' << p.eta;
  }
  EXPECT_THROW(pc::choose_grid(make(0)), std::invalid_argument);
  pc::GridOptions tiny;
  tiny.max_points = 100;
  EXPECT_THROW(pc::choose_grid(make(5), tiny), pc::NumericalFailure);
  tiny.mass_target = 1.0;
  EXPECT_THROW(pc::choose_grid(make(5), tiny), std::invalid_argument);
}

TEST(WaitingTime, ExtendGridKeepsStep) {
  const pc::TauGrid grid{0.1, 11};
  EXPECT_EQ(pc::extend_grid(grid, 0.5), grid);
  const auto longer = pc::extend_grid(grid, 2.05);
  EXPECT_EQ(longer.step, 0.1);
  EXPECT_GE(longer.max(), 2.05);
  EXPECT_LT(longer.max() - 0.1, 2.05);
}

// At finite efficiency undetected emissions refill the excited state, so the
// unit-efficiency zeros disappear.
TEST(WaitingTime, FiniteEfficiencyLiftsNodes) {
  const double l = lambda(5);
  for (const double eta : {0.1, 0.4, 0.7}) {
    const auto p = make(5, 0, eta);
    const auto table = pc::wtd_numeric(p, pc::choose_grid(p));
    for (int k = 1; k <= 10; ++k) EXPECT_GT(table.density_at(k * std::numbers::pi / l), 0.0) << eta << ' ' << k;
  }
}

TEST(WaitingTime, TailDecaysAtDetectedRate) {
  for (const double eta : {0.01, 0.05}) {
    const auto p = make(5, 0, eta);
    const auto grid = pc::choose_grid(p);
    const auto table = pc::wtd_numeric(p, grid);
    const auto first = static_cast<Eigen::Index>(2 * grid.points / 3);
    const auto n = static_cast<Eigen::Index>(grid.points) - first;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (Eigen::Index j = first; j < first + n; ++j) {
      const double x = grid.tau(static_cast<std::size_t>(j));
      const double y = std::log(table.w(j));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double expected = -eta * oracle::steady_state_ee(5, 0, 1);
    EXPECT_NEAR(slope / expected, 1.0, 0.02) << eta;
    EXPECT_NEAR(pc::wtd_tail_rate(p), -expected, 1e-15);
  }
}

// Halving the RK4 substep shrinks the change in every w_j by the fourth-order
// factor.
TEST(WaitingTime, IntegratorConvergesAtFourthOrder) {
  for (const auto& p : {make(5), make(3, 2, 0.4)}) {
    const pc::TauGrid grid{0.08, 501};
    const auto coarse = pc::wtd_numeric(p, grid, 0.04);
    const auto mid = pc::wtd_numeric(p, grid, 0.02);
    const auto fine = pc::wtd_numeric(p, grid, 0.01);
    const double first = (mid.w - coarse.w).abs().maxCoeff();
    const double second = (fine.w - mid.w).abs().maxCoeff();
    EXPECT_LT(second, first / 16.0) << p.omega << ' ' << first << ' ' << second;
  }
}

TEST(WaitingTime, InterpolationAndRange) {
  const pc::TauGrid grid{0.5, 3};
  pc::WaitingTimeTable table{grid, make(5), Eigen::ArrayXd(3), Eigen::ArrayXd(3)};
  table.w << 0.0, 1.0, 3.0;
  table.survival << 1.0, 0.5, 0.25;
  EXPECT_DOUBLE_EQ(table.density_at(0.25), 0.5);
  EXPECT_DOUBLE_EQ(table.density_at(1.0), 3.0);
  EXPECT_DOUBLE_EQ(table.survival_at(0.75), 0.375);
  EXPECT_THROW(table.density_at(1.0001), std::out_of_range);
  EXPECT_THROW(table.density_at(-1e-9), std::out_of_range);
  EXPECT_DOUBLE_EQ(pc::trapezoid(table.w, 0.5), 0.5 * (0.0 / 2 + 1.0 + 3.0 / 2));
}

TEST(WaitingTime, TailRateExamples) {
  EXPECT_NEAR(pc::wtd_tail_rate(make(5)), 25.0 / 51.0, 1e-15);
  EXPECT_NEAR(pc::wtd_tail_rate(make(5, 0, 0.1)), 2.5 / 51.0, 1e-15);
  EXPECT_EQ(pc::wtd_tail_rate(make(0)), 0.0);
}

TEST(WaitingTime, InterpolationResolutionRule) {
  EXPECT_NEAR(pc::interpolation_points_per_period(1e-6), 4 * std::numbers::pi / std::sqrt(8e-6), 1e-9);
  EXPECT_GT(pc::interpolation_points_per_period(1e-8), pc::interpolation_points_per_period(1e-6));
}

TEST(WaitingTime, RejectsDegenerateGrid) {
  EXPECT_THROW(pc::wtd_numeric(make(5), pc::TauGrid{0.0, 10}), std::invalid_argument);
  EXPECT_THROW(pc::wtd_numeric(make(5), pc::TauGrid{0.1, 1}), std::invalid_argument);
}

}  // namespace
