#pragma once

#include "gridtrade/market/negotiation.hpp"

#include <vector>

namespace gridtrade::market {

struct OracleConfig {
  bool grid_backstop = true; // same meaning as SolverConfig::grid_backstop
  double tolerance = 1e-10;
  std::size_t max_iter = 200000;
  double min_trade_kwh = 1e-6;
};

struct OracleSolution {
  std::vector<double> energy; // producers x consumers, row-major
  double objective = 0.0;     // sum U(q_j) - sum C(s_i) - 2 sum gamma e
  std::size_t iterations = 0;
  bool converged = false;
};

// Objective of the central program for a given trade matrix.
double market_objective(const MarketInstance& m, const std::vector<double>& energy);

// Accelerated projected gradient on the concave program over all producer x
// consumer pairs. Throws Infeasible when the bounds cannot all hold.
OracleSolution solve_central(const MarketInstance& m, const OracleConfig& cfg = {});

// Same solution packaged as a Settlement (price left at the tariff midpoint,
// since the central program has no prices).
Settlement centralized_oracle(const MarketInstance& m, const OracleConfig& cfg = {});

} // namespace gridtrade::market
