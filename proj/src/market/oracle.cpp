#include "gridtrade/market/oracle.hpp"

#include "gridtrade/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridtrade::market {
namespace {

struct Box {
  double lo = 0.0;
  double hi = 0.0;
};

// Euclidean projection of v onto {x >= 0, lo <= sum x <= hi}.
void project_capped(std::vector<double>& v, Box box) {
  double pos = 0.0;
  for (double x : v)
    pos += std::max(0.0, x);
  double target;
  if (pos > box.hi)
    target = box.hi;
  else if (pos < box.lo)
    target = box.lo;
  else {
    for (double& x : v)
      x = std::max(0.0, x);
    return;
  }
  if (target <= 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  std::vector<double> sorted(v);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double t = (prefix - target) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0)
      tau = t;
  }
  for (double& x : v)
    x = std::max(0.0, x - tau);
}

class Projector {
public:
  Projector(std::size_t rows, std::size_t cols, std::vector<Box> row_box, std::vector<Box> col_box)
      : rows_(rows), cols_(cols), row_box_(std::move(row_box)), col_box_(std::move(col_box)) {}

  // Dykstra's alternating projections onto the row set and the column set.
  std::vector<double> operator()(const std::vector<double>& v) const {
    const auto n = v.size();
    std::vector<double> x(v), p(n, 0.0), q(n, 0.0), y(n), buf;
    for (int it = 0; it < 20000; ++it) {
      for (std::size_t k = 0; k < n; ++k)
        y[k] = x[k] + p[k];
      for (std::size_t i = 0; i < rows_; ++i) {
        buf.assign(y.begin() + i * cols_, y.begin() + (i + 1) * cols_);
        project_capped(buf, row_box_[i]);
        std::copy(buf.begin(), buf.end(), y.begin() + i * cols_);
      }
      for (std::size_t k = 0; k < n; ++k)
        p[k] = x[k] + p[k] - y[k];
      std::vector<double> z(n);
      for (std::size_t k = 0; k < n; ++k)
        z[k] = y[k] + q[k];
      for (std::size_t j = 0; j < cols_; ++j) {
        buf.resize(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
          buf[i] = z[i * cols_ + j];
        project_capped(buf, col_box_[j]);
        for (std::size_t i = 0; i < rows_; ++i)
          z[i * cols_ + j] = buf[i];
      }
      for (std::size_t k = 0; k < n; ++k)
        q[k] = y[k] + q[k] - z[k];
      double change = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        change = std::max(change, std::abs(z[k] - x[k]));
      x.swap(z);
      if (change < 1e-13)
        break;
    }
    return x;
  }

private:
  std::size_t rows_, cols_;
  std::vector<Box> row_box_, col_box_;
};

} // namespace

double market_objective(const MarketInstance& m, const std::vector<double>& e) {
  const auto np = m.producers.size(), nc = m.consumers.size();
  double value = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      s += e[i * nc + j];
      value -= 2.0 * m.charge(i, j) * e[i * nc + j];
    }
    value -= producer_cost(m.producers[i], s);
  }
  for (std::size_t j = 0; j < nc; ++j) {
    double q = 0.0;
    for (std::size_t i = 0; i < np; ++i)
      q += e[i * nc + j];
    value += consumer_utility(m.consumers[j], q);
  }
  return value;
}

OracleSolution solve_central(const MarketInstance& m, const OracleConfig& cfg) {
  validate(m);
  const auto np = m.producers.size(), nc = m.consumers.size();
  std::vector<Box> rows(np), cols(nc);
  for (std::size_t i = 0; i < np; ++i)
    rows[i] = {cfg.grid_backstop ? 0.0 : m.producers[i].e_min, m.producers[i].e_max};
  for (std::size_t j = 0; j < nc; ++j)
    cols[j] = {cfg.grid_backstop ? 0.0 : m.consumers[j].e_min, m.consumers[j].e_max};

  double sum_lo_p = 0, sum_hi_p = 0, sum_lo_c = 0, sum_hi_c = 0;
  for (auto b : rows)
    sum_lo_p += b.lo, sum_hi_p += b.hi;
  for (auto b : cols)
    sum_lo_c += b.lo, sum_hi_c += b.hi;
  if ((nc == 0 && sum_lo_p > 0) || (np == 0 && sum_lo_c > 0) || sum_lo_p > sum_hi_c + 1e-12 ||
      sum_lo_c > sum_hi_p + 1e-12)
    throw Error(Errc::Infeasible, "flexibility bounds cannot be met by any trade matrix");

  OracleSolution out;
  out.energy.assign(np * nc, 0.0);
  if (np == 0 || nc == 0) {
    out.objective = market_objective(m, out.energy);
    out.converged = true;
    return out;
  }

  double max_ap = 0.0, max_ac = 0.0;
  for (const auto& p : m.producers)
    max_ap = std::max(max_ap, p.a);
  for (const auto& c : m.consumers)
    max_ac = std::max(max_ac, c.a);
  const double step = 1.0 / (2.0 * (max_ap * static_cast<double>(nc) + max_ac * static_cast<double>(np)));

  Projector project(np, nc, rows, cols);
  auto gradient = [&](const std::vector<double>& e) {
    std::vector<double> g(e.size());
    std::vector<double> s(np, 0.0), q(nc, 0.0);
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t j = 0; j < nc; ++j) {
        s[i] += e[i * nc + j];
        q[j] += e[i * nc + j];
      }
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t j = 0; j < nc; ++j) {
        const double mc = 2.0 * m.producers[i].a * s[i] + m.producers[i].b;
        const double mu = std::max(0.0, m.consumers[j].b - 2.0 * m.consumers[j].a * q[j]);
        g[i * nc + j] = mu - mc - 2.0 * m.charge(i, j);
      }
    return g;
  };

  std::vector<double> x = project(out.energy), y = x, prev = x;
  double t = 1.0;
  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    auto g = gradient(y);
    std::vector<double> v(y.size());
    for (std::size_t n = 0; n < v.size(); ++n)
      v[n] = y[n] + step * g[n];
    prev = x;
    x = project(v);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double change = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      y[n] = x[n] + (t - 1.0) / t_next * (x[n] - prev[n]);
      change = std::max(change, std::abs(x[n] - prev[n]));
    }
    t = t_next;
    out.iterations = k + 1;
    if (change < cfg.tolerance && k > 10) {
      out.converged = true;
      break;
    }
  }
  out.energy = x;
  out.objective = market_objective(m, x);
  return out;
}

Settlement centralized_oracle(const MarketInstance& m, const OracleConfig& cfg) {
  auto sol = solve_central(m, cfg);
  const auto nc = m.consumers.size();
  const double mid = 0.5 * (m.tariff.feed_in + m.tariff.retail);
  Settlement s;
  for (std::size_t i = 0; i < m.producers.size(); ++i)
    for (std::size_t j = 0; j < nc; ++j) {
      const double e = sol.energy[i * nc + j];
      if (e >= cfg.min_trade_kwh)
        s.trades.push_back({i, j, e, e, e, mid, m.charge(i, j), 1});
    }
  s.iterations = sol.iterations;
  s.converged = sol.converged;
  settle_residuals(m, s);
  return s;
}

} // namespace gridtrade::market
