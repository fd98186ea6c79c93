#include "gridtrade/market/agents.hpp"

#include "gridtrade/error.hpp"

#include <cmath>
#include <vector>

namespace gridtrade::market {
namespace {

void require(bool ok, const std::string& who, const char* what) {
  if (!ok)
    throw Error(Errc::InvalidParameter, who + ": " + what);
}

void check_weights(const std::string& who, double alpha, double beta) {
  require(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0, who, "weights must be in [0,1]");
  require(std::abs(alpha + beta - 1.0) <= 1e-9, who, "alpha + beta must equal 1");
}

void check_energy(double e) {
  if (e < 0.0 || !std::isfinite(e))
    throw Error(Errc::NegativeEnergy, "energy must be a finite value >= 0");
}

std::vector<TradeLeg> zip_legs(std::span<const double> energies, std::span<const double> prices,
                               std::span<const double> charges) {
  if (energies.size() != prices.size() || energies.size() != charges.size())
    throw Error(Errc::MismatchedPartnerLists, "energy, price and charge lists differ in length");
  std::vector<TradeLeg> legs(energies.size());
  for (std::size_t k = 0; k < legs.size(); ++k)
    legs[k] = {energies[k], prices[k], charges[k]};
  return legs;
}

} // namespace

void validate(const ProducerParams& p) {
  const auto& who = p.id.empty() ? std::string("producer") : p.id;
  require(p.a > 0.0, who, "a must be > 0");
  require(p.b >= 0.0 && p.c >= 0.0, who, "b and c must be >= 0");
  require(p.e_min >= 0.0 && p.e_min <= p.e_max, who, "need 0 <= e_min <= e_max");
  require(p.reputation >= 0.0 && p.reputation <= 1.0, who, "reputation must be in [0,1]");
  check_weights(who, p.alpha, p.beta);
}

void validate(const ConsumerParams& c) {
  const auto& who = c.id.empty() ? std::string("consumer") : c.id;
  require(c.a > 0.0 && c.b > 0.0, who, "a and b must be > 0");
  require(c.e_min >= 0.0 && c.e_min <= c.e_max, who, "need 0 <= e_min <= e_max");
  require(c.reputation >= 0.0 && c.reputation <= 1.0, who, "reputation must be in [0,1]");
  check_weights(who, c.alpha, c.beta);
}

void validate(const GridTariff& t) {
  require(t.feed_in >= 0.0 && t.feed_in <= t.retail, "tariff", "need 0 <= feed_in <= retail");
}

double producer_cost(const ProducerParams& p, double energy) {
  check_energy(energy);
  return p.a * energy * energy + p.b * energy + p.c;
}

double consumer_utility(const ConsumerParams& c, double energy) {
  check_energy(energy);
  const double vertex = c.b / (2.0 * c.a);
  if (energy >= vertex)
    return c.b * c.b / (4.0 * c.a);
  return -c.a * energy * energy + c.b * energy;
}

double marginal_utility(const ConsumerParams& c, double energy) {
  check_energy(energy);
  return std::max(0.0, c.b - 2.0 * c.a * energy);
}

double producer_welfare(const ProducerParams& p, std::span<const TradeLeg> trades, double grid_kwh,
                        const GridTariff& tariff) {
  check_energy(grid_kwh);
  double total = grid_kwh;
  double revenue = tariff.feed_in * grid_kwh;
  for (const auto& t : trades) {
    check_energy(t.energy);
    total += t.energy;
    revenue += t.energy * (t.price - t.charge);
  }
  return revenue - producer_cost(p, total);
}

double consumer_welfare(const ConsumerParams& c, std::span<const TradeLeg> trades, double grid_kwh,
                        const GridTariff& tariff) {
  check_energy(grid_kwh);
  double total = grid_kwh;
  double spend = tariff.retail * grid_kwh;
  for (const auto& t : trades) {
    check_energy(t.energy);
    total += t.energy;
    spend += t.energy * (t.price + t.charge);
  }
  return consumer_utility(c, total) - spend;
}

double producer_welfare(const ProducerParams& p, std::span<const double> energies,
                        std::span<const double> prices, std::span<const double> charges,
                        double grid_kwh, const GridTariff& tariff) {
  auto legs = zip_legs(energies, prices, charges);
  return producer_welfare(p, legs, grid_kwh, tariff);
}

double consumer_welfare(const ConsumerParams& c, std::span<const double> energies,
                        std::span<const double> prices, std::span<const double> charges,
                        double grid_kwh, const GridTariff& tariff) {
  auto legs = zip_legs(energies, prices, charges);
  return consumer_welfare(c, legs, grid_kwh, tariff);
}

} // namespace gridtrade::market
