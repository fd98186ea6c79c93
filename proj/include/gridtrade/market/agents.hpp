#pragma once

#include "gridtrade/grid/topology.hpp"

#include <span>
#include <string>

namespace gridtrade::market {

// Quadratic-cost producer. Energies in kWh, money in cents.
struct ProducerParams {
  std::string id;
  grid::BusId bus = 1;
  double a = 1.0; // cents/kWh^2, > 0
  double b = 0.0; // cents/kWh, >= 0
  double c = 0.0; // cents, >= 0
  double e_min = 0.0;
  double e_max = 0.0;
  double reputation = 1.0;
  double alpha = 0.5; // weight on partner reputation
  double beta = 0.5;  // weight on partner proximity
};

// Consumer with a saturating quadratic utility.
struct ConsumerParams {
  std::string id;
  grid::BusId bus = 1;
  double a = 1.0; // cents/kWh^2, > 0
  double b = 1.0; // cents/kWh, > 0
  double e_min = 0.0;
  double e_max = 0.0;
  double reputation = 1.0;
  double alpha = 0.5;
  double beta = 0.5;
};

// Grid prices bracket every bilateral price: feed_in <= price <= retail.
struct GridTariff {
  double feed_in = 5.0; // what the grid pays for exports
  double retail = 25.0; // what the grid charges for imports
};

// Throw Error{InvalidParameter} when an invariant does not hold.
void validate(const ProducerParams& p);
void validate(const ConsumerParams& c);
void validate(const GridTariff& t);

double producer_cost(const ProducerParams& p, double energy);
double consumer_utility(const ConsumerParams& c, double energy);
// Marginal utility, zero on the plateau.
double marginal_utility(const ConsumerParams& c, double energy);

// One bilateral position seen from either side.
struct TradeLeg {
  double energy = 0.0; // kWh
  double price = 0.0;  // cents/kWh
  double charge = 0.0; // grid service charge, cents/kWh
};

// Producer: feed_in * grid + sum e (price - charge) - C(grid + sum e).
double producer_welfare(const ProducerParams& p, std::span<const TradeLeg> trades, double grid_kwh,
                        const GridTariff& tariff);
// Consumer: U(grid + sum e) - retail * grid - sum e (price + charge).
double consumer_welfare(const ConsumerParams& c, std::span<const TradeLeg> trades, double grid_kwh,
                        const GridTariff& tariff);

// Column-wise forms; the three lists must have the same length.
double producer_welfare(const ProducerParams& p, std::span<const double> energies,
                        std::span<const double> prices, std::span<const double> charges,
                        double grid_kwh, const GridTariff& tariff);
double consumer_welfare(const ConsumerParams& c, std::span<const double> energies,
                        std::span<const double> prices, std::span<const double> charges,
                        double grid_kwh, const GridTariff& tariff);

} // namespace gridtrade::market
