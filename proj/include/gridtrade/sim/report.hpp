#pragma once

#include "gridtrade/sim/simulation.hpp"

#include <json.hpp>

#include <string>

namespace gridtrade::sim {

nlohmann::json to_json(const IntervalResult& r);
nlohmann::json to_json(const MarketResult& r);
nlohmann::json to_json(const Comparison& c);
nlohmann::json to_json(const Ablation& a);
nlohmann::json sweep_json(const std::vector<MarketResult>& runs);

// One row per trade and one summary row per interval.
std::string trades_csv(const MarketResult& r);
std::string sweep_csv(const std::vector<MarketResult>& runs);
std::string comparison_csv(const Comparison& c);
std::string ablation_csv(const Ablation& a);

// Fixed-precision number formatting shared by every CSV.
std::string fmt(double v);

} // namespace gridtrade::sim
