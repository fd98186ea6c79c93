#include "gridtrade/market/priority.hpp"

#include "gridtrade/error.hpp"

#include <algorithm>
#include <cmath>

namespace gridtrade::market {

double priority_index(double alpha, double beta, double partner_reputation,
                      grid::ElectricalDistance distance, double normalizer_km) {
  if (alpha < 0.0 || beta < 0.0 || std::abs(alpha + beta - 1.0) > 1e-9)
    throw Error(Errc::InvalidParameter, "priority weights must be non-negative and sum to 1");
  if (partner_reputation < 0.0 || partner_reputation > 1.0)
    throw Error(Errc::InvalidParameter, "reputation must be in [0,1]");
  if (distance.km < 0.0 || normalizer_km < 0.0 || distance.km > normalizer_km + 1e-12)
    throw Error(Errc::InvalidParameter, "distance must lie in [0, D]");
  const double proximity = normalizer_km > 0.0 ? 1.0 - distance.km / normalizer_km : 1.0;
  return std::clamp(alpha * partner_reputation + beta * proximity, 0.0, 1.0);
}

int PriorityPartition::group_of(PartnerId partner) const {
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (std::find(groups[g].begin(), groups[g].end(), partner) != groups[g].end())
      return static_cast<int>(g) + 1;
  return 0;
}

PriorityPartition partition_partners(const std::map<PartnerId, double>& indices, int group_count) {
  if (group_count < 1)
    throw Error(Errc::InvalidParameter, "group count must be >= 1");
  if (indices.empty())
    throw Error(Errc::EmptyCandidateSet, "no candidate partners");
  PriorityPartition out;
  out.indices = indices;
  out.groups.resize(static_cast<std::size_t>(group_count));
  const double n_groups = group_count;
  for (const auto& [partner, upsilon] : indices) {
    if (!(upsilon >= 0.0 && upsilon <= 1.0))
      throw Error(Errc::InvalidParameter, "priority index outside [0,1]");
    // Largest n with (N-n)/N <= upsilon, i.e. n >= N - upsilon*N.
    int n = group_count - static_cast<int>(std::floor(upsilon * n_groups + 1e-12));
    n = std::clamp(n, 1, group_count);
    out.groups[static_cast<std::size_t>(n - 1)].push_back(partner);
  }
  for (auto& g : out.groups)
    std::stable_sort(g.begin(), g.end(), [&](PartnerId a, PartnerId b) {
      return indices.at(a) > indices.at(b);
    });
  return out;
}

PriorityPartition prioritize(double alpha, double beta, const std::vector<Candidate>& candidates,
                             int group_count) {
  if (candidates.empty())
    throw Error(Errc::EmptyCandidateSet, "no candidate partners");
  double normalizer = 0.0;
  for (const auto& c : candidates)
    normalizer = std::max(normalizer, c.distance.km);
  std::map<PartnerId, double> indices;
  for (const auto& c : candidates)
    indices[c.partner] = priority_index(alpha, beta, c.reputation, c.distance, normalizer);
  auto out = partition_partners(indices, group_count);
  out.normalizer_km = normalizer;
  return out;
}

} // namespace gridtrade::market
