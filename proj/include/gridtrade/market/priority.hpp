#pragma once

#include "gridtrade/grid/topology.hpp"

#include <cstddef>
#include <map>
#include <vector>

namespace gridtrade::market {

using PartnerId = std::size_t;

// Upsilon = alpha * eta_partner + beta * (1 - d / D). When D is zero every
// candidate is co-located and the proximity term is 1.
double priority_index(double alpha, double beta, double partner_reputation,
                      grid::ElectricalDistance distance, double normalizer_km);

struct PriorityPartition {
  std::map<PartnerId, double> indices;
  std::vector<std::vector<PartnerId>> groups; // groups[0] is the highest priority
  double normalizer_km = 0.0;

  // 1-based group number, 0 when the partner is not a candidate.
  int group_of(PartnerId partner) const;
};

// Group n (1-based) holds Upsilon in [(N-n)/N, (N-n+1)/N]; a boundary value
// goes to the lower n. Throws EmptyCandidateSet, InvalidParameter.
PriorityPartition partition_partners(const std::map<PartnerId, double>& indices, int group_count);

struct Candidate {
  PartnerId partner = 0;
  double reputation = 1.0;
  grid::ElectricalDistance distance;
};

// Indices for every candidate with D = max distance, then the partition.
PriorityPartition prioritize(double alpha, double beta, const std::vector<Candidate>& candidates,
                             int group_count);

} // namespace gridtrade::market
