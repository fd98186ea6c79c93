#include "gridtrade/error.hpp"
#include "gridtrade/market/agents.hpp"
#include "gridtrade/market/priority.hpp"

#include <doctest.h>

#include <vector>

using namespace gridtrade;
using namespace gridtrade::market;

namespace {

ProducerParams producer(double a, double b, double c) {
  ProducerParams p;
  p.a = a, p.b = b, p.c = c, p.e_max = 10;
  return p;
}

ConsumerParams consumer(double a, double b) {
  ConsumerParams c;
  c.a = a, c.b = b, c.e_max = 10;
  return c;
}

} // namespace

TEST_CASE("producer cost") {
  CHECK(producer_cost(producer(1, 5, 0), 2) == 14.0);
  CHECK(producer_cost(producer(1, 5, 3), 0) == 3.0);
  CHECK(producer_cost(producer(0.5, 5, 1), 4) == 29.0);
  CHECK_THROWS_AS(producer_cost(producer(1, 5, 0), -1), Error);
}

TEST_CASE("consumer utility saturates") {
  CHECK(consumer_utility(consumer(1, 4), 2) == 4.0);
  CHECK(consumer_utility(consumer(1, 4), 10) == 4.0);
  CHECK(consumer_utility(consumer(2, 12), 1) == 10.0);
  CHECK(marginal_utility(consumer(1, 4), 3) == 0.0);
}

TEST_CASE("welfare") {
  GridTariff t;
  CHECK(producer_welfare(producer(1, 5, 2), std::vector<TradeLeg>{}, 0.0, t) == -2.0);
  CHECK(consumer_welfare(consumer(1, 20), std::vector<TradeLeg>{}, 0.0, t) == 0.0);
  std::vector<TradeLeg> one{{2.0, 10.0, 1.0}};
  CHECK(producer_welfare(producer(1, 5, 0), one, 0.0, t) == 4.0);
  CHECK(consumer_welfare(consumer(1, 20), one, 0.0, t) == 14.0);

  // grid legs: feed-in 5 on export, retail 25 on import
  CHECK(producer_welfare(producer(1, 5, 0), std::vector<TradeLeg>{}, 1.0, t) == 5.0 - 6.0);
  CHECK(consumer_welfare(consumer(1, 20), std::vector<TradeLeg>{}, 1.0, t) == 19.0 - 25.0);

  std::vector<double> e{2.0}, p{10.0, 11.0}, g{1.0};
  try {
    producer_welfare(producer(1, 5, 0), e, p, g, 0.0, t);
    FAIL("expected MismatchedPartnerLists");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::MismatchedPartnerLists);
  }
}

TEST_CASE("parameter validation") {
  auto p = producer(1, 5, 0);
  p.alpha = 0.7;
  CHECK_THROWS_AS(validate(p), Error);
  p.alpha = 0.5;
  p.e_min = 11;
  CHECK_THROWS_AS(validate(p), Error);
  CHECK_THROWS_AS(validate(GridTariff{25, 5}), Error);
}

TEST_CASE("priority index") {
  CHECK(priority_index(0.5, 0.5, 1.0, {0.0}, 4.0) == 1.0);
  CHECK(priority_index(1.0, 0.0, 0.3, {2.0}, 4.0) == doctest::Approx(0.3));
  CHECK(priority_index(0.5, 0.5, 0.6, {4.0}, 4.0) == doctest::Approx(0.3));
  // all candidates co-located
  CHECK(priority_index(0.5, 0.5, 0.0, {0.0}, 0.0) == 0.5);
}

TEST_CASE("partition into groups") {
  auto one = partition_partners({{0, 0.9}, {1, 0.2}}, 1);
  CHECK(one.groups.size() == 1);
  CHECK(one.groups[0].size() == 2);

  auto two = partition_partners({{0, 0.9}, {1, 0.6}, {2, 0.4}}, 2);
  CHECK(two.groups[0] == std::vector<PartnerId>{0, 1});
  CHECK(two.groups[1] == std::vector<PartnerId>{2});
  CHECK(two.group_of(2) == 2);
  CHECK(two.group_of(7) == 0);

  auto tie = partition_partners({{3, 0.5}}, 2);
  CHECK(tie.group_of(3) == 1);

  try {
    partition_partners({}, 2);
    FAIL("expected EmptyCandidateSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyCandidateSet);
  }
}

TEST_CASE("ordering by priority is scale free") {
  std::vector<Candidate> cands{{0, 0.9, {3.0}}, {1, 0.4, {1.0}}, {2, 0.7, {6.0}}, {3, 0.1, {0.0}}};
  auto base = prioritize(0.4, 0.6, cands, 3);
  for (auto& c : cands)
    c.distance.km *= 7.5;
  auto scaled = prioritize(0.4, 0.6, cands, 3);
  CHECK(base.normalizer_km == 6.0);
  for (const auto& [k, v] : base.indices)
    CHECK(scaled.indices.at(k) == doctest::Approx(v));
  CHECK(base.groups == scaled.groups);
}
