#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slam/analysis.hpp"

using namespace slam;

namespace {

PatternSet set_of(int k, std::initializer_list<const char*> pats) {
  PatternSet s(k);
  for (const char* p : pats) s.add(AttributePattern::from_string(p));
  return s;
}

}  // namespace

TEST_CASE("selection metric arithmetic") {
  const auto a0 = set_of(2, {"01", "10"});
  SUBCASE("half right, half spurious") {
    const auto rec = selection_metrics(a0, set_of(2, {"01", "11"}));
    CHECK(rec.tpr == doctest::Approx(0.5));
    CHECK(rec.one_minus_fdr == doctest::Approx(0.5));
    CHECK(rec.support_size == 2);
    CHECK(rec.coverage == rec.tpr);
  }
  SUBCASE("exact recovery") {
    const auto rec = selection_metrics(a0, a0);
    CHECK(rec.tpr == 1.0);
    CHECK(rec.one_minus_fdr == 1.0);
  }
  SUBCASE("overselection keeps tpr, halves precision") {
    const auto rec =
        selection_metrics(a0, set_of(2, {"00", "01", "10", "11"}));
    CHECK(rec.tpr == 1.0);
    CHECK(rec.one_minus_fdr == doctest::Approx(0.5));
    CHECK(rec.support_size == 4);
  }
  SUBCASE("empty conventions") {
    const PatternSet empty(2);
    const auto both = selection_metrics(empty, empty);
    CHECK(both.tpr == 1.0);
    CHECK(both.one_minus_fdr == 1.0);
    const auto none = selection_metrics(a0, empty);
    CHECK(none.tpr == 0.0);
    CHECK(none.one_minus_fdr == 0.0);
    const auto spurious = selection_metrics(empty, a0);
    CHECK(spurious.tpr == 1.0);
    CHECK(spurious.one_minus_fdr == 0.0);
  }
  SUBCASE("order of the estimate does not matter") {
    const auto r1 = selection_metrics(a0, set_of(2, {"11", "01"}));
    const auto r2 = selection_metrics(a0, set_of(2, {"01", "11"}));
    CHECK(r1.tpr == r2.tpr);
    CHECK(r1.one_minus_fdr == r2.one_minus_fdr);
  }
  CHECK_THROWS(selection_metrics(a0, PatternSet(3)));
}

TEST_CASE("rmse of proportion estimates") {
  const std::vector<double> truth{0.5, 0.3, 0.2};
  SUBCASE("perfect estimates give zero") {
    const auto r = rmse_proportions(truth, {truth, truth});
    for (double v : r) CHECK(v == 0.0);
  }
  SUBCASE("constant bias comes back as its magnitude") {
    const std::vector<double> biased{0.6, 0.4, 0.3};
    const auto r = rmse_proportions(truth, {biased, biased, biased});
    for (double v : r) CHECK(v == doctest::Approx(0.1));
  }
  SUBCASE("two-replicate hand computation") {
    // pattern 0 errors are +0.1 and -0.1: rmse sqrt(0.01) = 0.1
    // pattern 1 errors are +0.2 and 0: rmse sqrt(0.02)
    const auto r = rmse_proportions(
        truth, {{0.6, 0.5, 0.2}, {0.4, 0.3, 0.2}});
    CHECK(r[0] == doctest::Approx(0.1));
    CHECK(r[1] == doctest::Approx(std::sqrt(0.02)));
    CHECK(r[2] == 0.0);
  }
  CHECK_THROWS(rmse_proportions(truth, {}));
  CHECK_THROWS(rmse_proportions(truth, {{0.5, 0.5}}));
}

TEST_CASE("hierarchy extraction") {
  SUBCASE("linear prerequisite") {
    const auto g = extract_hierarchy(set_of(2, {"00", "10", "11"}));
    REQUIRE(g.groups.size() == 2);
    // attribute 0 appears wherever attribute 1 does, so 0 is prerequisite
    REQUIRE(g.edges.size() == 1);
    const auto [pre, dep] = g.edges[0];
    CHECK(g.groups[std::size_t(pre)] == std::vector<int>{0});
    CHECK(g.groups[std::size_t(dep)] == std::vector<int>{1});
  }
  SUBCASE("identical columns collapse into one group") {
    const auto g = extract_hierarchy(set_of(3, {"000", "110", "111"}));
    REQUIRE(g.groups.size() == 2);
    CHECK((g.groups[0] == std::vector<int>{0, 1} ||
           g.groups[1] == std::vector<int>{0, 1}));
    CHECK(g.edges.size() == 1);
  }
  SUBCASE("saturated set has no structure") {
    const auto g = extract_hierarchy(PatternSet::full(3));
    CHECK(g.groups.size() == 3);
    CHECK(g.edges.empty());
  }
  SUBCASE("all-or-nothing set is one group") {
    const auto g = extract_hierarchy(set_of(3, {"000", "111"}));
    CHECK(g.groups.size() == 1);
    CHECK(g.edges.empty());
  }
  SUBCASE("chains are transitively reduced") {
    const auto g =
        extract_hierarchy(set_of(3, {"000", "100", "110", "111"}));
    REQUIRE(g.groups.size() == 3);
    // only the two covering edges 0->1 and 1->2 survive the reduction,
    // but 0->2 must remain reachable
    CHECK(g.edges.size() == 2);
    std::vector<std::vector<int>> adj(g.groups.size());
    for (auto [u, v] : g.edges) adj[std::size_t(u)].push_back(v);
    int g0 = -1, g2 = -1;
    for (std::size_t i = 0; i < g.groups.size(); ++i) {
      if (g.groups[i] == std::vector<int>{0}) g0 = int(i);
      if (g.groups[i] == std::vector<int>{2}) g2 = int(i);
    }
    CHECK(detail::reachable(adj, g0, g2));
  }
  CHECK_THROWS(extract_hierarchy(PatternSet(2)));
}

TEST_CASE("replicate summary arithmetic") {
  AccuracyRecord r1{1.0, 0.5, 1.0, 4};
  AccuracyRecord r2{0.5, 1.0, 0.5, 2};
  const auto s = summarize({r1, r2});
  CHECK(s.mean_tpr == doctest::Approx(0.75));
  CHECK(s.mean_one_minus_fdr == doctest::Approx(0.75));
  CHECK(s.mean_support == doctest::Approx(3.0));
  // sample standard deviation with n-1
  CHECK(s.sd_tpr == doctest::Approx(std::sqrt(0.125)));
  CHECK(s.sd_one_minus_fdr == doctest::Approx(std::sqrt(0.125)));

  const auto one = summarize({r1});
  CHECK(one.sd_tpr == 0.0);
  CHECK_THROWS(summarize({}));
}
