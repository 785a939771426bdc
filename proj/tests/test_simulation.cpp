#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "slam/identifiability.hpp"
#include "slam/simulation.hpp"

using namespace slam;

TEST_CASE("q block structure at K = 3") {
  const auto q = build_q_blocks(3);
  REQUIRE(q.J() == 9);
  const char* expect[] = {"100", "010", "001",   // identity block
                          "110", "011", "001",   // superdiagonal block
                          "110", "111", "011"};  // tridiagonal block
  for (int j = 0; j < 9; ++j) CHECK(q.row(j).to_string() == expect[j]);
  CHECK_THROWS(build_q_blocks(2));
}

TEST_CASE("q blocks are generically identifiable") {
  for (int k : {3, 4, 5, 8}) {
    const auto q = build_q_blocks(k);
    CHECK(q.J() == 3 * k);
    CHECK(q.zero_rows().empty());
    CHECK(check_generic_Q(q));
  }
}

TEST_CASE("true pattern generation") {
  const auto a = gen_true_patterns(4, 6, 7);
  CHECK(a.size() == 6);
  const auto b = gen_true_patterns(4, 6, 7);
  for (std::size_t l = 0; l < a.size(); ++l) CHECK(a[l] == b[l]);
  const auto c = gen_true_patterns(4, 6, 8);
  bool same = true;
  for (std::size_t l = 0; l < a.size(); ++l) same = same && a[l] == c[l];
  CHECK_FALSE(same);

  // requesting the whole space yields exactly the full space
  const auto full = gen_true_patterns(3, 8, 1).sorted();
  const auto all = PatternSet::full(3);
  for (std::size_t l = 0; l < 8; ++l) CHECK(full[l].to_string() == all[l].to_string());
  CHECK_THROWS(gen_true_patterns(3, 9, 1));
}

TEST_CASE("design validation") {
  SimDesign d;
  CHECK_NOTHROW(d.validate());
  CHECK(d.j() == 3 * d.k);
  d.k = 2;
  CHECK_THROWS(d.validate());
  d = SimDesign{};
  d.noise = 0.5;
  CHECK_THROWS(d.validate());
  d = SimDesign{};
  d.model = SimModel::all_effect;
  d.base = 0.9;
  d.top = 0.1;
  CHECK_THROWS(d.validate());
  d = SimDesign{};
  d.a0_size = (1 << d.k) + 1;
  CHECK_THROWS(d.validate());
}

TEST_CASE("degenerate response generation") {
  PatternSet labels(2);
  labels.add(AttributePattern::from_string("01"));
  labels.add(AttributePattern::from_string("11"));
  Eigen::MatrixXd vals(3, 2);
  SUBCASE("all-one theta gives all-one responses") {
    vals.setOnes();
    const ThetaMatrix theta{vals, labels};
    Eigen::VectorXd pv(2);
    pv << 0.5, 0.5;
    const auto g = gen_responses(theta, ProportionVector(pv), 50, 4);
    CHECK(g.responses.minCoeff() == 1.0);
  }
  SUBCASE("point-mass proportions give constant assignments") {
    vals.setConstant(0.5);
    const ThetaMatrix theta{vals, labels};
    Eigen::VectorXd pv(2);
    pv << 0.0, 1.0;
    const auto g = gen_responses(theta, ProportionVector(pv), 50, 4);
    for (int a : g.assignments) CHECK(a == 1);
  }
}

TEST_CASE("empirical moments match the model") {
  SimDesign d;
  d.k = 4;
  d.n = 10000;
  d.a0_size = 6;
  d.noise = 0.2;
  d.seed = 13;
  const auto s = make_scenario(d);

  // pattern frequencies: multinomial with uniform cell probability 1/6
  std::map<int, int> counts;
  for (int a : s.data.assignments) ++counts[a];
  for (std::size_t l = 0; l < s.a0.size(); ++l) {
    const double phat = counts[static_cast<int>(l)] / double(d.n);
    const double se = std::sqrt((1.0 / 6) * (5.0 / 6) / d.n);
    CHECK(std::abs(phat - 1.0 / 6) < 4 * se);
  }

  // item means: sum_l p_l * theta_{j,l} within four binomial standard errors
  for (int j = 0; j < d.j(); ++j) {
    double mean = 0.0;
    for (Eigen::Index l = 0; l < s.theta.values.cols(); ++l)
      mean += s.p0.p[l] * s.theta.values(j, l);
    const double emp = s.data.responses.col(j).mean();
    const double se = std::sqrt(mean * (1.0 - mean) / d.n);
    CHECK(std::abs(emp - mean) < 4 * se);
  }
}

TEST_CASE("scenario assembly") {
  SimDesign d;
  d.k = 4;
  d.n = 30;
  d.a0_size = 5;
  d.seed = 2;
  const auto s = make_scenario(d);
  CHECK(s.q.J() == 12);
  CHECK(s.a0.size() == 5);
  CHECK(s.p0.p.size() == 5);
  CHECK(s.p0.p.minCoeff() == doctest::Approx(0.2));
  CHECK(s.theta.values.rows() == 12);
  CHECK(s.theta.values.cols() == 5);
  CHECK(s.data.responses.rows() == 30);
  // two-parameter scenario: each entry is either 1-noise or noise
  for (Eigen::Index j = 0; j < s.theta.values.rows(); ++j)
    for (Eigen::Index l = 0; l < s.theta.values.cols(); ++l) {
      const double t = s.theta.values(j, l);
      CHECK((std::abs(t - 0.9) < 1e-12 || std::abs(t - 0.1) < 1e-12));
    }

  d.model = SimModel::all_effect;
  const auto s2 = make_scenario(d);
  for (Eigen::Index j = 0; j < s2.theta.values.rows(); ++j) {
    CHECK(s2.theta.values.row(j).minCoeff() == doctest::Approx(d.base));
    CHECK(s2.theta.values.row(j).maxCoeff() <= d.top + 1e-12);
  }

  // the same design reproduces bit-identical data
  const auto s3 = make_scenario(d);
  CHECK((s2.data.responses - s3.data.responses).cwiseAbs().maxCoeff() == 0.0);
}
