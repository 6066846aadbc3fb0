#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "odeconv/net_model.hpp"

using namespace odeconv;

TEST_CASE("chain3 dimensions, names, and latent dimension") {
  RoutingMatrix A = build_topology(Topology::Chain3());
  CHECK(A.n_links() == 4);
  CHECK(A.n_od() == 6);
  CHECK(A.rank == 4);
  CHECK(latent_dim(A) == 2);
  std::vector<std::string> od{"1->2", "1->3", "2->1", "2->3", "3->1", "3->2"};
  CHECK(A.od_names == od);
  std::vector<std::string> links{"1->2", "2->1", "2->3", "3->2"};
  CHECK(A.link_names == links);
}

TEST_CASE("chain3 aggregation matches the hand-computed route table") {
  RoutingMatrix A = build_topology(Topology::Chain3());
  FlowSeries x;
  x.values.resize(1, 6);
  x.values << 1, 2, 3, 4, 5, 6;
  x.names = A.od_names;
  FlowSeries y = aggregate(x, A);
  REQUIRE(y.dim() == 4);
  CHECK(y.values(0, 0) == doctest::Approx(3).epsilon(1e-15));   // 1->2
  CHECK(y.values(0, 1) == doctest::Approx(8).epsilon(1e-15));   // 2->1
  CHECK(y.values(0, 2) == doctest::Approx(6).epsilon(1e-15));   // 2->3
  CHECK(y.values(0, 3) == doctest::Approx(11).epsilon(1e-15));  // 3->2
  CHECK(y.names == A.link_names);
}

TEST_CASE("aggregate of zero flows is zero and aggregate is linear") {
  RoutingMatrix A = build_topology(Topology::Star(3));
  FlowSeries zero;
  zero.values = Mat::Zero(2, A.n_od());
  zero.names = A.od_names;
  CHECK(aggregate(zero, A).values.cwiseAbs().maxCoeff() == 0.0);

  FlowSeries x1, x2;
  x1.values = Mat::Random(3, A.n_od()).cwiseAbs();
  x2.values = Mat::Random(3, A.n_od()).cwiseAbs();
  x1.names = x2.names = A.od_names;
  FlowSeries combo;
  combo.values = 2.0 * x1.values + 3.0 * x2.values;
  combo.names = A.od_names;
  Mat lhs = aggregate(combo, A).values;
  Mat rhs = 2.0 * aggregate(x1, A).values + 3.0 * aggregate(x2, A).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("star topologies include self-flows and have rank 2k-1") {
  for (int k = 2; k <= 6; ++k) {
    RoutingMatrix A = build_topology(Topology::Star(k));
    CHECK(A.n_links() == 2 * k);
    CHECK(A.n_od() == k * k);
    CHECK(A.rank == 2 * k - 1);
    CHECK(latent_dim(A) == k * k - (2 * k - 1));
    // Every OD column touches exactly one out-link and one in-link.
    for (int j = 0; j < A.n_od(); ++j) {
      CHECK(A.entries.col(j).sum() == 2.0);
    }
  }
  CHECK(latent_dim(build_topology(Topology::Star(3))) == 4);
  CHECK(latent_dim(build_topology(Topology::Star(4))) == 9);
}

TEST_CASE("star(2) self-flow hits the out-link and in-link of its node") {
  RoutingMatrix A = build_topology(Topology::Star(2));
  FlowSeries x;
  x.values = Mat::Zero(1, 4);
  x.names = A.od_names;
  // OD "1->1" carries c = 7.
  int col = -1;
  for (int j = 0; j < A.n_od(); ++j) {
    if (A.od_names[j] == "1->1") col = j;
  }
  REQUIRE(col >= 0);
  x.values(0, col) = 7.0;
  FlowSeries y = aggregate(x, A);
  for (int i = 0; i < A.n_links(); ++i) {
    bool node1 = A.link_names[i] == "1->r" || A.link_names[i] == "r->1";
    CHECK(y.values(0, i) == (node1 ? 7.0 : 0.0));
  }
}

TEST_CASE("two_router_star(4,8) matches the published counts") {
  RoutingMatrix A = build_topology(Topology::TwoRouterStar(4, 8));
  CHECK(A.n_links() == 26);
  CHECK(A.n_od() == 144);
  CHECK(A.rank == 24);
  // Cross-router ODs traverse three links, same-router ODs two.
  int idx_cross = -1, idx_same = -1;
  for (int j = 0; j < A.n_od(); ++j) {
    if (A.od_names[j] == "1->5") idx_cross = j;
    if (A.od_names[j] == "1->2") idx_same = j;
  }
  REQUIRE(idx_cross >= 0);
  REQUIRE(idx_same >= 0);
  CHECK(A.entries.col(idx_cross).sum() == 3.0);
  CHECK(A.entries.col(idx_same).sum() == 2.0);
}

TEST_CASE("routing matrices are binary with no all-zero column") {
  for (const Topology& t :
       {Topology::Chain3(), Topology::Star(4), Topology::TwoRouterStar(2, 3)}) {
    RoutingMatrix A = build_topology(t);
    for (int i = 0; i < A.n_links(); ++i) {
      for (int j = 0; j < A.n_od(); ++j) {
        bool binary = A.entries(i, j) == 0.0 || A.entries(i, j) == 1.0;
        CHECK(binary);
      }
    }
    for (int j = 0; j < A.n_od(); ++j) {
      CHECK(A.entries.col(j).sum() > 0.0);
    }
    CHECK(A.rank < A.n_od());  // the estimation problem stays ill-posed
  }
}

TEST_CASE("parse_topology accepts the documented spellings") {
  CHECK(build_topology(parse_topology("chain3")).n_od() == 6);
  CHECK(build_topology(parse_topology("star(3)")).n_od() == 9);
  CHECK(build_topology(parse_topology("star4")).n_od() == 16);
  CHECK(build_topology(parse_topology("two_router_star(4,8)")).n_od() == 144);
  CHECK(build_topology(parse_topology("two-router-star(1,2)")).n_od() == 9);
  CHECK_THROWS_AS(parse_topology("ring5"), UsageError);
  CHECK_THROWS_AS(build_topology(parse_topology("star(1)")), UsageError);
}

TEST_CASE("aggregate rejects dimension mismatches") {
  RoutingMatrix A = build_topology(Topology::Chain3());
  FlowSeries x;
  x.values = Mat::Ones(2, 5);
  CHECK_THROWS_AS(aggregate(x, A), UsageError);
}

TEST_CASE("numeric rank uses the relative singular-value cutoff") {
  Mat M(2, 3);
  M << 1, 1, 0, 1, 1, 1e-12;  // second row nearly dependent
  CHECK(numeric_rank(M) == 1);
  M(1, 2) = 1.0;
  CHECK(numeric_rank(M) == 2);
}
