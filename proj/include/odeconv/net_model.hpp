#pragma once

#include "odeconv/types.hpp"

namespace odeconv {

/// Build the routing matrix for a synthetic topology.
///
/// Conventions (documented in the emitted CSV header as well):
///  - chain3: nodes 1-2-3 in a line, 4 directed links (1->2, 2->1, 2->3,
///    3->2), 6 OD flows between *distinct* node pairs, routed along the
///    line.
///  - star(k): k edge nodes around one router `r`; each node i has an
///    out-link "i->r" and an in-link "r->i" (2k links). k^2 OD flows
///    *including* origin = destination; OD a->b uses the out-link of a
///    and the in-link of b.
///  - two_router_star(k1, k2): edge nodes 1..k1 on router r1 and
///    k1+1..k1+k2 on router r2, one bidirectional inter-router link
///    (2(k1+k2)+2 links, (k1+k2)^2 OD flows). Cross-router ODs traverse
///    the inter-router link.
/// Column order is lexicographic by (origin, destination); link order is
/// lexicographic by (endpoint node, direction out-then-in), with the
/// inter-router pair last.
RoutingMatrix build_topology(const Topology& topology);

/// Parse "chain3", "star3" / "star(3)", "two_router_star(4,8)" forms.
Topology parse_topology(const std::string& text);
std::string topology_name(const Topology& topology);

/// Link loads from OD flows: y_t = A x_t for every row t.
FlowSeries aggregate(const FlowSeries& x, const RoutingMatrix& A);

/// Dimension of the feasible polytope: n_od - rank(A). Rank uses a
/// singular-value cutoff of 1e-10 times the largest singular value.
int latent_dim(const RoutingMatrix& A);

/// Numeric rank of an arbitrary matrix under the same cutoff.
int numeric_rank(const Mat& M, double rel_tol = 1e-10);

}  // namespace odeconv
