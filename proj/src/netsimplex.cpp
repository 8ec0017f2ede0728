#include "mfl/netsimplex.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "mfl/rng.hpp"

namespace mfl {

namespace {

struct Solver {
  int n, m, nodes;
  const Eigen::MatrixXd& c;
  Eigen::VectorXd a, b;  // perturbed marginals

  // basic cells (tree edges); exactly n + m - 1 after initialization
  std::vector<int> cell_i, cell_j;
  std::vector<double> flow;
  std::vector<std::vector<int>> adj;  // node -> incident basic cells

  std::vector<int> parent, parent_cell, depth, order;
  Eigen::VectorXd pot;  // node potentials: pot(i) + ... c_ij = pot_i + pot_j'

  Solver(const Eigen::VectorXd& a_, const Eigen::VectorXd& b_,
         const Eigen::MatrixXd& c_)
      : n(static_cast<int>(a_.size())), m(static_cast<int>(b_.size())),
        nodes(n + m), c(c_), a(a_), b(b_), adj(nodes), parent(nodes),
        parent_cell(nodes), depth(nodes), pot(nodes) {}

  int sink_node(int j) const { return n + j; }

  void add_cell(int i, int j, double f) {
    adj[i].push_back(static_cast<int>(cell_i.size()));
    adj[sink_node(j)].push_back(static_cast<int>(cell_i.size()));
    cell_i.push_back(i);
    cell_j.push_back(j);
    flow.push_back(f);
  }

  // Northwest-corner initial basis: n + m - 1 cells forming a spanning tree.
  void initial_basis() {
    Eigen::VectorXd ra = a, rb = b;
    int i = 0, j = 0;
    while (true) {
      const double f = std::min(ra[i], rb[j]);
      add_cell(i, j, f);
      ra[i] -= f;
      rb[j] -= f;
      if (i == n - 1 && j == m - 1) break;
      if (ra[i] <= rb[j] && i < n - 1)
        ++i;
      else if (j < m - 1)
        ++j;
      else
        ++i;
    }
    if (static_cast<int>(cell_i.size()) != nodes - 1)
      throw NetSimplexError("initial basis is not a spanning tree");
  }

  // Rebuild parent/depth/potentials from scratch (O(n + m)); cheap enough at
  // the supported sizes to run after every pivot.
  void rebuild_tree() {
    order.clear();
    order.reserve(nodes);
    std::fill(parent.begin(), parent.end(), -2);
    parent[0] = -1;
    parent_cell[0] = -1;
    depth[0] = 0;
    pot[0] = 0.0;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      order.push_back(u);
      for (const int e : adj[u]) {
        const int other = (u < n) ? sink_node(cell_j[e]) : cell_i[e];
        if (parent[other] != -2) continue;
        parent[other] = u;
        parent_cell[other] = e;
        depth[other] = depth[u] + 1;
        // c_ij = pot(source) + pot(sink)
        pot[other] = c(cell_i[e], cell_j[e]) - pot[u];
        q.push(other);
      }
    }
    if (static_cast<int>(order.size()) != nodes)
      throw NetSimplexError("basis lost connectivity");
  }

  double reduced(int i, int j) const { return c(i, j) - pot[i] - pot[sink_node(j)]; }

  // One pivot with entering cell (ei, ej). Returns the flow change.
  void pivot(int ei, int ej) {
    // Collect the tree path from the sink endpoint back to the source
    // endpoint; a cell is traversed source->sink (+) or sink->source (-).
    struct Arc {
      int cell;
      int sign;
    };
    static thread_local std::vector<Arc> path;
    path.clear();

    int x = sink_node(ej), y = ei;
    // The cycle runs ei -> sink(ej) over the entering cell, then back to ei
    // through the tree. On x's side the path is traversed node -> parent, on
    // y's side parent -> node; a cell gains flow iff it is traversed in its
    // own source -> sink orientation.
    auto step_up = [&](int& node, bool from_side_b) {
      const int e = parent_cell[node];
      const int par = parent[node];
      const bool node_is_source = node < n;
      const int sign = from_side_b ? (node_is_source ? +1 : -1)
                                   : (node_is_source ? -1 : +1);
      path.push_back({e, sign});
      node = par;
    };
    while (depth[x] > depth[y]) step_up(x, true);
    while (depth[y] > depth[x]) step_up(y, false);
    while (x != y) {
      step_up(x, true);
      step_up(y, false);
    }

    // theta = min flow over the decreasing cells
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (const Arc& arc : path)
      if (arc.sign < 0 && flow[arc.cell] < theta) {
        theta = flow[arc.cell];
        leaving = arc.cell;
      }
    if (leaving < 0) throw NetSimplexError("unbounded pivot cycle");

    for (const Arc& arc : path) flow[arc.cell] += arc.sign * theta;

    // replace `leaving` by the entering cell in place
    auto drop = [&](int node, int e) {
      auto& lst = adj[node];
      lst.erase(std::find(lst.begin(), lst.end(), e));
    };
    drop(cell_i[leaving], leaving);
    drop(sink_node(cell_j[leaving]), leaving);
    cell_i[leaving] = ei;
    cell_j[leaving] = ej;
    flow[leaving] = theta;
    adj[ei].push_back(leaving);
    adj[sink_node(ej)].push_back(leaving);
    rebuild_tree();
  }

  long cursor = 0;

  // Dantzig rule over circular blocks of candidate cells.
  bool find_entering(int& ei, int& ej, double tol) {
    const long total = static_cast<long>(n) * m;
    const long block = std::max<long>(256, total / 64);
    long scanned = 0;
    while (scanned < total) {
      double best = -tol;
      long best_idx = -1;
      const long stop = std::min(block, total - scanned);
      for (long s = 0; s < stop; ++s) {
        const long idx = (cursor + s) % total;
        const int i = static_cast<int>(idx / m);
        const int j = static_cast<int>(idx % m);
        const double r = reduced(i, j);
        if (r < best) {
          best = r;
          best_idx = idx;
        }
      }
      cursor = (cursor + stop) % total;
      scanned += stop;
      if (best_idx >= 0) {
        ei = static_cast<int>(best_idx / m);
        ej = static_cast<int>(best_idx % m);
        return true;
      }
    }
    return false;
  }

  void solve(double tol, long max_pivots, int& pivots) {
    initial_basis();
    rebuild_tree();
    int ei, ej;
    pivots = 0;
    while (find_entering(ei, ej, tol)) {
      pivot(ei, ej);
      if (++pivots > max_pivots)
        throw NetSimplexError("pivot budget exhausted");
    }
  }

  // Re-solve the tree flows for exact marginals by leaf elimination.
  void exact_flows(const Eigen::VectorXd& ta, const Eigen::VectorXd& tb) {
    Eigen::VectorXd residual(nodes);
    residual.head(n) = ta;
    residual.tail(m) = -tb;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int node = *it;
      if (node == 0) continue;
      const int e = parent_cell[node];
      // flow is oriented source -> sink; node sheds its residual upward
      const double r = residual[node];
      flow[e] = (node < n) ? r : -r;
      residual[parent[node]] += r;
    }
    if (std::abs(residual[0]) > 1e-6)
      throw NetSimplexError("tree flow reconstruction failed");
    for (double& f : flow) f = std::max(f, 0.0);
  }
};

}  // namespace

NetSimplexResult transport_network_simplex(const Eigen::VectorXd& supply,
                                           const Eigen::VectorXd& demand,
                                           const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(supply.size());
  const int m = static_cast<int>(demand.size());
  if (n < 1 || m < 1) throw NetSimplexError("empty marginals");
  if (cost.rows() != n || cost.cols() != m)
    throw NetSimplexError("cost matrix shape mismatch");
  if ((supply.array() < 0).any() || (demand.array() < 0).any())
    throw NetSimplexError("negative weights");
  const double total = supply.sum();
  if (std::abs(total - demand.sum()) > 1e-9 * std::max(1.0, total))
    throw NetSimplexError("supply and demand totals differ");

  const double cost_scale = std::max(1e-300, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-11 * cost_scale;

  for (int attempt = 0; attempt < 4; ++attempt) {
    // Deterministic random perturbation removes degenerate ties; the final
    // re-solve restores the exact marginals on the optimal tree.
    Eigen::VectorXd a = supply, b = demand;
    const double delta = 1e-9 * total / (n + m) * (attempt + 1);
    CounterRng rng(0x5eedf00dULL + attempt, 17);
    double extra = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = delta * rng.uniform(0.5, 1.5);
      a[i] += d;
      extra += d;
    }
    b[m - 1] += extra;

    Solver solver(a, b, cost);
    int pivots = 0;
    try {
      solver.solve(tol, 400L * (n + m) + 10000L, pivots);
    } catch (const NetSimplexError&) {
      if (attempt == 3) throw;
      continue;
    }
    solver.exact_flows(supply, demand);

    NetSimplexResult res;
    res.pivots = pivots;
    res.u = solver.pot.head(n);
    res.v = solver.pot.tail(m);
    double primal = 0.0;
    for (size_t e = 0; e < solver.flow.size(); ++e) {
      const double f = solver.flow[e];
      primal += f * cost(solver.cell_i[e], solver.cell_j[e]);
      if (f > 0.0) res.plan.emplace_back(solver.cell_i[e], solver.cell_j[e], f);
    }
    res.cost = primal;
    const double dual = supply.dot(res.u) + demand.dot(res.v);
    res.dual_gap = primal - dual;
    if (std::abs(res.dual_gap) <= 1e-9 * std::max(1.0, cost_scale)) return res;
    // certification failed: retry with a different perturbation
  }
  throw NetSimplexError("could not certify optimality");
}

}  // namespace mfl
