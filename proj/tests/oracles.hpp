#pragma once

// Independent numerical oracles for the test suite. These deliberately avoid
// the library's own quadrature/OT code paths: adaptive Simpson instead of
// Gauss-Legendre panels, direct DFT instead of analytic coefficients, and
// exhaustive search instead of the network simplex.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

// ---- adaptive Simpson ----

namespace detail {

template <typename F>
double simpson(F& f, double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adapt(F& f, double a, double b, double fa, double fm, double fb,
             double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double integrate(F f, double a, double b, double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = detail::simpson(f, a, b, fa, fm, fb);
  return detail::adapt(f, a, m, fa, f(0.5 * (a + m)), fm, whole, tol, 48) +
         detail::adapt(f, m, b, fm, f(0.5 * (m + b)), fb, whole, tol, 48);
}

// ---- direct DFT of a real grid function on [-1/2, 1/2) ----

inline std::complex<double> dft_coefficient(const std::vector<double>& samples,
                                            int k) {
  const int n = static_cast<int>(samples.size());
  std::complex<double> acc(0.0, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = -0.5 + static_cast<double>(i) / n;
    acc += samples[i] * std::polar(1.0, -2.0 * M_PI * k * x);
  }
  return acc / static_cast<double>(n);
}

// ---- brute-force optimal transport ----

// Equal weights, n x n: the optimum over couplings is attained at a
// permutation; enumerate all of them.
inline double w1_permutations(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += cost[i][perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

// General weights: enumerate all spanning-tree bases of the bipartite
// transportation polytope (vertices of the LP), keep the feasible ones.
// Exponential; intended for supports up to ~4 + 4.
inline double w1_tree_vertices(const std::vector<double>& a,
                               const std::vector<double>& b,
                               const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int edges = n * m;
  const int need = n + m - 1;
  std::vector<int> pick(need);
  double best = std::numeric_limits<double>::infinity();

  std::function<void(int, int)> rec = [&](int start, int chosen) {
    if (chosen == need) {
      // solve the flows on this edge set by leaf elimination
      std::vector<double> residual(n + m);
      for (int i = 0; i < n; ++i) residual[i] = a[i];
      for (int j = 0; j < m; ++j) residual[n + j] = -b[j];
      std::vector<int> deg(n + m, 0);
      std::vector<std::vector<int>> inc(n + m);
      for (int e = 0; e < need; ++e) {
        const int i = pick[e] / m, j = pick[e] % m;
        inc[i].push_back(e);
        inc[n + j].push_back(e);
        ++deg[i];
        ++deg[n + j];
      }
      std::vector<double> flow(need, 0.0);
      std::vector<bool> done_edge(need, false), done_node(n + m, false);
      bool feasible = true;
      for (int round = 0; round < n + m - 1; ++round) {
        int leaf = -1;
        for (int u = 0; u < n + m; ++u)
          if (!done_node[u] && deg[u] == 1) {
            leaf = u;
            break;
          }
        if (leaf < 0) {
          feasible = false;  // cycle: not a tree
          break;
        }
        int e = -1;
        for (const int cand : inc[leaf])
          if (!done_edge[cand]) e = cand;
        const int i = pick[e] / m, j = pick[e] % m;
        const double f = (leaf < n) ? residual[leaf] : -residual[leaf];
        if (f < -1e-12) {
          feasible = false;
          break;
        }
        flow[e] = f;
        const int other = (leaf < n) ? n + j : i;
        residual[other] += residual[leaf];
        residual[leaf] = 0.0;
        done_edge[e] = true;
        done_node[leaf] = true;
        --deg[leaf];
        --deg[other];
      }
      if (feasible) {
        double c = 0.0;
        for (int e = 0; e < need; ++e)
          c += flow[e] * cost[pick[e] / m][pick[e] % m];
        best = std::min(best, c);
      }
      return;
    }
    if (edges - start < need - chosen) return;
    for (int e = start; e < edges; ++e) {
      pick[chosen] = e;
      rec(e + 1, chosen + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace oracle
