// Dense linear assignment: column reduction, reduction transfer, two rounds of
// augmenting row reduction, then Dijkstra-style augmentation for the rows left
// free (Jonker & Volgenant, 1987).

#include <algorithm>
#include <limits>
#include <vector>

#include "otrates/error.hpp"
#include "otrates/solver.hpp"

namespace otrates {

namespace {

struct DenseRows {
  const kernels::CostMatrix& m;
  const double* row(std::size_t i) { return m.row(i); }
  double operator()(std::size_t i, std::size_t j) { return m(i, j); }
};

// Recomputes one row at a time. Callers never hold two rows at once.
struct LazyRows {
  const PointCloud& x;
  const PointCloud& y;
  const CostSpec& cost;
  std::vector<double> buf;
  const double* row(std::size_t i) {
    kernels::cost_row(x, i, y, cost, buf);
    return buf.data();
  }
  double operator()(std::size_t i, std::size_t j) { return cost.between(x[i].data(), y[j].data()); }
};

template <class Rows>
AssignmentSolution lap(Rows& c, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();

  AssignmentSolution sol;
  std::vector<int>& rowsol = sol.row_to_col;
  rowsol.assign(n, -1);
  std::vector<int> colsol(n, -1);
  std::vector<double>& v = sol.v;
  v.assign(n, 0.0);

  if (n == 1) {
    rowsol[0] = 0;
    sol.v[0] = 0.0;
    sol.u = {c(0, 0)};
    return sol;
  }

  // Column reduction, row-major so each row is read once.
  std::vector<double> colmin(n, kInf);
  std::vector<int> argmin(n, 0);
  for (int i = 0; i < n; ++i) {
    const double* row = c.row(i);
    for (int j = 0; j < n; ++j) {
      if (row[j] < colmin[j]) {
        colmin[j] = row[j];
        argmin[j] = i;
      }
    }
  }
  std::vector<int> matches(n, 0);
  for (int j = n - 1; j >= 0; --j) {
    const int imin = argmin[j];
    v[j] = colmin[j];
    if (++matches[imin] == 1) {
      rowsol[imin] = j;
      colsol[j] = imin;
    } else if (v[j] < v[rowsol[imin]]) {
      const int j1 = rowsol[imin];
      rowsol[imin] = j;
      colsol[j] = imin;
      colsol[j1] = -1;
    } else {
      colsol[j] = -1;
    }
  }

  // Reduction transfer.
  std::vector<int> free_rows;
  free_rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (matches[i] == 0) {
      free_rows.push_back(i);
    } else if (matches[i] == 1) {
      const int j1 = rowsol[i];
      const double* row = c.row(i);
      double m = kInf;
      for (int j = 0; j < n; ++j)
        if (j != j1) m = std::min(m, row[j] - v[j]);
      v[j1] -= m;
    }
  }

  // Augmenting row reduction. Re-queueing at the front is capped: with
  // floating costs a row can otherwise bounce on vanishing price decrements.
  long long front_pushes = 0;
  const long long front_cap = 8LL * n;
  for (int round = 0; round < 2; ++round) {
    std::size_t k = 0;
    const std::size_t prev_free = free_rows.size();
    std::size_t num_free = 0;
    while (k < prev_free) {
      const int i = free_rows[k++];
      const double* row = c.row(i);
      double umin = row[0] - v[0], usubmin = kInf;
      int j1 = 0, j2 = 0;
      for (int j = 1; j < n; ++j) {
        const double h = row[j] - v[j];
        if (h < usubmin) {
          if (h >= umin) {
            usubmin = h;
            j2 = j;
          } else {
            usubmin = umin;
            umin = h;
            j2 = j1;
            j1 = j;
          }
        }
      }
      int i0 = colsol[j1];
      const bool strict = umin < usubmin;
      if (strict) {
        v[j1] -= usubmin - umin;
      } else if (i0 > -1) {
        j1 = j2;
        i0 = colsol[j2];
      }
      rowsol[i] = j1;
      colsol[j1] = i;
      if (i0 > -1) {
        if (strict && front_pushes < front_cap) {
          ++front_pushes;
          free_rows[--k] = i0;
        } else {
          free_rows[num_free++] = i0;
        }
      }
    }
    free_rows.resize(num_free);
  }

  // Augmentation.
  std::vector<double> d(n);
  std::vector<int> pred(n), collist(n);
  for (int freerow : free_rows) {
    const double* frow = c.row(freerow);
    for (int j = 0; j < n; ++j) {
      d[j] = frow[j] - v[j];
      pred[j] = freerow;
      collist[j] = j;
    }
    int low = 0, up = 0, last = 0, endofpath = -1;
    double min = 0.0;
    bool found = false;
    do {
      if (up == low) {
        last = low - 1;
        min = d[collist[up++]];
        for (int k = up; k < n; ++k) {
          const int j = collist[k];
          const double h = d[j];
          if (h <= min) {
            if (h < min) {
              up = low;
              min = h;
            }
            collist[k] = collist[up];
            collist[up++] = j;
          }
        }
        for (int k = low; k < up; ++k) {
          if (colsol[collist[k]] < 0) {
            endofpath = collist[k];
            found = true;
            break;
          }
        }
      }
      if (!found) {
        const int j1 = collist[low++];
        const int i = colsol[j1];
        const double* row = c.row(i);
        const double h = row[j1] - v[j1] - min;
        for (int k = up; k < n; ++k) {
          const int j = collist[k];
          const double v2 = row[j] - v[j] - h;
          if (v2 < d[j]) {
            pred[j] = i;
            if (v2 == min) {
              if (colsol[j] < 0) {
                endofpath = j;
                found = true;
                break;
              }
              collist[k] = collist[up];
              collist[up++] = j;
            }
            d[j] = v2;
          }
        }
      }
    } while (!found);

    for (int k = 0; k <= last; ++k) {
      const int j1 = collist[k];
      v[j1] += d[j1] - min;
    }
    int i;
    do {
      i = pred[endofpath];
      colsol[endofpath] = i;
      const int j1 = endofpath;
      endofpath = rowsol[i];
      rowsol[i] = j1;
    } while (i != freerow);
  }

  sol.u.resize(n);
  for (int i = 0; i < n; ++i) sol.u[i] = c(i, rowsol[i]) - v[rowsol[i]];
  return sol;
}

}  // namespace

AssignmentSolution solve_lap(const kernels::CostMatrix& c) {
  if (c.rows == 0 || c.cols != c.rows) throw UsageError("assignment needs a nonempty square cost matrix");
  DenseRows rows{c};
  return lap(rows, static_cast<int>(c.rows));
}

AssignmentSolution solve_lap_lazy(const PointCloud& x, const PointCloud& y, const CostSpec& cost) {
  if (x.empty() || x.size() != y.size()) throw UsageError("assignment needs two nonempty clouds of equal size");
  LazyRows rows{x, y, cost, std::vector<double>(y.size())};
  return lap(rows, static_cast<int>(x.size()));
}

}  // namespace otrates
