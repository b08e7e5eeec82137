// Primal network simplex for the bipartite transportation problem, following
// the spanning-tree bookkeeping of LEMON's NetworkSimplex (thread/rev_thread
// preorder, succ_num, last_succ). Arc e = i*n + j joins source i to sink m+j;
// one artificial arc per node connects it to an extra root. Capacities are
// infinite, so no arc ever sits at an upper bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "otrates/error.hpp"
#include "otrates/solver.hpp"

namespace otrates {

namespace {

constexpr int kUp = 1;
constexpr int kDown = -1;
constexpr signed char kTree = 0;
constexpr signed char kLower = 1;

class Simplex {
 public:
  Simplex(const kernels::CostMatrix& c, const std::vector<double>& supply, const std::vector<double>& demand)
      : c_(c), m_(static_cast<int>(c.rows)), n_(static_cast<int>(c.cols)) {
    nodes_ = m_ + n_;
    root_ = nodes_;
    real_arcs_ = static_cast<std::int64_t>(m_) * n_;
    double max_cost = 0.0;
    for (double v : c.data) max_cost = std::max(max_cost, std::abs(v));
    art_cost_ = (max_cost + 1.0) * nodes_;
    tol_ = 64.0 * std::numeric_limits<double>::epsilon() * nodes_ * (1.0 + max_cost);
    block_ = std::max<std::int64_t>(static_cast<std::int64_t>(std::sqrt(static_cast<double>(real_arcs_))), 10);

    const std::size_t arcs = static_cast<std::size_t>(real_arcs_) + nodes_;
    flow_.assign(arcs, 0.0);
    state_.assign(arcs, kLower);
    art_src_.resize(nodes_);
    art_tgt_.resize(nodes_);
    art_cost_arc_.resize(nodes_);

    const int total = nodes_ + 1;
    parent_.resize(total);
    pred_.resize(total);
    thread_.resize(total);
    rev_thread_.resize(total);
    succ_num_.resize(total);
    last_succ_.resize(total);
    pred_dir_.resize(total);
    pi_.resize(total);

    for (int u = 0; u < nodes_; ++u) {
      const double s = u < m_ ? supply[u] : -demand[u - m_];
      const std::int64_t e = real_arcs_ + u;
      parent_[u] = root_;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kTree;
      if (s >= 0) {
        pred_dir_[u] = kUp;
        pi_[u] = 0.0;
        art_src_[u] = u;
        art_tgt_[u] = root_;
        flow_[e] = s;
        art_cost_arc_[u] = 0.0;
      } else {
        pred_dir_[u] = kDown;
        pi_[u] = art_cost_;
        art_src_[u] = root_;
        art_tgt_[u] = u;
        flow_[e] = -s;
        art_cost_arc_[u] = art_cost_;
      }
    }
    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = total;
    last_succ_[root_] = root_ - 1;
    pred_dir_[root_] = 0;
    pi_[root_] = 0.0;
  }

  std::int64_t run(std::int64_t max_pivots) {
    std::int64_t pivots = 0;
    for (int round = 0; round < 8; ++round) {
      while (find_entering()) {
        if (++pivots > max_pivots)
          throw NumericalError("network simplex exceeded " + std::to_string(max_pivots) + " pivots");
        find_join();
        if (!find_leaving()) throw NumericalError("network simplex: unbounded cycle");
        change_flow();
        update_tree();
        update_potential();
        if (delta_ > 0) {
          stalled_ = 0;
          bland_ = false;
        } else if (++stalled_ > 10LL * (m_ + n_)) {
          bland_ = true;
        }
      }
      // Drift in incrementally updated potentials can hide or fake entering
      // arcs; rebuild them from the tree and look again.
      recompute_potentials();
      if (!find_entering()) break;
    }
    return pivots;
  }

  void extract(FlowSolution& out) const {
    for (std::int64_t e = 0; e < real_arcs_; ++e) {
      if (flow_[e] > 0.0)
        out.entries.push_back({static_cast<std::size_t>(e / n_), static_cast<std::size_t>(e % n_), flow_[e]});
    }
    out.u.resize(m_);
    out.v.resize(n_);
    for (int i = 0; i < m_; ++i) out.u[i] = -pi_[i];
    for (int j = 0; j < n_; ++j) out.v[j] = pi_[m_ + j];
  }

 private:
  int src(std::int64_t e) const { return e < real_arcs_ ? static_cast<int>(e / n_) : art_src_[e - real_arcs_]; }
  int tgt(std::int64_t e) const {
    return e < real_arcs_ ? m_ + static_cast<int>(e % n_) : art_tgt_[e - real_arcs_];
  }
  double cost(std::int64_t e) const { return e < real_arcs_ ? c_.data[e] : art_cost_arc_[e - real_arcs_]; }
  double reduced(std::int64_t e) const {
    return c_.data[e] + pi_[e / n_] - pi_[m_ + e % n_];
  }

  // Block search over real arcs; artificial arcs never re-enter.
  bool find_entering() {
    if (bland_) {
      for (std::int64_t e = 0; e < real_arcs_; ++e) {
        if (state_[e] == kLower && reduced(e) < -tol_) {
          in_arc_ = e;
          return true;
        }
      }
      return false;
    }
    double best = -tol_;
    std::int64_t cnt = block_;
    std::int64_t e;
    bool found = false;
    for (e = next_arc_; e < real_arcs_; ++e) {
      if (state_[e] == kLower) {
        const double r = reduced(e);
        if (r < best) {
          best = r;
          in_arc_ = e;
          found = true;
        }
      }
      if (--cnt == 0) {
        if (found) goto done;
        cnt = block_;
      }
    }
    for (e = 0; e < next_arc_; ++e) {
      if (state_[e] == kLower) {
        const double r = reduced(e);
        if (r < best) {
          best = r;
          in_arc_ = e;
          found = true;
        }
      }
      if (--cnt == 0) {
        if (found) goto done;
        cnt = block_;
      }
    }
    if (!found) return false;
  done:
    next_arc_ = e;
    return true;
  }

  void find_join() {
    int u = src(in_arc_), v = tgt(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v])
        u = parent_[u];
      else
        v = parent_[v];
    }
    join_ = u;
  }

  bool find_leaving() {
    const int first = src(in_arc_), second = tgt(in_arc_);
    delta_ = std::numeric_limits<double>::infinity();
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      if (pred_dir_[u] != kUp) continue;
      const double d = flow_[pred_[u]];
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      if (pred_dir_[u] != kDown) continue;
      const double d = flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
    return result != 0;
  }

  void change_flow() {
    if (delta_ > 0) {
      flow_[in_arc_] += delta_;
      for (int u = src(in_arc_); u != join_; u = parent_[u]) flow_[pred_[u]] -= pred_dir_[u] * delta_;
      for (int u = tgt(in_arc_); u != join_; u = parent_[u]) flow_[pred_[u]] += pred_dir_[u] * delta_;
    }
    state_[in_arc_] = kTree;
    flow_[pred_[u_out_]] = 0.0;
    state_[pred_[u_out_]] = kLower;
  }

  void update_tree() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    const int v_out = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
      int stem = u_in_, par_stem = v_in_;
      int last = last_succ_[u_in_];
      int after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        const int next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);
        const int before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

      int tmp_sc = 0;
      const int tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == src(in_arc_) ? kUp : kDown;
      succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_out;
    }

    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost(in_arc_);
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  void recompute_potentials() {
    pi_[root_] = 0.0;
    for (int u = thread_[root_]; u != root_; u = thread_[u]) {
      const double ce = cost(pred_[u]);
      pi_[u] = pred_dir_[u] == kUp ? pi_[parent_[u]] - ce : pi_[parent_[u]] + ce;
    }
  }

  const kernels::CostMatrix& c_;
  int m_, n_, nodes_, root_;
  std::int64_t real_arcs_;
  double art_cost_, tol_;
  std::int64_t block_, next_arc_ = 0;

  std::vector<double> flow_;
  std::vector<signed char> state_;
  std::vector<int> art_src_, art_tgt_;
  std::vector<double> art_cost_arc_;

  std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_, dirty_revs_;
  std::vector<std::int64_t> pred_;
  std::vector<double> pi_;

  std::int64_t in_arc_ = 0;
  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0;
  double delta_ = 0.0;
  std::int64_t stalled_ = 0;
  bool bland_ = false;
};

}  // namespace

FlowSolution solve_transport(const kernels::CostMatrix& c, const std::vector<double>& supply,
                             const std::vector<double>& demand, const NetworkSimplexOptions& opts) {
  if (c.rows == 0 || c.cols == 0) throw UsageError("transport problem needs nonempty marginals");
  if (supply.size() != c.rows || demand.size() != c.cols)
    throw UsageError("marginal sizes do not match the cost matrix");
  if (!kernels::all_finite(c.data)) throw NumericalError("cost matrix has non-finite entries");
  Simplex s(c, supply, demand);
  FlowSolution out;
  out.pivots = s.run(opts.max_pivots);
  s.extract(out);
  return out;
}

}  // namespace otrates
