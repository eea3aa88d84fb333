#pragma once

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wte {

// Dense row-major matrix of doubles; the common container for embedded data.
struct Matrix {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : data(r * c, 0.0), rows(r), cols(c) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  bool empty() const { return rows == 0 || cols == 0; }
};

// Exact max-norm neighbor queries over the rows of a row-major array,
// restricted to a column window. Small inputs use a direct scan; larger ones
// a kd-tree with bounding-box pruning. Both paths return identical values:
// the tree prunes only on proven bounds, never approximately. The tree keeps
// a contiguous copy of the points in leaf order so scans stay sequential.
class MaxNormIndex {
 public:
  MaxNormIndex(const double* data, std::size_t rows, std::size_t stride,
               std::size_t col_begin, std::size_t col_end,
               std::size_t brute_threshold = 512)
      : data_(data),
        n_(rows),
        stride_(stride),
        c0_(col_begin),
        dims_(col_end - col_begin) {
    if (col_end <= col_begin)
      throw std::invalid_argument("MaxNormIndex: empty column window");
    if (rows == 0) throw std::invalid_argument("MaxNormIndex: no rows");
    brute_ = rows < brute_threshold;
    if (!brute_) build();
    if (dims_ == 1) {
      // one dimension: binary search on the sorted values beats any tree,
      // and the arithmetic matches the generic paths term for term
      sorted_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) sorted_[i] = coord(i, 0);
      std::sort(sorted_.begin(), sorted_.end());
    }
  }

  // Distance from row i to its k-th nearest other row (max-norm).
  double kth_distance(std::size_t i, int k) const {
    if (k < 1 || static_cast<std::size_t>(k) >= n_)
      throw std::invalid_argument("MaxNormIndex: k out of range");
    if (dims_ == 1) return kth_1d(i, static_cast<std::size_t>(k));
    thread_local std::vector<double> best;
    best.assign(static_cast<std::size_t>(k),
                std::numeric_limits<double>::infinity());
    if (brute_) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (j == i) continue;
        consider(best, bounded_distance(i, j, best.back()));
      }
    } else {
      knn_recurse(0, static_cast<std::uint32_t>(i), query_ptr(i), best);
    }
    return best.back();
  }

  struct Neighbor {
    double dist;
    std::uint32_t id;
    bool operator<(const Neighbor& o) const {
      return dist < o.dist || (dist == o.dist && id < o.id);
    }
  };

  // k nearest other rows with distance strictly above min_dist, ordered by
  // (distance, id); ties are therefore resolved deterministically. Returns
  // fewer than k entries when not enough rows qualify.
  std::vector<Neighbor> nearest(std::size_t i, int k,
                                double min_dist = -1.0) const {
    if (k < 1) throw std::invalid_argument("MaxNormIndex: k must be >= 1");
    std::vector<Neighbor> best;
    best.reserve(static_cast<std::size_t>(k));
    if (brute_) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (j == i) continue;
        consider_neighbor(best, static_cast<std::size_t>(k), min_dist,
                          {exact_distance(i, j), static_cast<std::uint32_t>(j)});
      }
    } else {
      nearest_recurse(0, static_cast<std::uint32_t>(i), query_ptr(i),
                      static_cast<std::size_t>(k), min_dist, best);
    }
    return best;
  }

  // Number of rows j != i with max-norm distance strictly below radius.
  std::size_t count_within(std::size_t i, double radius) const {
    if (!(radius > 0.0)) return 0;
    if (dims_ == 1) return count_1d(i, radius) - 1;
    std::size_t total = 0;
    if (brute_) {
      for (std::size_t j = 0; j < n_; ++j)
        if (distance_below(i, j, radius)) ++total;
    } else {
      total = count_recurse(0, query_ptr(i), radius);
    }
    return total - 1;  // the point itself is always strictly within
  }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;   // range in idx_ / pts_
    std::int32_t left = -1, right = -1; // children; leaf when left < 0
  };

  const double* data_;
  std::size_t n_, stride_, c0_, dims_;
  bool brute_ = false;
  std::size_t leaf_size_ = 16;
  std::vector<std::uint32_t> idx_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;   // per node: dims_ minima then dims_ maxima
  std::vector<double> pts_;     // leaf-ordered coordinate copy, row-major
  std::vector<double> sorted_;  // ascending values; only when dims_ == 1

  // Distances below are formed with the same subtractions as the generic
  // paths, so every count and k-th distance is bit-identical to them.
  double kth_1d(std::size_t i, std::size_t k) const {
    const double v = coord(i, 0);
    const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), v);
    const auto hi = std::upper_bound(lo, sorted_.end(), v);
    const auto zeros = static_cast<std::size_t>(hi - lo) - 1;  // excl. self
    if (k <= zeros) return 0.0;
    std::size_t need = k - zeros;
    auto li = static_cast<std::ptrdiff_t>(lo - sorted_.begin()) - 1;
    auto ri = static_cast<std::size_t>(hi - sorted_.begin());
    double d = 0.0;
    while (need-- > 0) {
      const double dl = li >= 0
                            ? v - sorted_[static_cast<std::size_t>(li)]
                            : std::numeric_limits<double>::infinity();
      const double dr = ri < n_ ? sorted_[ri] - v
                                : std::numeric_limits<double>::infinity();
      if (dl <= dr) {
        d = dl;
        --li;
      } else {
        d = dr;
        ++ri;
      }
    }
    return d;
  }

  // Rows with |value - v| strictly below radius, self included. The window
  // is contiguous in the sorted order.
  std::size_t count_1d(std::size_t i, double radius) const {
    const double v = coord(i, 0);
    const auto lo = std::partition_point(
        sorted_.begin(), sorted_.end(),
        [&](double s) { return s < v && v - s >= radius; });
    const auto hi = std::partition_point(
        lo, sorted_.end(),
        [&](double s) { return !(s > v && s - v >= radius); });
    return static_cast<std::size_t>(hi - lo);
  }

  double coord(std::size_t row, std::size_t d) const {
    return data_[row * stride_ + c0_ + d];
  }

  // The query row's coordinates, gathered once per query so the traversal
  // reads them from one dense buffer instead of the strided source.
  const double* query_ptr(std::size_t i) const {
    thread_local std::vector<double> q;
    q.resize(dims_);
    const double* src = data_ + i * stride_ + c0_;
    for (std::size_t d = 0; d < dims_; ++d) q[d] = src[d];
    return q.data();
  }

  // Max-norm distance with an early exit once it cannot beat the bound.
  double bounded_distance(std::size_t a, std::size_t b, double bound) const {
    return bounded_from(data_ + a * stride_ + c0_, data_ + b * stride_ + c0_,
                        bound);
  }

  double bounded_from(const double* pa, const double* pb, double bound) const {
    double acc = 0.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      const double diff = pa[d] > pb[d] ? pa[d] - pb[d] : pb[d] - pa[d];
      if (diff > acc) {
        acc = diff;
        if (acc >= bound) return acc;
      }
    }
    return acc;
  }

  bool distance_below(std::size_t a, std::size_t b, double radius) const {
    return below_from(data_ + a * stride_ + c0_, data_ + b * stride_ + c0_,
                      radius);
  }

  bool below_from(const double* pa, const double* pb, double radius) const {
    for (std::size_t d = 0; d < dims_; ++d) {
      const double diff = pa[d] > pb[d] ? pa[d] - pb[d] : pb[d] - pa[d];
      if (diff >= radius) return false;
    }
    return true;
  }

  static void consider(std::vector<double>& best, double d) {
    if (d >= best.back()) return;
    std::size_t pos = best.size() - 1;
    while (pos > 0 && best[pos - 1] > d) {
      best[pos] = best[pos - 1];
      --pos;
    }
    best[pos] = d;
  }

  double exact_distance(std::size_t a, std::size_t b) const {
    return bounded_distance(a, b, std::numeric_limits<double>::infinity());
  }

  static void consider_neighbor(std::vector<Neighbor>& best, std::size_t k,
                                double min_dist, Neighbor cand) {
    if (!(cand.dist > min_dist)) return;
    if (best.size() == k && !(cand < best.back())) return;
    auto pos = std::lower_bound(best.begin(), best.end(), cand);
    best.insert(pos, cand);
    if (best.size() > k) best.pop_back();
  }

  void nearest_recurse(std::size_t node, std::uint32_t qid, const double* qp,
                       std::size_t k, double min_dist,
                       std::vector<Neighbor>& best) const {
    const Node& nd = nodes_[node];
    if (nd.left < 0) {
      const double* pp = pts_.data() + nd.begin * dims_;
      for (std::uint32_t p = nd.begin; p < nd.end; ++p, pp += dims_) {
        const std::uint32_t j = idx_[p];
        if (j == qid) continue;
        consider_neighbor(
            best, k, min_dist,
            {bounded_from(qp, pp, std::numeric_limits<double>::infinity()), j});
      }
      return;
    }
    const auto l = static_cast<std::size_t>(nd.left);
    const auto r = static_cast<std::size_t>(nd.right);
    const double dl = box_lower(l, qp);
    const double dr = box_lower(r, qp);
    const std::size_t near = dl <= dr ? l : r;
    const std::size_t far = dl <= dr ? r : l;
    const double d_near = dl <= dr ? dl : dr;
    const double d_far = dl <= dr ? dr : dl;
    // prune only on strict excess so distance ties keep their id ordering
    if (best.size() < k || !(d_near > best.back().dist))
      nearest_recurse(near, qid, qp, k, min_dist, best);
    if (best.size() < k || !(d_far > best.back().dist))
      nearest_recurse(far, qid, qp, k, min_dist, best);
  }

  void build() {
    idx_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) idx_[i] = static_cast<std::uint32_t>(i);
    nodes_.reserve(2 * n_ / leaf_size_ + 2);
    build_node(0, static_cast<std::uint32_t>(n_));
    pts_.resize(n_ * dims_);
    for (std::size_t p = 0; p < n_; ++p)
      for (std::size_t d = 0; d < dims_; ++d)
        pts_[p * dims_ + d] = coord(idx_[p], d);
  }

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1});
    const std::size_t box_off = boxes_.size();
    boxes_.resize(box_off + 2 * dims_);
    for (std::size_t d = 0; d < dims_; ++d) {
      boxes_[box_off + d] = std::numeric_limits<double>::infinity();
      boxes_[box_off + dims_ + d] = -std::numeric_limits<double>::infinity();
    }
    for (std::uint32_t p = begin; p < end; ++p) {
      for (std::size_t d = 0; d < dims_; ++d) {
        const double v = coord(idx_[p], d);
        boxes_[box_off + d] = std::min(boxes_[box_off + d], v);
        boxes_[box_off + dims_ + d] = std::max(boxes_[box_off + dims_ + d], v);
      }
    }
    if (end - begin <= leaf_size_) return id;

    std::size_t split_dim = 0;
    double widest = -1.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      const double w = boxes_[box_off + dims_ + d] - boxes_[box_off + d];
      if (w > widest) {
        widest = w;
        split_dim = d;
      }
    }
    if (!(widest > 0.0)) return id;  // all points identical: keep as leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + begin, idx_.begin() + mid,
                     idx_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return coord(a, split_dim) < coord(b, split_dim);
                     });
    const auto left = build_node(begin, mid);
    const auto right = build_node(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  // Smallest possible distance from the query to any point in node's box.
  double box_lower(std::size_t node, const double* qp) const {
    const double* bx = boxes_.data() + node * 2 * dims_;
    double lb = 0.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      const double v = qp[d];
      const double below = bx[d] - v;
      const double above = v - bx[dims_ + d];
      const double gap = below > above ? below : above;
      if (gap > lb) lb = gap;
    }
    return lb;
  }

  // Largest possible distance from the query to any point in node's box.
  double box_upper(std::size_t node, const double* qp) const {
    const double* bx = boxes_.data() + node * 2 * dims_;
    double ub = 0.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      const double v = qp[d];
      const double lo = v - bx[d];
      const double hi = bx[dims_ + d] - v;
      const double far = lo > hi ? lo : hi;
      if (far > ub) ub = far;
    }
    return ub;
  }

  void knn_recurse(std::size_t node, std::uint32_t qid, const double* qp,
                   std::vector<double>& best) const {
    const Node& nd = nodes_[node];
    if (nd.left < 0) {
      const double* pp = pts_.data() + nd.begin * dims_;
      for (std::uint32_t p = nd.begin; p < nd.end; ++p, pp += dims_) {
        if (idx_[p] == qid) continue;
        consider(best, bounded_from(qp, pp, best.back()));
      }
      return;
    }
    const auto l = static_cast<std::size_t>(nd.left);
    const auto r = static_cast<std::size_t>(nd.right);
    const double dl = box_lower(l, qp);
    const double dr = box_lower(r, qp);
    const std::size_t near = dl <= dr ? l : r;
    const std::size_t far = dl <= dr ? r : l;
    const double d_near = dl <= dr ? dl : dr;
    const double d_far = dl <= dr ? dr : dl;
    if (d_near < best.back()) knn_recurse(near, qid, qp, best);
    if (d_far < best.back()) knn_recurse(far, qid, qp, best);
  }

  // Leaf scan of the count query. Few dimensions: evaluate every coordinate
  // branch-free; the boolean is the same conjunction the generic test forms.
  std::size_t count_leaf(const Node& nd, const double* qp,
                         double radius) const {
    std::size_t c = 0;
    const double* pp = pts_.data() + nd.begin * dims_;
    if (dims_ == 2) {
      const double q0 = qp[0], q1 = qp[1];
      for (std::uint32_t p = nd.begin; p < nd.end; ++p, pp += 2) {
        const double d0 = q0 > pp[0] ? q0 - pp[0] : pp[0] - q0;
        const double d1 = q1 > pp[1] ? q1 - pp[1] : pp[1] - q1;
        c += static_cast<std::size_t>(d0 < radius && d1 < radius);
      }
      return c;
    }
    if (dims_ == 3) {
      const double q0 = qp[0], q1 = qp[1], q2 = qp[2];
      for (std::uint32_t p = nd.begin; p < nd.end; ++p, pp += 3) {
        const double d0 = q0 > pp[0] ? q0 - pp[0] : pp[0] - q0;
        const double d1 = q1 > pp[1] ? q1 - pp[1] : pp[1] - q1;
        const double d2 = q2 > pp[2] ? q2 - pp[2] : pp[2] - q2;
        c += static_cast<std::size_t>(d0 < radius && d1 < radius &&
                                      d2 < radius);
      }
      return c;
    }
    for (std::uint32_t p = nd.begin; p < nd.end; ++p, pp += dims_)
      if (below_from(qp, pp, radius)) ++c;
    return c;
  }

  std::size_t count_recurse(std::size_t node, const double* qp,
                            double radius) const {
    const Node& nd = nodes_[node];
    const double lb = box_lower(node, qp);
    if (lb >= radius) return 0;
    const double ub = box_upper(node, qp);
    if (ub < radius) return nd.end - nd.begin;
    if (nd.left < 0) return count_leaf(nd, qp, radius);
    return count_recurse(static_cast<std::size_t>(nd.left), qp, radius) +
           count_recurse(static_cast<std::size_t>(nd.right), qp, radius);
  }
};

}  // namespace wte
