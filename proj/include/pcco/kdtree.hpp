#ifndef PCCO_KDTREE_HPP
#define PCCO_KDTREE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace pcco {

inline double squared_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                               const Eigen::Ref<const Eigen::VectorXd>& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Static k-d tree over a subset of the rows of a point matrix. Exact
// queries only; ties at the query radius are included (<=).
class KdTree {
public:
  KdTree() = default;

  // `points` must outlive the tree. `members` are row indices into it.
  KdTree(const Eigen::MatrixXd& points, std::vector<int> members)
      : points_(&points), index_(std::move(members)) {
    if (!index_.empty() && points_->cols() > 0) {
      nodes_.reserve(index_.size());
      root_ = build(0, static_cast<int>(index_.size()));
    }
  }

  // Indices (into the point matrix) of members with ||p - q|| <= radius.
  void radius_search(const Eigen::Ref<const Eigen::VectorXd>& query, double radius,
                     std::vector<int>& out) const {
    if (points_ == nullptr || index_.empty()) return;
    if (points_->cols() == 0) {
      // Zero-dimensional points are all at distance zero.
      if (radius >= 0.0) out.insert(out.end(), index_.begin(), index_.end());
      return;
    }
    search(root_, query, radius * radius, out);
  }

  std::size_t radius_count(const Eigen::Ref<const Eigen::VectorXd>& query, double radius) const {
    if (points_ == nullptr || index_.empty()) return 0;
    if (points_->cols() == 0) return radius >= 0.0 ? index_.size() : 0;
    return count(root_, query, radius * radius);
  }

  // k nearest members to `query`, excluding `exclude` (pass -1 to keep all).
  // Ties broken by smaller row index; result sorted by (distance, index).
  std::vector<int> knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k,
                       int exclude = -1) const {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(index_.size());
    for (int idx : index_) {
      if (idx == exclude) continue;
      if (points_->cols() == 0) {
        cand.emplace_back(0.0, idx);
      } else {
        cand.emplace_back(squared_distance(points_->row(idx).transpose(), query), idx);
      }
    }
    std::sort(cand.begin(), cand.end());
    if (cand.size() > k) cand.resize(k);
    std::vector<int> out;
    out.reserve(cand.size());
    for (auto& [d, i] : cand) out.push_back(i);
    return out;
  }

  const std::vector<int>& members() const { return index_; }

private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;  // leaf range in index_
    int end = 0;
    int axis = -1;
    double split = 0.0;
  };

  static constexpr int kLeafSize = 16;

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    // Split on the axis with the largest spread.
    const Eigen::Index dim = points_->cols();
    int axis = 0;
    double best_spread = -1.0;
    for (Eigen::Index ax = 0; ax < dim; ++ax) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int i = begin; i < end; ++i) {
        const double v = (*points_)(index_[i], ax);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        axis = static_cast<int>(ax);
      }
    }
    if (best_spread <= 0.0) return id;  // all points identical: keep as leaf

    const int mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](int a, int b) {
                       const double va = (*points_)(a, axis), vb = (*points_)(b, axis);
                       return va < vb || (va == vb && a < b);
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = (*points_)(index_[mid], axis);
    nodes_[id].left = build(begin, mid);
    nodes_[id].right = build(mid, end);
    return id;
  }

  void search(int node_id, const Eigen::Ref<const Eigen::VectorXd>& query, double r2,
              std::vector<int>& out) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = index_[i];
        if (squared_distance(points_->row(idx).transpose(), query) <= r2) out.push_back(idx);
      }
      return;
    }
    const double delta = query[node.axis] - node.split;
    // Points equal to the split value can land on either side of the
    // nth_element partition, so both subtrees are visited when the slab
    // intersects the ball (<=).
    if (delta * delta <= r2) {
      search(node.left, query, r2, out);
      search(node.right, query, r2, out);
    } else if (delta < 0.0) {
      search(node.left, query, r2, out);
    } else {
      search(node.right, query, r2, out);
    }
  }

  std::size_t count(int node_id, const Eigen::Ref<const Eigen::VectorXd>& query,
                    double r2) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      std::size_t c = 0;
      for (int i = node.begin; i < node.end; ++i) {
        if (squared_distance(points_->row(index_[i]).transpose(), query) <= r2) ++c;
      }
      return c;
    }
    const double delta = query[node.axis] - node.split;
    if (delta * delta <= r2) return count(node.left, query, r2) + count(node.right, query, r2);
    return delta < 0.0 ? count(node.left, query, r2) : count(node.right, query, r2);
  }

  const Eigen::MatrixXd* points_ = nullptr;
  std::vector<int> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace pcco

#endif  // PCCO_KDTREE_HPP
