#ifndef PCCO_DATASET_HPP
#define PCCO_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcco/kdtree.hpp"

namespace pcco {

class DatasetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// One sample of the uncertain parameters: r1 integer coordinates followed
// by r2 real coordinates.
struct UncertaintyPoint {
  std::vector<long long> integer_part;
  Eigen::VectorXd real_part;

  int r1() const { return static_cast<int>(integer_part.size()); }
  int r2() const { return static_cast<int>(real_part.size()); }
  int dim() const { return r1() + r2(); }
};

// Distance convention used throughout: points in different integer groups
// are infinitely far apart; within a group the metric is Euclidean on the
// real coordinates. For pure-continuous data (r1 = 0) this is the plain
// Euclidean norm.
class DataSet {
public:
  // Empty shell; assign from a factory before use. Every factory enforces
  // D >= 1, consistent dims, finite reals.
  DataSet() = default;

  // Ordered multiset of samples; duplicates permitted. Throws DatasetError
  // if empty, dims are inconsistent, or any real coordinate is non-finite.
  static DataSet from_points(const std::vector<UncertaintyPoint>& points);
  static DataSet from_matrices(Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints,
                               Eigen::MatrixXd reals);

  // CSV rows: r1 integer columns then r2 real columns, comma separated,
  // '.' decimal point regardless of locale. JSON: an array of arrays.
  static DataSet load_csv(const std::string& path, int r1, int r2, bool has_header = false);
  static DataSet load_json(const std::string& path, int r1, int r2);
  void save_csv(const std::string& path, bool write_header = false) const;
  void save_json(const std::string& path) const;

  std::size_t size() const { return static_cast<std::size_t>(reals_.rows()); }
  int r1() const { return static_cast<int>(ints_.cols()); }
  int r2() const { return static_cast<int>(reals_.cols()); }
  int dim() const { return r1() + r2(); }

  UncertaintyPoint point(std::size_t j) const;
  const Eigen::MatrixXd& reals() const { return reals_; }
  const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& ints() const { return ints_; }

  // Group id of point j (points share a group iff their integer parts are
  // identical; one group when r1 = 0). Ids are dense, in order of first
  // appearance.
  int group_of(std::size_t j) const { return group_of_[j]; }
  int group_count() const { return static_cast<int>(groups_.size()); }
  const std::vector<int>& group_members(int group) const { return groups_[group]; }

  // D_j^zeta: points within `radius` of point j (itself included).
  std::size_t vicinity_count(std::size_t j, double radius) const;
  std::vector<int> vicinity_indices(std::size_t j, double radius) const;

  // k nearest neighbours of j within its integer group, excluding j.
  std::vector<int> nearest_neighbors(std::size_t j, std::size_t k) const;

  bool same_dims(const DataSet& other) const {
    return r1() == other.r1() && r2() == other.r2();
  }

  // Subset by row indices (preserving order); dims carried over.
  DataSet subset(const std::vector<int>& indices) const;

private:
  void build_index();
  void check_row_in_range(std::size_t j) const;

  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints_;  // D x r1
  Eigen::MatrixXd reals_;                                          // D x r2
  std::vector<int> group_of_;
  std::vector<std::vector<int>> groups_;
  std::vector<KdTree> trees_;  // one per group, over reals_
};

}  // namespace pcco

#endif  // PCCO_DATASET_HPP
