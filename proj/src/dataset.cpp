#include "pcco/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pcco {

namespace {

double parse_real(const std::string& token, std::size_t row) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    // from_chars accepts "nan"/"inf"; they fall through to the finite check.
    std::string t(begin, end);
    for (auto& c : t) c = static_cast<char>(std::tolower(c));
    if (t == "nan" || t == "-nan") value = std::nan("");
    else if (t == "inf" || t == "+inf") value = HUGE_VAL;
    else if (t == "-inf") value = -HUGE_VAL;
    else
      throw DatasetError("ParseError at row " + std::to_string(row) + ": bad real value '" +
                         token + "'");
  }
  if (!std::isfinite(value))
    throw DatasetError("NonFinite at row " + std::to_string(row));
  return value;
}

long long parse_int(const std::string& token, std::size_t row) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  long long value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw DatasetError("ParseError at row " + std::to_string(row) + ": bad integer value '" +
                       token + "'");
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string format_real(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

DataSet DataSet::from_matrices(Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints,
                               Eigen::MatrixXd reals) {
  if (ints.rows() != reals.rows() && ints.size() != 0 && reals.size() != 0)
    throw DatasetError("DimensionMismatch: integer and real blocks disagree on row count");
  const Eigen::Index rows = std::max(ints.rows(), reals.rows());
  if (rows == 0) throw DatasetError("EmptyDataSet");
  if (ints.cols() + reals.cols() < 1) throw DatasetError("DimensionMismatch: r1 + r2 must be >= 1");
  if (ints.rows() == 0) ints.resize(rows, 0);
  if (reals.rows() == 0) reals.resize(rows, 0);
  if (!reals.allFinite()) {
    for (Eigen::Index i = 0; i < reals.rows(); ++i)
      if (!reals.row(i).allFinite()) throw DatasetError("NonFinite at row " + std::to_string(i));
  }
  DataSet ds;
  ds.ints_ = std::move(ints);
  ds.reals_ = std::move(reals);
  ds.build_index();
  return ds;
}

DataSet DataSet::from_points(const std::vector<UncertaintyPoint>& points) {
  if (points.empty()) throw DatasetError("EmptyDataSet");
  const int r1 = points.front().r1();
  const int r2 = points.front().r2();
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints(points.size(), r1);
  Eigen::MatrixXd reals(points.size(), r2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].r1() != r1 || points[i].r2() != r2)
      throw DatasetError("DimensionMismatch at row " + std::to_string(i));
    for (int c = 0; c < r1; ++c) ints(i, c) = points[i].integer_part[c];
    reals.row(i) = points[i].real_part.transpose();
  }
  return from_matrices(std::move(ints), std::move(reals));
}

DataSet DataSet::load_csv(const std::string& path, int r1, int r2, bool has_header) {
  if (r1 < 0 || r2 < 0 || r1 + r2 < 1)
    throw DatasetError("DimensionMismatch: need r1 >= 0, r2 >= 0, r1 + r2 >= 1");
  std::ifstream in(path);
  if (!in) throw DatasetError("dataset not found: " + path);
  std::vector<UncertaintyPoint> points;
  std::string line;
  std::size_t row = 0;
  bool skipped_header = !has_header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    auto tokens = split_csv_line(line);
    if (static_cast<int>(tokens.size()) != r1 + r2)
      throw DatasetError("DimensionMismatch at row " + std::to_string(row) + ": expected " +
                         std::to_string(r1 + r2) + " columns, got " +
                         std::to_string(tokens.size()));
    UncertaintyPoint p;
    p.integer_part.resize(r1);
    p.real_part.resize(r2);
    for (int c = 0; c < r1; ++c) p.integer_part[c] = parse_int(tokens[c], row);
    for (int c = 0; c < r2; ++c) p.real_part[c] = parse_real(tokens[r1 + c], row);
    points.push_back(std::move(p));
    ++row;
  }
  if (points.empty()) throw DatasetError("EmptyDataSet");
  return from_points(points);
}

DataSet DataSet::load_json(const std::string& path, int r1, int r2) {
  std::ifstream in(path);
  if (!in) throw DatasetError("dataset not found: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("ParseError: ") + e.what());
  }
  if (!doc.is_array()) throw DatasetError("ParseError: expected a JSON array of arrays");
  std::vector<UncertaintyPoint> points;
  std::size_t row = 0;
  for (const auto& item : doc) {
    if (!item.is_array() || static_cast<int>(item.size()) != r1 + r2)
      throw DatasetError("DimensionMismatch at row " + std::to_string(row));
    UncertaintyPoint p;
    p.integer_part.resize(r1);
    p.real_part.resize(r2);
    for (int c = 0; c < r1; ++c) {
      if (!item[c].is_number_integer())
        throw DatasetError("ParseError at row " + std::to_string(row) + ": integer expected");
      p.integer_part[c] = item[c].get<long long>();
    }
    for (int c = 0; c < r2; ++c) {
      if (!item[r1 + c].is_number())
        throw DatasetError("ParseError at row " + std::to_string(row) + ": number expected");
      const double v = item[r1 + c].get<double>();
      if (!std::isfinite(v)) throw DatasetError("NonFinite at row " + std::to_string(row));
      p.real_part[c] = v;
    }
    points.push_back(std::move(p));
    ++row;
  }
  if (points.empty()) throw DatasetError("EmptyDataSet");
  return from_points(points);
}

void DataSet::save_csv(const std::string& path, bool write_header) const {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write: " + path);
  if (write_header) {
    for (int c = 0; c < r1(); ++c) out << (c ? "," : "") << "z" << c;
    for (int c = 0; c < r2(); ++c) out << ((c || r1()) ? "," : "") << "x" << c;
    out << "\n";
  }
  for (std::size_t i = 0; i < size(); ++i) {
    for (int c = 0; c < r1(); ++c) out << (c ? "," : "") << ints_(i, c);
    for (int c = 0; c < r2(); ++c) out << ((c || r1()) ? "," : "") << format_real(reals_(i, c));
    out << "\n";
  }
}

void DataSet::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write: " + path);
  out << "[";
  for (std::size_t i = 0; i < size(); ++i) {
    out << (i ? ",\n " : "\n ") << "[";
    for (int c = 0; c < r1(); ++c) out << (c ? "," : "") << ints_(i, c);
    for (int c = 0; c < r2(); ++c) out << ((c || r1()) ? "," : "") << format_real(reals_(i, c));
    out << "]";
  }
  out << "\n]\n";
}

UncertaintyPoint DataSet::point(std::size_t j) const {
  check_row_in_range(j);
  UncertaintyPoint p;
  p.integer_part.resize(r1());
  for (int c = 0; c < r1(); ++c) p.integer_part[c] = ints_(j, c);
  p.real_part = reals_.row(j).transpose();
  return p;
}

void DataSet::build_index() {
  const std::size_t n = size();
  group_of_.assign(n, 0);
  groups_.clear();
  if (r1() == 0) {
    groups_.emplace_back();
    groups_[0].reserve(n);
    for (std::size_t i = 0; i < n; ++i) groups_[0].push_back(static_cast<int>(i));
  } else {
    std::map<std::vector<long long>, int> ids;
    std::vector<long long> key(r1());
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < r1(); ++c) key[c] = ints_(i, c);
      auto [it, inserted] = ids.try_emplace(key, static_cast<int>(groups_.size()));
      if (inserted) groups_.emplace_back();
      group_of_[i] = it->second;
      groups_[it->second].push_back(static_cast<int>(i));
    }
  }
  trees_.clear();
  trees_.reserve(groups_.size());
  for (const auto& members : groups_) trees_.emplace_back(reals_, members);
}

void DataSet::check_row_in_range(std::size_t j) const {
  if (j >= size())
    throw DatasetError("index out of range: " + std::to_string(j) + " >= " +
                       std::to_string(size()));
}

std::size_t DataSet::vicinity_count(std::size_t j, double radius) const {
  check_row_in_range(j);
  if (radius < 0.0) throw DatasetError("radius must be >= 0");
  return trees_[group_of_[j]].radius_count(reals_.row(j).transpose(), radius);
}

std::vector<int> DataSet::vicinity_indices(std::size_t j, double radius) const {
  check_row_in_range(j);
  if (radius < 0.0) throw DatasetError("radius must be >= 0");
  std::vector<int> out;
  trees_[group_of_[j]].radius_search(reals_.row(j).transpose(), radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> DataSet::nearest_neighbors(std::size_t j, std::size_t k) const {
  check_row_in_range(j);
  return trees_[group_of_[j]].knn(reals_.row(j).transpose(), k, static_cast<int>(j));
}

DataSet DataSet::subset(const std::vector<int>& indices) const {
  if (indices.empty()) throw DatasetError("EmptyDataSet");
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints(indices.size(), r1());
  Eigen::MatrixXd reals(indices.size(), r2());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    check_row_in_range(static_cast<std::size_t>(indices[i]));
    ints.row(i) = ints_.row(indices[i]);
    reals.row(i) = reals_.row(indices[i]);
  }
  return from_matrices(std::move(ints), std::move(reals));
}

}  // namespace pcco
