#pragma once

// Linear translation matrix W between two embedding spaces, learned from
// gold pairs by minimizing
//
//   Err(W) = sum_i ||W x_i - y_i||^2 + lambda ||W||_F^2
//
// with a closed-form solver and an independent gradient-descent solver.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "synlink/embedding_io.hpp"
#include "synlink/error.hpp"

namespace synlink {

enum class Solver { closed_form, gradient_descent };

inline std::string_view solver_name(Solver s) {
  return s == Solver::closed_form ? "closed" : "gd";
}

struct TrainingPair {
  std::string source_id;
  std::string target_id;
  Eigen::VectorXd source;
  Eigen::VectorXd target;
};

struct FitInfo {
  std::size_t pair_count = 0;
  Solver solver = Solver::closed_form;
  double ridge_lambda = 0.0;
  double residual = 0.0;  // data term of Err at the returned W
  std::size_t epochs_run = 0;
};

class TranslationMatrix {
 public:
  TranslationMatrix() = default;
  explicit TranslationMatrix(Eigen::MatrixXd values, FitInfo info = {})
      : values_(std::move(values)), info_(info) {
    if (values_.rows() == 0 || values_.cols() == 0) {
      throw InvalidArgument("translation matrix must be non-empty");
    }
    if (!values_.allFinite()) throw InvalidArgument("translation matrix has non-finite values");
  }

  std::size_t target_dimension() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t source_dimension() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  const FitInfo& info() const { return info_; }

 private:
  Eigen::MatrixXd values_;
  FitInfo info_;
};

namespace detail {

inline void check_pairs(std::span<const TrainingPair> pairs) {
  if (pairs.empty()) throw InvalidArgument("at least one training pair is required");
  const auto ds = pairs.front().source.size();
  const auto dt = pairs.front().target.size();
  if (ds == 0 || dt == 0) throw InvalidArgument("training vectors must be non-empty");
  for (const auto& p : pairs) {
    if (p.source.size() != ds || p.target.size() != dt) {
      throw DimensionMismatch("training pair " + p.source_id + " -> " + p.target_id +
                              " has inconsistent dimensions");
    }
  }
}

// Columns are the source (X) or target (Y) vectors.
inline Eigen::MatrixXd stack_sources(std::span<const TrainingPair> pairs) {
  Eigen::MatrixXd x(pairs.front().source.size(), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = pairs[i].source;
  return x;
}

inline Eigen::MatrixXd stack_targets(std::span<const TrainingPair> pairs) {
  Eigen::MatrixXd y(pairs.front().target.size(), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) y.col(static_cast<Eigen::Index>(i)) = pairs[i].target;
  return y;
}

}  // namespace detail

// Sum of squared mapping errors plus the ridge term.
inline double objective(const Eigen::MatrixXd& w, std::span<const TrainingPair> pairs,
                        double ridge_lambda = 0.0) {
  double err = 0.0;
  for (const auto& p : pairs) err += (w * p.source - p.target).squaredNorm();
  return err + ridge_lambda * w.squaredNorm();
}

// dErr/dW = 2 (W X - Y) X^T + 2 lambda W
inline Eigen::MatrixXd objective_gradient(const Eigen::MatrixXd& w,
                                          std::span<const TrainingPair> pairs,
                                          double ridge_lambda = 0.0) {
  Eigen::MatrixXd grad = 2.0 * ridge_lambda * w;
  for (const auto& p : pairs) grad.noalias() += 2.0 * (w * p.source - p.target) * p.source.transpose();
  return grad;
}

// W = Y X^T (X X^T + lambda I)^-1, solved as the ridge-augmented least-squares
// problem [X^T; sqrt(lambda) I] W^T = [Y^T; 0] with a rank-revealing QR.
inline TranslationMatrix fit_least_squares(std::span<const TrainingPair> pairs,
                                           double ridge_lambda = 1e-3) {
  detail::check_pairs(pairs);
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw InvalidArgument("ridge lambda must be a nonnegative finite number");
  }
  const Eigen::MatrixXd x = detail::stack_sources(pairs);
  const Eigen::MatrixXd y = detail::stack_targets(pairs);
  const Eigen::Index ds = x.rows();
  const Eigen::Index n = x.cols();
  const Eigen::Index extra = ridge_lambda > 0.0 ? ds : 0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + extra, ds);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + extra, y.rows());
  a.topRows(n) = x.transpose();
  b.topRows(n) = y.transpose();
  if (extra > 0) a.bottomRows(extra).diagonal().setConstant(std::sqrt(ridge_lambda));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < ds) {
    throw SingularSystemError("singular least-squares system: " + std::to_string(n) +
                              " pairs span rank " + std::to_string(qr.rank()) + " of " +
                              std::to_string(ds) +
                              " source dimensions; add pairs or use a ridge lambda > 0");
  }
  Eigen::MatrixXd w = qr.solve(b).transpose();
  if (!w.allFinite()) throw SingularSystemError("least-squares solution is not finite");

  FitInfo info;
  info.pair_count = pairs.size();
  info.solver = Solver::closed_form;
  info.ridge_lambda = ridge_lambda;
  info.residual = objective(w, pairs, 0.0);
  return TranslationMatrix(std::move(w), info);
}

struct GradientDescentOptions {
  double learning_rate = 0.1;  // applied to the per-pair mean gradient
  std::size_t epochs = 2000;
  std::uint64_t seed = 0;
  double ridge_lambda = 0.0;
  double init_scale = 0.01;
  // Stop early once the relative decrease of Err over one epoch drops below
  // this value. Zero runs every epoch.
  double tolerance = 0.0;
};

// Full-batch gradient descent from a seeded random start. When `trace` is
// given it receives Err (with the ridge term) before the first step and
// after every epoch.
inline TranslationMatrix fit_gradient_descent(std::span<const TrainingPair> pairs,
                                              const GradientDescentOptions& options,
                                              std::vector<double>* trace = nullptr) {
  detail::check_pairs(pairs);
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate)) {
    throw InvalidArgument("learning rate must be positive");
  }
  if (options.epochs == 0) throw InvalidArgument("epochs must be positive");
  if (!(options.ridge_lambda >= 0.0)) throw InvalidArgument("ridge lambda must be nonnegative");

  const Eigen::MatrixXd x = detail::stack_sources(pairs);
  const Eigen::MatrixXd y = detail::stack_targets(pairs);
  const double scale = 1.0 / static_cast<double>(pairs.size());
  const double lambda = options.ridge_lambda;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, options.init_scale);
  Eigen::MatrixXd w(y.rows(), x.rows());
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = init(rng);
  }

  auto err_of = [&](const Eigen::MatrixXd& m) {
    return (m * x - y).squaredNorm() + lambda * m.squaredNorm();
  };
  const double initial = err_of(w);
  if (trace != nullptr) {
    trace->clear();
    trace->push_back(initial);
  }

  double previous = initial;
  std::size_t epoch = 0;
  while (epoch < options.epochs) {
    ++epoch;
    const Eigen::MatrixXd residual = w * x - y;
    Eigen::MatrixXd grad = 2.0 * residual * x.transpose();
    grad += 2.0 * lambda * w;
    w -= options.learning_rate * scale * grad;
    const double err = err_of(w);
    if (trace != nullptr) trace->push_back(err);
    if (!std::isfinite(err) || err > 10.0 * initial + 1e-12) {
      std::ostringstream msg;
      msg << "gradient descent diverged at epoch " << epoch << " with learning rate "
          << options.learning_rate << "; lower the learning rate";
      throw DivergenceError(msg.str());
    }
    if (options.tolerance > 0.0 && previous - err <= options.tolerance * previous) break;
    previous = err;
  }

  FitInfo info;
  info.pair_count = pairs.size();
  info.solver = Solver::gradient_descent;
  info.ridge_lambda = lambda;
  info.residual = objective(w, pairs, 0.0);
  info.epochs_run = epoch;
  return TranslationMatrix(std::move(w), info);
}

inline Eigen::VectorXd apply_map(const TranslationMatrix& w, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != w.source_dimension()) {
    throw DimensionMismatch("vector has dimension " + std::to_string(v.size()) +
                            ", map expects " + std::to_string(w.source_dimension()));
  }
  return w.values() * v;
}

inline double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference) {
  return (a - reference).norm() / reference.norm();
}

// Text format: "d_t d_s" header, then one space-separated row per line.
inline void write_matrix(std::ostream& out, const TranslationMatrix& w) {
  std::string buf;
  detail::append_number(buf, w.target_dimension());
  buf.push_back(' ');
  detail::append_number(buf, w.source_dimension());
  buf.push_back('\n');
  const auto& m = w.values();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) buf.push_back(' ');
      detail::append_number(buf, m(r, c));
    }
    buf.push_back('\n');
  }
  out << buf;
}

inline std::string matrix_to_string(const TranslationMatrix& w) {
  std::ostringstream out;
  write_matrix(out, w);
  return out.str();
}

inline TranslationMatrix read_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("matrix file is empty");
  std::size_t rows = 0;
  std::size_t cols = 0;
  {
    const auto header = detail::trim_line_end(line);
    const auto space = header.find(' ');
    if (space == std::string_view::npos || !detail::parse_number(header.substr(0, space), rows) ||
        !detail::parse_number(header.substr(space + 1), cols) || rows == 0 || cols == 0) {
      throw FormatError("unparsable matrix header '" + std::string(header) + "'");
    }
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw FormatError("matrix file truncated at row " + std::to_string(r));
    std::string_view rest = detail::trim_line_end(line);
    std::size_t c = 0;
    while (!rest.empty()) {
      const auto next = rest.find(' ');
      double value = 0.0;
      if (c >= cols || !detail::parse_number(rest.substr(0, next), value)) {
        throw FormatError("bad matrix row " + std::to_string(r));
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c++)) = value;
      if (next == std::string_view::npos) break;
      rest.remove_prefix(next + 1);
    }
    if (c != cols) throw FormatError("matrix row " + std::to_string(r) + " has wrong length");
  }
  return TranslationMatrix(std::move(m));
}

inline void save_matrix(const std::filesystem::path& path, const TranslationMatrix& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_matrix(out, w);
}

inline TranslationMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open matrix file " + path.string());
  return read_matrix(in);
}

// Identifies a matrix by its serialized values.
inline std::string matrix_version(const TranslationMatrix& w) {
  const auto h = std::hash<std::string>{}(matrix_to_string(w));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace synlink
