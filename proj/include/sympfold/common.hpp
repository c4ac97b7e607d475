#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sympfold {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
  Precondition,
  EmptySet,
  MaskRejectionExhausted,
  DomainViolation,
  BadDimension,
  ScaleTooSmall,
  InsufficientScales,
  PairBudgetExceeded,
  NoDirectionFound,
  CertificationFailed,
  IntegrationFailure,
  BadAreas,
  EmbeddingCertificationFailed,
  NoAdmissibleTime,
  NotSymplectic,
  Parse,
};

const char* to_string(ErrorCode code);

/// All library failures carry a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Closed axis-aligned box.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);
  static Box cube(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  double diameter() const;
  bool contains(const Vec& x, double margin = 0.0) const;
  /// Largest r such that the ball of radius r around x stays inside; negative outside.
  double depth(const Vec& x) const;
  Box expanded(double amount) const;
  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }
};

/// Open rectangle in one symplectic factor, (q0,q1) x (p0,p1).
struct Rect {
  double q0 = 0, q1 = 1, p0 = 0, p1 = 1;

  double width() const { return q1 - q0; }
  double height() const { return p1 - p0; }
  double area() const { return width() * height(); }
  bool contains(double q, double p, double margin = 0.0) const {
    return q > q0 + margin && q < q1 - margin && p > p0 + margin && p < p1 - margin;
  }
  Rect scaled(double factor) const { return {q0 * factor, q1 * factor, p0 * factor, p1 * factor}; }
};

/// Standard symplectic matrix on R^{2n} in (q1,p1,q2,p2,...) layout;
/// omega(u,v) = u^T J v with 2x2 blocks [[0,1],[-1,0]].
Mat standard_j(int dim);
double omega(const Vec& u, const Vec& v);

/// ||M^T J M - J||_inf (max-abs entry).
double symplectic_residual(const Mat& jacobian);

/// SplitMix64 step; used to derive independent child seeds.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

/// Number of worker threads, capped by SYMPFOLD_THREADS when set.
int worker_threads();

/// Runs body(i) for i in [0, count); results must be written to per-index slots
/// so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sympfold
