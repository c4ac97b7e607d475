#include "sympfold/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace sympfold {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::MaskRejectionExhausted: return "MaskRejectionExhausted";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::ScaleTooSmall: return "ScaleTooSmall";
    case ErrorCode::InsufficientScales: return "InsufficientScales";
    case ErrorCode::PairBudgetExceeded: return "PairBudgetExceeded";
    case ErrorCode::NoDirectionFound: return "NoDirectionFound";
    case ErrorCode::CertificationFailed: return "CertificationFailed";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::BadAreas: return "BadAreas";
    case ErrorCode::EmbeddingCertificationFailed: return "EmbeddingCertificationFailed";
    case ErrorCode::NoAdmissibleTime: return "NoAdmissibleTime";
    case ErrorCode::NotSymplectic: return "NotSymplectic";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw Error(ErrorCode::Precondition, "box corner dimensions differ");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw Error(ErrorCode::Precondition, "box has lo > hi");
}

Box Box::cube(int dim, double lo, double hi) {
  return Box(Vec::Constant(dim, lo), Vec::Constant(dim, hi));
}

double Box::volume() const {
  double v = 1.0;
  for (Eigen::Index i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

double Box::diameter() const { return (hi - lo).norm(); }

bool Box::contains(const Vec& x, double margin) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
  return true;
}

double Box::depth(const Vec& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lo.size(); ++i) d = std::min({d, x[i] - lo[i], hi[i] - x[i]});
  return d;
}

Box Box::expanded(double amount) const {
  return Box(lo.array() - amount, hi.array() + amount);
}

Mat standard_j(int dim) {
  if (dim % 2 != 0) throw Error(ErrorCode::BadDimension, "symplectic dimension must be even");
  Mat j = Mat::Zero(dim, dim);
  for (int k = 0; k < dim; k += 2) {
    j(k, k + 1) = 1.0;
    j(k + 1, k) = -1.0;
  }
  return j;
}

double omega(const Vec& u, const Vec& v) {
  double s = 0.0;
  for (Eigen::Index k = 0; k + 1 < u.size(); k += 2) s += u[k] * v[k + 1] - u[k + 1] * v[k];
  return s;
}

double symplectic_residual(const Mat& jacobian) {
  const Mat j = standard_j(static_cast<int>(jacobian.rows()));
  return (jacobian.transpose() * j * jacobian - j).cwiseAbs().maxCoeff();
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int worker_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SYMPFOLD_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const auto threads = static_cast<std::size_t>(worker_threads());
  if (threads <= 1 || count < 64) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(count, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sympfold
