#pragma once

// Adam over a flat parameter vector. The optimizer returns the update
// direction instead of mutating parameters so callers can apply it on
// manifolds (quaternions, pose tangents) as well as plain vectors.

#include <Eigen/Core>
#include <vector>

namespace gsblur {

class AdamState {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;

  void resize(Eigen::Index n) {
    m_ = Eigen::VectorXd::Zero(n);
    v_ = Eigen::VectorXd::Zero(n);
    t_ = 0;
  }

  Eigen::Index size() const { return m_.size(); }
  long step_count() const { return t_; }
  long skipped_count() const { return skipped_; }

  // Returns -lr * mhat / (sqrt(vhat) + eps). A non-finite gradient skips the
  // step entirely (moments and step count untouched) and returns zero.
  Eigen::VectorXd step(const Eigen::VectorXd& grad, double lr) {
    if (!grad.allFinite()) {
      ++skipped_;
      return Eigen::VectorXd::Zero(m_.size());
    }
    ++t_;
    m_ = beta1 * m_ + (1.0 - beta1) * grad;
    v_ = beta2 * v_ + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, double(t_));
    const double bc2 = 1.0 - std::pow(beta2, double(t_));
    return (-lr / bc1) * m_.cwiseQuotient(
        ((v_ / bc2).cwiseSqrt().array() + eps).matrix());
  }

  // Drops moment entries for removed parameters: keeps `stride` consecutive
  // entries per retained index (pruning support).
  void keep_indices(const std::vector<int>& keep, int stride) {
    Eigen::VectorXd m(Eigen::Index(keep.size()) * stride);
    Eigen::VectorXd v(Eigen::Index(keep.size()) * stride);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      m.segment(Eigen::Index(i) * stride, stride) =
          m_.segment(Eigen::Index(keep[i]) * stride, stride);
      v.segment(Eigen::Index(i) * stride, stride) =
          v_.segment(Eigen::Index(keep[i]) * stride, stride);
    }
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  Eigen::VectorXd m_, v_;
  long t_ = 0;
  long skipped_ = 0;
};

// lr_start * (lr_end/lr_start)^(iter/total): exponential decay hitting
// lr_end exactly at iter == total.
inline double exp_decay_lr(double lr_start, double lr_end, int iter,
                           int total) {
  if (total <= 0) return lr_start;
  const double f = double(iter) / double(total);
  return lr_start * std::pow(lr_end / lr_start, f);
}

}  // namespace gsblur
