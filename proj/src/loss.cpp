#include "tusim/loss.hpp"

#include <cmath>

#include "tusim/errors.hpp"

namespace tusim {

namespace {

// Subgradient selector for |r|: 0 at the kink. Residuals below kKinkEps are
// treated as the kink itself -- float-noise residuals (~1e-12) would
// otherwise contribute full-magnitude sign gradients that point uphill and
// stall the descent long before the 1e-3 convergence tolerance.
constexpr double kKinkEps = 1e-9;

inline double sgn(double v) {
  return v > kKinkEps ? 1.0 : v < -kKinkEps ? -1.0 : 0.0;
}

void require_target_field(const void* p, const char* name) {
  if (!p)
    throw invariant_error(std::string("loss target missing field ") + name);
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<float>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += std::abs(a[i] - static_cast<double>(b[i]));
  return sum / static_cast<double>(a.size());
}

}  // namespace

void Decomposition::validate() const {
  std::size_t n = dims.count();
  if (x_hat.size() != n || s_hat.size() != n || m_hat.size() != n)
    throw invariant_error("decomposition field length does not match dims");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x_hat[i]) || !std::isfinite(s_hat[i]) ||
        !std::isfinite(m_hat[i]))
      throw invariant_error("non-finite decomposition value at index " +
                            std::to_string(i));
    if (m_hat[i] < 0.0 || m_hat[i] > 1.0)
      throw invariant_error("mask prediction outside [0,1] at index " +
                            std::to_string(i));
  }
}

void LossWeights::validate() const {
  if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0 || l3 < 0.0)
    throw invariant_error("loss weights must be nonnegative");
  if (alpha < 0.0 || alpha > 1.0)
    throw invariant_error("loss alpha must be in [0, 1]");
}

double loss_l0(const Decomposition& d, const LossTarget& target) {
  require_target_field(target.x_n, "x_n");
  require_same_dims(d.dims, target.x_n->dims(), "loss_l0");
  return mean_abs_diff(d.x_hat, target.x_n->data());
}

double loss_l1(const Decomposition& d, const LossTarget& target) {
  require_target_field(target.s, "s");
  require_same_dims(d.dims, target.s->dims(), "loss_l1");
  return mean_abs_diff(d.s_hat, target.s->data());
}

double soft_dice_loss(const std::vector<double>& m_hat, const BinaryMask& m) {
  if (m_hat.size() != m.data().size())
    throw invariant_error("soft_dice_loss: dims mismatch");
  double inter = 0.0, sum_pred = 0.0, sum_gt = 0.0;
  for (std::size_t i = 0; i < m_hat.size(); ++i) {
    sum_pred += m_hat[i];
    if (m.data()[i]) {
      inter += m_hat[i];
      sum_gt += 1.0;
    }
  }
  return 1.0 - (2.0 * inter + kDiceEps) / (sum_pred + sum_gt + kDiceEps);
}

double recomposition_loss(const Decomposition& d, const LossTarget& target,
                          double alpha) {
  require_target_field(target.x, "x");
  require_same_dims(d.dims, target.x->dims(), "recomposition_loss");
  if (alpha < 0.0 || alpha > 1.0)
    throw invariant_error("recomposition_loss: alpha must be in [0, 1]");
  double sum = 0.0;
  const auto& x = target.x->data();
  for (std::size_t i = 0; i < d.x_hat.size(); ++i) {
    double am = alpha * d.m_hat[i];
    double recon = (1.0 - am) * d.x_hat[i] + am * d.s_hat[i];
    sum += std::abs(recon - static_cast<double>(x[i]));
  }
  return sum / static_cast<double>(d.x_hat.size());
}

LossReport total_loss(const Decomposition& d, const LossTarget& target,
                      const LossWeights& w) {
  w.validate();
  LossReport rep;
  rep.weights = w;
  if (w.l0 > 0.0) rep.l0 = loss_l0(d, target);
  if (w.l1 > 0.0) rep.l1 = loss_l1(d, target);
  if (w.l2 > 0.0) {
    require_target_field(target.m, "m");
    require_same_dims(d.dims, target.m->dims(), "total_loss");
    rep.l2 = soft_dice_loss(d.m_hat, *target.m);
  }
  if (w.l3 > 0.0) rep.l3 = recomposition_loss(d, target, w.alpha);
  rep.total = w.l0 * rep.l0 + w.l1 * rep.l1 + w.l2 * rep.l2 + w.l3 * rep.l3;
  return rep;
}

LossGradients loss_gradients(const Decomposition& d, const LossTarget& target,
                             const LossWeights& w) {
  w.validate();
  std::size_t n = d.dims.count();
  LossGradients g;
  g.x_hat.assign(n, 0.0);
  g.s_hat.assign(n, 0.0);
  g.m_hat.assign(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  if (w.l0 > 0.0) {
    require_target_field(target.x_n, "x_n");
    const auto& x_n = target.x_n->data();
    for (std::size_t i = 0; i < n; ++i)
      g.x_hat[i] += w.l0 * sgn(d.x_hat[i] - x_n[i]) * inv_n;
  }
  if (w.l1 > 0.0) {
    require_target_field(target.s, "s");
    const auto& s = target.s->data();
    for (std::size_t i = 0; i < n; ++i)
      g.s_hat[i] += w.l1 * sgn(d.s_hat[i] - s[i]) * inv_n;
  }
  if (w.l2 > 0.0) {
    require_target_field(target.m, "m");
    const auto& m = target.m->data();
    double inter = 0.0, sum_pred = 0.0, sum_gt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_pred += d.m_hat[i];
      if (m[i]) {
        inter += d.m_hat[i];
        sum_gt += 1.0;
      }
    }
    // quotient rule on 1 - (2I+eps)/(S+eps) with S = sum_pred + sum_gt
    double denom = sum_pred + sum_gt + kDiceEps;
    double numer = 2.0 * inter + kDiceEps;
    double d2 = denom * denom;
    for (std::size_t i = 0; i < n; ++i) {
      double dm = m[i] ? 2.0 : 0.0;
      g.m_hat[i] += w.l2 * (numer - dm * denom) / d2;
    }
  }
  if (w.l3 > 0.0) {
    require_target_field(target.x, "x");
    const auto& x = target.x->data();
    const double a = w.alpha;
    for (std::size_t i = 0; i < n; ++i) {
      double am = a * d.m_hat[i];
      double recon = (1.0 - am) * d.x_hat[i] + am * d.s_hat[i];
      double s3 = sgn(recon - static_cast<double>(x[i]));
      g.x_hat[i] += w.l3 * s3 * (1.0 - am) * inv_n;
      g.s_hat[i] += w.l3 * s3 * am * inv_n;
      g.m_hat[i] += w.l3 * s3 * a * (d.s_hat[i] - d.x_hat[i]) * inv_n;
    }
  }
  return g;
}

}  // namespace tusim
