#pragma once

#include <vector>

#include "tusim/compose.hpp"
#include "tusim/volume.hpp"

namespace tusim {

// Prediction triple. Double storage: the solver and the finite-difference
// checks need more headroom than float32.
struct Decomposition {
  Dims dims;
  std::vector<double> x_hat;
  std::vector<double> s_hat;
  std::vector<double> m_hat;  // per-voxel mask prediction in [0, 1]

  void validate() const;
};

struct LossWeights {
  double l0 = 1.0, l1 = 1.0, l2 = 1.0, l3 = 1.0;
  double alpha = 1.0;  // used by the recomposition term

  void validate() const;
  // lambda0 = lambda1 = lambda2 = 0, alpha = 1
  static LossWeights real_data(double lambda3 = 1.0) {
    return {0.0, 0.0, 0.0, lambda3, 1.0};
  }
};

// What the losses compare against. Supervised mode carries the full tuple;
// real-data mode carries only x.
struct LossTarget {
  const Volume* x = nullptr;
  const Volume* x_n = nullptr;
  const Volume* s = nullptr;
  const BinaryMask* m = nullptr;

  static LossTarget from_sample(const SyntheticSample& sample) {
    return {&sample.x, &sample.x_n, &sample.s, &sample.m};
  }
  static LossTarget real(const Volume& x) { return {&x, nullptr, nullptr, nullptr}; }
};

struct LossReport {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  double total = 0.0;
  LossWeights weights;
};

struct LossGradients {
  std::vector<double> x_hat, s_hat, m_hat;
};

constexpr double kDiceEps = 1e-6;

// L0 = mean |x_hat - x_n|
double loss_l0(const Decomposition& d, const LossTarget& target);
// L1 = mean |s_hat - s|
double loss_l1(const Decomposition& d, const LossTarget& target);
// L2 = 1 - (2*sum(m_hat*m) + eps) / (sum(m_hat) + sum(m) + eps)
double soft_dice_loss(const std::vector<double>& m_hat, const BinaryMask& m);
// L3 = mean |((1 - a*m_hat)*x_hat + a*m_hat*s_hat) - x|
double recomposition_loss(const Decomposition& d, const LossTarget& target,
                          double alpha);

LossReport total_loss(const Decomposition& d, const LossTarget& target,
                      const LossWeights& w);

// Analytic gradients of the weighted total w.r.t. all three fields.
LossGradients loss_gradients(const Decomposition& d, const LossTarget& target,
                             const LossWeights& w);

}  // namespace tusim
