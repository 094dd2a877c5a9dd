#pragma once

#include <string>
#include <vector>

#include "tusim/loss.hpp"
#include "tusim/rng.hpp"

namespace tusim {

enum class MaskInit { Flat, RandomNormal };  // z=0 (m_hat=0.5) or z ~ N(0,1)

struct SolverConfig {
  double lr_x = 1.0;   // initial line-search steps, per field
  double lr_s = 1.0;
  double lr_z = 1.0;
  int max_iterations = 5000;
  double tolerance = 1e-3;  // stop when total loss <= tolerance
  MaskInit mask_init = MaskInit::Flat;
  LossWeights weights;
  int eval_cadence = 1;  // record history every k-th iteration

  void validate() const;
};

struct IterationStats {
  int iteration = 0;
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0, total = 0.0;
  bool step_skipped = false;  // some field exhausted its line search
};

// m_hat = logistic(z), so the mask prediction stays inside (0,1)
// structurally and the objective remains differentiable in z.
//
// Steps are per-voxel (diagonally preconditioned): the L1 terms have
// uniform-magnitude sign gradients, so a single shared step would be gated
// by the voxels with the smallest residuals. Each voxel's scale grows while
// its gradient sign is stable and shrinks when it flips; a global
// backtracking multiplier on top keeps every accepted step monotone.
struct SolverState {
  int iteration = 0;
  Decomposition decomp;
  std::vector<double> z;
  std::vector<double> step_x, step_s, step_z;        // per-voxel step scales
  std::vector<signed char> sign_x, sign_s, sign_z;   // previous gradient signs
  double current_total = 0.0;
  std::vector<IterationStats> history;
};

SolverState solver_init(const LossTarget& target, const SolverConfig& cfg,
                        Rng& rng);

// One sequential sweep over the three fields; each field takes a
// backtracking step (halve until the total does not increase, <= 20
// halvings, else the field is skipped this iteration).
void solver_step(SolverState& state, const LossTarget& target,
                 const LossWeights& weights);

struct SolveResult {
  Decomposition decomp;
  std::vector<IterationStats> history;
  bool converged = false;
};

SolveResult solve(const LossTarget& target, const SolverConfig& cfg, Rng& rng);

BinaryMask threshold_mask(const Decomposition& d, double threshold = 0.5);

// Central finite differences of the total loss against the analytic
// gradients on a random coordinate subset; returns the worst relative
// error over screened (non-kink) coordinates.
double gradient_check(const LossTarget& target, const Decomposition& point,
                      const LossWeights& weights, double h, Rng& rng,
                      int coords_per_field = 32);

}  // namespace tusim
