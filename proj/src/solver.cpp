#include "tusim/solver.hpp"

#include <algorithm>
#include <cmath>

#include "tusim/errors.hpp"

namespace tusim {

namespace {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr int kMaxHalvings = 20;
constexpr double kEtaGrow = 1.2;
constexpr double kEtaShrink = 0.5;
constexpr double kEtaMax = 1e6;
constexpr double kEtaMin = 1e-300;
// |z| <= 36 keeps logistic(z) strictly inside (0,1) in double precision.
constexpr double kZClamp = 36.0;

}  // namespace

void SolverConfig::validate() const {
  if (!(lr_x > 0.0) || !(lr_s > 0.0) || !(lr_z > 0.0))
    throw config_error("solver learning rates must be > 0");
  if (max_iterations < 1)
    throw config_error("solver max iterations must be >= 1");
  if (tolerance < 0.0) throw config_error("solver tolerance must be >= 0");
  if (eval_cadence < 1) throw config_error("solver eval cadence must be >= 1");
  weights.validate();
}

SolverState solver_init(const LossTarget& target, const SolverConfig& cfg,
                        Rng& rng) {
  cfg.validate();
  if (!target.x) throw invariant_error("solver target must carry x");

  SolverState state;
  const auto& x = target.x->data();
  std::size_t n = x.size();
  state.decomp.dims = target.x->dims();
  state.decomp.x_hat.assign(x.begin(), x.end());
  state.decomp.s_hat.assign(x.begin(), x.end());
  state.z.assign(n, 0.0);
  if (cfg.mask_init == MaskInit::RandomNormal)
    for (auto& z : state.z) z = rng.normal();
  state.decomp.m_hat.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    state.decomp.m_hat[i] = logistic(state.z[i]);
  state.step_x.assign(n, cfg.lr_x);
  state.step_s.assign(n, cfg.lr_s);
  state.step_z.assign(n, cfg.lr_z);
  state.sign_x.assign(n, 0);
  state.sign_s.assign(n, 0);
  state.sign_z.assign(n, 0);
  state.current_total = total_loss(state.decomp, target, cfg.weights).total;
  return state;
}

namespace {

enum class Field { X, S, Z };

// Diagonally preconditioned descent step on one field with a global
// backtracking multiplier. Per-voxel step scales adapt to gradient-sign
// stability (grow while stable, halve on a flip), which decouples voxels
// whose L1 residuals live on very different scales. Returns false when 20
// halvings never produced a non-increasing total; the field is then left
// unchanged and every per-voxel scale is halved.
bool update_field(SolverState& state, const LossTarget& target,
                  const LossWeights& weights, Field field) {
  auto& d = state.decomp;
  std::size_t n = d.dims.count();
  LossGradients g = loss_gradients(d, target, weights);

  std::vector<double>* primal = nullptr;
  std::vector<double> grad;
  std::vector<double>* eta = nullptr;
  std::vector<signed char>* psign = nullptr;
  switch (field) {
    case Field::X:
      primal = &d.x_hat;
      grad = std::move(g.x_hat);
      eta = &state.step_x;
      psign = &state.sign_x;
      break;
    case Field::S:
      primal = &d.s_hat;
      grad = std::move(g.s_hat);
      eta = &state.step_s;
      psign = &state.sign_s;
      break;
    case Field::Z:
      primal = &state.z;
      grad.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        grad[i] = g.m_hat[i] * d.m_hat[i] * (1.0 - d.m_hat[i]);
      eta = &state.step_z;
      psign = &state.sign_z;
      break;
  }

  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    signed char s = grad[i] > 0.0 ? 1 : grad[i] < 0.0 ? -1 : 0;
    if (s != 0) {
      any = true;
      if ((*psign)[i] != 0) {
        double& e = (*eta)[i];
        e = s == (*psign)[i] ? std::min(e * kEtaGrow, kEtaMax)
                             : std::max(e * kEtaShrink, kEtaMin);
      }
    }
    (*psign)[i] = s;
  }
  if (!any) return true;  // already stationary for this field

  std::vector<double> saved = *primal;
  double lambda = 1.0;
  for (int halving = 0; halving <= kMaxHalvings; ++halving) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = saved[i];
      if ((*psign)[i] != 0) v -= lambda * (*eta)[i] * (*psign)[i];
      if (field == Field::Z) v = std::clamp(v, -kZClamp, kZClamp);
      (*primal)[i] = v;
    }
    if (field == Field::Z)
      for (std::size_t i = 0; i < n; ++i) d.m_hat[i] = logistic((*primal)[i]);
    double total = total_loss(d, target, weights).total;
    if (total <= state.current_total) {
      state.current_total = total;
      return true;
    }
    lambda *= 0.5;
  }
  // line search exhausted: restore and shrink all per-voxel scales
  *primal = saved;
  if (field == Field::Z)
    for (std::size_t i = 0; i < n; ++i) d.m_hat[i] = logistic((*primal)[i]);
  for (std::size_t i = 0; i < n; ++i)
    (*eta)[i] = std::max((*eta)[i] * kEtaShrink, kEtaMin);
  return false;
}

}  // namespace

void solver_step(SolverState& state, const LossTarget& target,
                 const LossWeights& weights) {
  bool skipped = false;
  skipped |= !update_field(state, target, weights, Field::X);
  skipped |= !update_field(state, target, weights, Field::S);
  skipped |= !update_field(state, target, weights, Field::Z);
  ++state.iteration;

  LossReport rep = total_loss(state.decomp, target, weights);
  state.current_total = rep.total;
  IterationStats stats;
  stats.iteration = state.iteration;
  stats.l0 = rep.l0;
  stats.l1 = rep.l1;
  stats.l2 = rep.l2;
  stats.l3 = rep.l3;
  stats.total = rep.total;
  stats.step_skipped = skipped;
  state.history.push_back(stats);
}

SolveResult solve(const LossTarget& target, const SolverConfig& cfg, Rng& rng) {
  SolverState state = solver_init(target, cfg, rng);
  while (state.iteration < cfg.max_iterations &&
         state.current_total > cfg.tolerance) {
    solver_step(state, target, cfg.weights);
  }
  if (cfg.eval_cadence > 1 && !state.history.empty()) {
    std::vector<IterationStats> kept;
    for (const auto& st : state.history)
      if (st.iteration % cfg.eval_cadence == 0 ||
          st.iteration == state.iteration)
        kept.push_back(st);
    state.history = std::move(kept);
  }
  SolveResult res;
  res.converged = state.current_total <= cfg.tolerance;
  res.decomp = std::move(state.decomp);
  res.history = std::move(state.history);
  return res;
}

BinaryMask threshold_mask(const Decomposition& d, double threshold) {
  std::vector<std::uint8_t> data(d.m_hat.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = d.m_hat[i] >= threshold ? 1 : 0;
  return BinaryMask(d.dims, std::move(data));
}

double gradient_check(const LossTarget& target, const Decomposition& point,
                      const LossWeights& weights, double h, Rng& rng,
                      int coords_per_field) {
  if (!(h > 0.0)) throw invariant_error("gradient_check: h must be > 0");
  LossGradients g = loss_gradients(point, target, weights);
  Decomposition work = point;
  std::size_t n = point.dims.count();
  const double screen = std::max(1e-6, 10.0 * h);

  auto recon_residual = [&](std::size_t i) {
    double am = weights.alpha * work.m_hat[i];
    return ((1.0 - am) * work.x_hat[i] + am * work.s_hat[i]) -
           static_cast<double>(target.x->data()[i]);
  };

  double worst = 0.0;
  for (int field = 0; field < 3; ++field) {
    std::vector<double>* vec = field == 0   ? &work.x_hat
                               : field == 1 ? &work.s_hat
                                            : &work.m_hat;
    const std::vector<double>& analytic =
        field == 0 ? g.x_hat : field == 1 ? g.s_hat : g.m_hat;
    for (int c = 0; c < coords_per_field; ++c) {
      std::size_t i = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
      // screen L1 kinks: all absolute residuals the perturbation can cross
      // must clear the finite-difference window
      if (weights.l0 > 0.0 && field == 0 &&
          std::abs(work.x_hat[i] - target.x_n->data()[i]) < screen)
        continue;
      if (weights.l1 > 0.0 && field == 1 &&
          std::abs(work.s_hat[i] - target.s->data()[i]) < screen)
        continue;
      if (weights.l3 > 0.0 && std::abs(recon_residual(i)) < screen) continue;
      if (field == 2 &&
          (work.m_hat[i] - h < 0.0 || work.m_hat[i] + h > 1.0))
        continue;

      double saved = (*vec)[i];
      (*vec)[i] = saved + h;
      double fp = total_loss(work, target, weights).total;
      (*vec)[i] = saved - h;
      double fm = total_loss(work, target, weights).total;
      (*vec)[i] = saved;

      double fd = (fp - fm) / (2.0 * h);
      double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-10});
      worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
  }
  return worst;
}

}  // namespace tusim
