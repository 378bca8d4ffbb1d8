#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gast/gradients.hpp"
#include "gast/matrix.hpp"
#include "gast/model.hpp"
#include "gast/plan.hpp"
#include "gast/rng.hpp"

namespace gast {

// A differentiable objective over a stack of parameter matrices, so the
// checks run identically on closed-form cases and on the real adapter loss.
class Objective {
  public:
    virtual ~Objective() = default;
    virtual std::vector<Matrix> params() const = 0;
    virtual double value(const std::vector<Matrix>& p) const = 0;
    virtual std::vector<Matrix> gradient(const std::vector<Matrix>& p) const = 0;
};

// l(p) = sum_i <c_i, p_i>: constant gradient, zero curvature.
class LinearObjective : public Objective {
  public:
    LinearObjective(std::vector<Matrix> coeffs, std::vector<Matrix> start);
    std::vector<Matrix> params() const override { return start_; }
    double value(const std::vector<Matrix>& p) const override;
    std::vector<Matrix> gradient(const std::vector<Matrix>& p) const override;

  private:
    std::vector<Matrix> coeffs_;
    std::vector<Matrix> start_;
};

// l(p) = lambda/2 * |p|^2: gradient lambda*p, curvature exactly lambda.
class QuadraticObjective : public Objective {
  public:
    QuadraticObjective(double lambda, std::vector<Matrix> start);
    std::vector<Matrix> params() const override { return start_; }
    double value(const std::vector<Matrix>& p) const override;
    std::vector<Matrix> gradient(const std::vector<Matrix>& p) const override;

  private:
    double lambda_;
    std::vector<Matrix> start_;
};

// Mean adapter loss on a fixed batch as a function of the adapter factors,
// parameter order [A_0, B_0, A_1, B_1, ...].
class SupportLossObjective : public Objective {
  public:
    SupportLossObjective(Model m, Matrix inputs, Targets targets);
    std::vector<Matrix> params() const override;
    double value(const std::vector<Matrix>& p) const override;
    std::vector<Matrix> gradient(const std::vector<Matrix>& p) const override;

    const Model& model() const { return model_; }

  private:
    Model with_params(const std::vector<Matrix>& p) const;

    Model model_;
    Matrix inputs_;
    Targets targets_;
};

struct SmoothnessEstimate {
    double lhat = 0.0; // max observed gradient-difference ratio
    std::size_t probes = 0;
    double radius = 0.0;
};

// Probes pairs (p, p + radius*unit direction) and takes the worst ratio
// |grad(p') - grad(p)| / |p' - p| as the Lipschitz estimate.
SmoothnessEstimate estimate_smoothness(const Objective& obj, std::size_t probes, double radius,
                                       const Rng& rng);

struct TheoryReport {
    std::string check;
    bool pass = false;
    bool deterministic = true; // statistical rates carry false and do not gate exit codes
    std::vector<std::pair<std::string, double>> measured;
    double tolerance = 0.0;
    std::string detail;
};

// Measures the first-order remainder R(eta) = |l(p - eta*d) - l(p) +
// eta*<grad, d>| and the halving ratios R(eta)/R(eta/2). Passes when every
// ratio sits in [3.5, 4.5] or the remainders vanish (linear objectives).
TheoryReport check_total_differential(const Objective& obj, const std::vector<Matrix>& direction,
                                      std::span<const double> etas);

// One-step descent bound: draws `trials` selection plans at a fixed model
// state, applies Delta' = Delta - eta*g for the selected-mean g, and checks
// l(Delta') <= l(Delta) - eta*<grad l, g> + (lhat/2)*eta^2*|g|^2 whenever the
// step-size guard eta <= <grad l, g>/(lhat*|g|^2) holds. Also reports the
// fraction of trials that strictly decreased the support loss.
TheoryReport check_descent(const Model& m, const Matrix& batch_x, const Targets& batch_y,
                           const Matrix& support_x, const Targets& support_y,
                           const Strategy& strategy, double eta, std::size_t trials,
                           const Rng& rng);

// Row-wise hybrid-alignment inequality. Deterministic branch: mean of
// positive scores >= mean of all scores for every row with a nonempty
// positive set. Statistical branch: the positive mean beats a uniformly
// drawn half-size fixed subset's mean in >= 95% of trials.
TheoryReport check_hybrid_inequality(const Matrix& score_rows, std::size_t fixed_subset_trials,
                                     const Rng& rng);

// Central differences over every adapter parameter; intentionally slow,
// used as the independent oracle for the analytic gradients.
std::vector<LayerGrads> finite_difference_oracle(const Model& m, const Matrix& inputs,
                                                 const Targets& targets, double h);

// Randomized analytic-vs-finite-difference sweep over `pairs` fresh
// (model, sample) draws. inject_bias shifts the analytic gradients before
// comparison (fault-injection hook; 0 disables).
TheoryReport run_grad_check(std::size_t pairs, const Rng& rng, double inject_bias = 0.0);

} // namespace gast
