#include "dualqp/inner_fom.hpp"

#include <algorithm>

namespace dualqp {

MomentumRule::MomentumRule(MomentumVariant variant, double L, double sigma)
    : variant_(variant) {
  if (variant == MomentumVariant::kFgmSigma) {
    if (!(sigma > 0.0) || !(L > 0.0)) {
      throw DimensionError("FGM_sigma needs sigma > 0 and L > 0");
    }
    const double sl = std::sqrt(L);
    const double ss = std::sqrt(std::min(sigma, L));
    fixed_beta_ = (sl - ss) / (sl + ss);
  }
}

double MomentumRule::beta() const {
  switch (variant_) {
    case MomentumVariant::kGm:
      return 0.0;
    case MomentumVariant::kFgm:
      return theta_.beta();
    case MomentumVariant::kFgmSigma:
      return fixed_beta_;
  }
  return 0.0;
}

void MomentumRule::advance() {
  if (variant_ == MomentumVariant::kFgm) theta_.advance();
}

LagrangianSubproblem::LagrangianSubproblem(const QpProblem& prob, double rho)
    : prob_(&prob),
      rho_(rho),
      penalized_rows_(rho > 0.0 && prob.has_nonpos_rows()),
      mu_(prob.p(), 0.0),
      c_(prob.n(), 0.0),
      w_(prob.p(), 0.0),
      t_(prob.n(), 0.0) {
  if (rho < 0.0) throw DimensionError("rho must be nonnegative");
  if (rho > 0.0 && !penalized_rows_ && prob.p() > 0) {
    hessian_ = std::make_shared<const DenseMatrix>(add_scaled_gram(prob.Q(), prob.G(), rho));
  }
  set_multiplier(mu_, nullptr);
}

void LagrangianSubproblem::set_multiplier(std::span<const double> mu,
                                          MatvecCounter* counter) {
  const QpProblem& p = *prob_;
  if (mu.size() != p.p()) throw DimensionError("multiplier length must be p");
  if (mu.data() != mu_.data()) mu_.assign(mu.begin(), mu.end());
  if (penalized_rows_) return;
  // c = q + G'(mu + rho g)
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = mu_[i] + rho_ * p.g()[i];
  matvec_transposed_into(p.G(), w_, c_, counter);
  for (std::size_t j = 0; j < c_.size(); ++j) c_[j] += p.q()[j];
}

void LagrangianSubproblem::gradient(std::span<const double> y, std::span<double> out,
                                    MatvecCounter* counter) const {
  const QpProblem& p = *prob_;
  if (!penalized_rows_) {
    matvec_into(hessian_ ? *hessian_ : p.Q(), y, out, counter);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += c_[j];
    return;
  }
  matvec_into(p.Q(), y, out, counter);
  matvec_into(p.G(), y, w_, counter);
  const auto& cones = p.cones();
  for (std::size_t i = 0; i < w_.size(); ++i) {
    // rho * (w - P_K(w)), w = Gy + g + mu / rho
    const double w = w_[i] + p.g()[i] + mu_[i] / rho_;
    w_[i] = rho_ * (cones[i] == ConeKind::kZero ? w : std::max(w, 0.0));
  }
  matvec_transposed_into(p.G(), w_, t_, counter);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += p.q()[j] + t_[j];
}

double LagrangianSubproblem::value(std::span<const double> u) const {
  return lagrangian_value(u, mu_, *prob_, rho_);
}

std::uint64_t LagrangianSubproblem::matvecs_per_iteration() const {
  return penalized_rows_ ? 3 : 1;
}

std::uint64_t LagrangianSubproblem::matvecs_per_solve() const {
  return !penalized_rows_ && prob_->p() > 0 ? 1 : 0;
}

}  // namespace dualqp
