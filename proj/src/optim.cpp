#include "proxyad/optim.hpp"

#include <cmath>

namespace proxyad {

Adam::Adam(std::vector<ParamRef> params, const AdamConfig& config)
    : params_(std::move(params)), config_(config) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].value->size(), 0.0);
    v_[i].assign(params_[i].value->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::vector<double>& value = *params_[i].value;
    const std::vector<double>& grad = *params_[i].grad;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * grad[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * grad[j] * grad[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      value[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace proxyad
