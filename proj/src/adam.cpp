#include "denoise/adam.hpp"

#include <cmath>
#include <string>

#include "denoise/errors.hpp"

namespace denoise::ad {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    if (!p.is_leaf() || !p.requires_grad()) fail(ErrorCode::InvalidConfig, "Adam parameters must be trainable leaves");
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    lr_.push_back(options_.lr);
  }
}

void Adam::set_lr(std::size_t param_index, double lr) { lr_.at(param_index) = lr; }

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) fail(ErrorCode::MissingGradient, "parameter " + std::to_string(i) + " has no gradient");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Matrix& g = params_[i].grad();
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    if (lr_[i] == 0.0) continue;
    auto update = (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + options_.eps);
    params_[i].leaf_value().array() -= lr_[i] * update;
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace denoise::ad
