#pragma once

#include <cstdint>
#include <vector>

#include "denoise/tensor.hpp"

namespace denoise::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are shaped like their parameters.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  /// Per-parameter learning rate override (0 freezes the parameter).
  void set_lr(std::size_t param_index, double lr);

  /// Applies one update from the parameters' accumulated gradients.
  /// Throws MissingGradient if any parameter has none.
  void step();
  void zero_grad();

  std::int64_t steps() const { return step_; }
  const std::vector<Tensor>& params() const { return params_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Tensor> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::vector<double> lr_;
  AdamOptions options_;
  std::int64_t step_ = 0;
};

}  // namespace denoise::ad
