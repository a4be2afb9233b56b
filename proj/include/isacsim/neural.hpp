#ifndef ISACSIM_NEURAL_HPP
#define ISACSIM_NEURAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "isacsim/rng.hpp"
#include "isacsim/tensor.hpp"

namespace isacsim {

// Ordered collection of named parameter tensors. Declaration order is part
// of the contract: optimizers walk it positionally and checkpoints store the
// flat concatenation in this order.
class ParamSet {
 public:
  struct Item {
    std::string name;
    Tensor value;
  };

  Tensor& add(const std::string& name, std::vector<int> shape);
  size_t count() const { return items_.size(); }
  Item& item(size_t i) { return items_[i]; }
  const Item& item(size_t i) const { return items_[i]; }
  const Tensor* find(const std::string& name) const;

  int64_t total_size() const;
  bool same_layout(const ParamSet& other) const;

  // Same names and shapes, all values zero.
  ParamSet clone_shape() const;

  void append_flat(std::vector<double>& out) const;
  // Reads total_size() doubles; throws std::invalid_argument on shortfall.
  size_t read_flat(const double* data, size_t available);

 private:
  std::vector<Item> items_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction; one instance mirrors one ParamSet.
class AdamState {
 public:
  AdamState(const ParamSet& params, AdamConfig cfg);

  // One descent step along `grads` (callers negate for ascent).
  void step(ParamSet& params, const ParamSet& grads);

  const AdamConfig& config() const { return cfg_; }
  int64_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  ParamSet m_;
  ParamSet v_;
  int64_t t_ = 0;
};

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(ParamSet& target, const ParamSet& online, double tau);

// Architecture of one actor or critic: two convolutional branches (beamspace
// tensor and position spectrum), flattened and concatenated with the action
// vector for critics, then a fully connected trunk. All convolutions are 3x3,
// stride 2, padding 1. An empty conv_filters list feeds the raw flattened
// inputs to the trunk.
struct NetSpec {
  int sh_c = 0, sh_h = 0, sh_w = 0;
  int sp_c = 3, sp_h = 0, sp_w = 0;
  std::vector<int> conv_filters;
  std::vector<int> hidden;
  int action_dim = 0;  // 0 on the actor
  int out_dim = 1;
  bool sigmoid_head = false;
  double head_init = 1e-3;  // uniform half-width of the output layer init

  static int conv_out(int extent) { return (extent - 1) / 2 + 1; }
  int branch_feature_dim(int c, int h, int w) const;
  int feature_dim() const;  // both branches plus the action block
  std::string describe() const;

  void validate() const;
};

// Feed-forward network with cached activations: forward() retains what
// backward() needs, so each backward() must follow the forward() whose
// gradient it propagates.
class StateActionNet {
 public:
  StateActionNet(const NetSpec& spec, Rng init_rng);

  const NetSpec& spec() const { return spec_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // sh: [N, sh_c, sh_h, sh_w]; sp: [N, sp_c, sp_h, sp_w]; action: [N,
  // action_dim] (required iff action_dim > 0). Returns [N, out_dim].
  Tensor forward(const Tensor& sh, const Tensor& sp, const Tensor* action);

  // grad_out: [N, out_dim] upstream gradient. Returns parameter gradients in
  // the params() layout; optionally emits d(output)/d(action) into
  // action_grad ([N, action_dim]).
  ParamSet backward(const Tensor& grad_out, Tensor* action_grad = nullptr);

 private:
  struct ConvDims {
    int in_c, in_h, in_w;
    int out_c, out_h, out_w;
    size_t w_idx, b_idx;
  };
  struct DenseDims {
    int in_f, out_f;
    size_t w_idx, b_idx;
  };
  struct BranchCache {
    std::vector<Tensor> cols;     // im2col buffers, [N, C*9, OH*OW]
    std::vector<Tensor> outputs;  // post-ReLU outputs
  };

  void build_branch(const std::string& prefix, int c, int h, int w,
                    std::vector<ConvDims>& dims);
  void init_params(Rng& rng);
  Tensor run_branch(const std::vector<ConvDims>& dims, const Tensor& input,
                    BranchCache& cache) const;
  Tensor branch_backward(const std::vector<ConvDims>& dims, const BranchCache& cache,
                         const Tensor& grad_flat, ParamSet& grads,
                         bool need_input_grad) const;

  NetSpec spec_;
  ParamSet params_;
  std::vector<ConvDims> sh_dims_;
  std::vector<ConvDims> sp_dims_;
  std::vector<DenseDims> trunk_dims_;
  DenseDims head_dims_{};

  // Forward cache.
  int batch_ = 0;
  BranchCache sh_cache_;
  BranchCache sp_cache_;
  Tensor features_;                // [N, feature_dim]
  std::vector<Tensor> trunk_in_;   // input of each trunk layer
  std::vector<Tensor> trunk_out_;  // post-ReLU outputs
  Tensor head_out_;                // [N, out_dim] final output
};

}  // namespace isacsim

#endif  // ISACSIM_NEURAL_HPP
