#include "isacsim/neural.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace isacsim {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

constexpr int kK = 3;       // kernel side
constexpr int kStride = 2;
constexpr int kPad = 1;

// Gathers one sample's padded 3x3 patches into a [C*9, OH*OW] matrix.
void im2col(const double* x, int c, int h, int w, int oh, int ow, double* cols) {
  const int patch = oh * ow;
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = x + static_cast<int64_t>(ch) * h * w;
    for (int ki = 0; ki < kK; ++ki) {
      for (int kj = 0; kj < kK; ++kj) {
        double* row = cols + (static_cast<int64_t>(ch) * kK * kK + ki * kK + kj) * patch;
        for (int i = 0; i < oh; ++i) {
          const int ih = i * kStride - kPad + ki;
          for (int j = 0; j < ow; ++j) {
            const int iw = j * kStride - kPad + kj;
            row[i * ow + j] = (ih >= 0 && ih < h && iw >= 0 && iw < w)
                                  ? plane[ih * w + iw]
                                  : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of a [C*9, OH*OW] gradient back onto the [C, H, W] input.
void col2im(const double* cols, int c, int h, int w, int oh, int ow, double* dx) {
  const int patch = oh * ow;
  for (int ch = 0; ch < c; ++ch) {
    double* plane = dx + static_cast<int64_t>(ch) * h * w;
    for (int ki = 0; ki < kK; ++ki) {
      for (int kj = 0; kj < kK; ++kj) {
        const double* row =
            cols + (static_cast<int64_t>(ch) * kK * kK + ki * kK + kj) * patch;
        for (int i = 0; i < oh; ++i) {
          const int ih = i * kStride - kPad + ki;
          if (ih < 0 || ih >= h) continue;
          for (int j = 0; j < ow; ++j) {
            const int iw = j * kStride - kPad + kj;
            if (iw < 0 || iw >= w) continue;
            plane[ih * w + iw] += row[i * ow + j];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor& ParamSet::add(const std::string& name, std::vector<int> shape) {
  for (const Item& it : items_) {
    if (it.name == name) throw std::invalid_argument("ParamSet: duplicate name " + name);
  }
  items_.push_back({name, Tensor(std::move(shape))});
  return items_.back().value;
}

const Tensor* ParamSet::find(const std::string& name) const {
  for (const Item& it : items_) {
    if (it.name == name) return &it.value;
  }
  return nullptr;
}

int64_t ParamSet::total_size() const {
  int64_t n = 0;
  for (const Item& it : items_) n += it.value.size();
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (items_.size() != other.items_.size()) return false;
  for (size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].name != other.items_[i].name ||
        items_[i].value.shape() != other.items_[i].value.shape()) {
      return false;
    }
  }
  return true;
}

ParamSet ParamSet::clone_shape() const {
  ParamSet out;
  for (const Item& it : items_) out.add(it.name, it.value.shape());
  return out;
}

void ParamSet::append_flat(std::vector<double>& out) const {
  for (const Item& it : items_) {
    out.insert(out.end(), it.value.data(), it.value.data() + it.value.size());
  }
}

size_t ParamSet::read_flat(const double* data, size_t available) {
  const int64_t need = total_size();
  if (static_cast<int64_t>(available) < need) {
    throw std::invalid_argument("ParamSet: flat buffer too short");
  }
  size_t off = 0;
  for (Item& it : items_) {
    std::copy(data + off, data + off + it.value.size(), it.value.data());
    off += static_cast<size_t>(it.value.size());
  }
  return off;
}

AdamState::AdamState(const ParamSet& params, AdamConfig cfg)
    : cfg_(cfg), m_(params.clone_shape()), v_(params.clone_shape()) {}

void AdamState::step(ParamSet& params, const ParamSet& grads) {
  if (!params.same_layout(m_) || !grads.same_layout(m_)) {
    throw std::invalid_argument("AdamState: parameter layout mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.count(); ++i) {
    double* p = params.item(i).value.data();
    const double* g = grads.item(i).value.data();
    double* m = m_.item(i).value.data();
    double* v = v_.item(i).value.data();
    const int64_t n = params.item(i).value.size();
    for (int64_t j = 0; j < n; ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void soft_update(ParamSet& target, const ParamSet& online, double tau) {
  if (!target.same_layout(online)) {
    throw std::invalid_argument("soft_update: parameter layout mismatch");
  }
  for (size_t i = 0; i < target.count(); ++i) {
    double* t = target.item(i).value.data();
    const double* o = online.item(i).value.data();
    const int64_t n = target.item(i).value.size();
    for (int64_t j = 0; j < n; ++j) t[j] = tau * o[j] + (1.0 - tau) * t[j];
  }
}

int NetSpec::branch_feature_dim(int c, int h, int w) const {
  if (conv_filters.empty()) return c * h * w;
  int out_c = c;
  for (int f : conv_filters) {
    out_c = f;
    h = conv_out(h);
    w = conv_out(w);
  }
  return out_c * h * w;
}

int NetSpec::feature_dim() const {
  return branch_feature_dim(sh_c, sh_h, sh_w) + branch_feature_dim(sp_c, sp_h, sp_w) +
         action_dim;
}

void NetSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("NetSpec: ") + what);
  };
  require(sh_c >= 1 && sh_h >= 1 && sh_w >= 1, "s_h input dims must be positive");
  require(sp_c >= 1 && sp_h >= 1 && sp_w >= 1, "s_p input dims must be positive");
  require(action_dim >= 0, "action_dim must be >= 0");
  require(out_dim >= 1, "out_dim must be >= 1");
  require(head_init > 0.0, "head_init must be positive");
  for (int f : conv_filters) require(f >= 1, "conv filter counts must be positive");
  for (int hdim : hidden) require(hdim >= 1, "hidden sizes must be positive");
}

std::string NetSpec::describe() const {
  std::ostringstream os;
  os << "sh:" << sh_c << "x" << sh_h << "x" << sh_w << ";sp:" << sp_c << "x" << sp_h
     << "x" << sp_w << ";conv:";
  for (size_t i = 0; i < conv_filters.size(); ++i) {
    os << (i ? "," : "") << conv_filters[i];
  }
  os << ";hidden:";
  for (size_t i = 0; i < hidden.size(); ++i) os << (i ? "," : "") << hidden[i];
  os << ";action:" << action_dim << ";out:" << out_dim
     << ";head:" << (sigmoid_head ? "sigmoid" : "linear");
  return os.str();
}

void StateActionNet::build_branch(const std::string& prefix, int c, int h, int w,
                                  std::vector<ConvDims>& dims) {
  int in_c = c, in_h = h, in_w = w;
  for (size_t i = 0; i < spec_.conv_filters.size(); ++i) {
    ConvDims d;
    d.in_c = in_c;
    d.in_h = in_h;
    d.in_w = in_w;
    d.out_c = spec_.conv_filters[i];
    d.out_h = NetSpec::conv_out(in_h);
    d.out_w = NetSpec::conv_out(in_w);
    const std::string base = prefix + std::to_string(i);
    params_.add(base + ".weight", {d.out_c, d.in_c * kK * kK});
    params_.add(base + ".bias", {d.out_c});
    d.w_idx = params_.count() - 2;
    d.b_idx = params_.count() - 1;
    dims.push_back(d);
    in_c = d.out_c;
    in_h = d.out_h;
    in_w = d.out_w;
  }
}

StateActionNet::StateActionNet(const NetSpec& spec, Rng init_rng) : spec_(spec) {
  spec_.validate();
  build_branch("conv_sh_", spec_.sh_c, spec_.sh_h, spec_.sh_w, sh_dims_);
  build_branch("conv_sp_", spec_.sp_c, spec_.sp_h, spec_.sp_w, sp_dims_);

  int in_f = spec_.feature_dim();
  for (size_t i = 0; i < spec_.hidden.size(); ++i) {
    DenseDims d;
    d.in_f = in_f;
    d.out_f = spec_.hidden[i];
    const std::string base = "trunk_" + std::to_string(i);
    params_.add(base + ".weight", {d.out_f, d.in_f});
    params_.add(base + ".bias", {d.out_f});
    d.w_idx = params_.count() - 2;
    d.b_idx = params_.count() - 1;
    trunk_dims_.push_back(d);
    in_f = d.out_f;
  }
  head_dims_.in_f = in_f;
  head_dims_.out_f = spec_.out_dim;
  params_.add("head.weight", {spec_.out_dim, in_f});
  params_.add("head.bias", {spec_.out_dim});
  head_dims_.w_idx = params_.count() - 2;
  head_dims_.b_idx = params_.count() - 1;

  init_params(init_rng);
}

void StateActionNet::init_params(Rng& rng) {
  // Fan-in uniform init everywhere; the output layer starts near zero so the
  // first policy/value estimates are small.
  auto fill_uniform = [&rng](Tensor& t, double half_width) {
    for (int64_t i = 0; i < t.size(); ++i) {
      t[i] = rng.uniform(-half_width, half_width);
    }
  };
  auto layer_init = [&](size_t w_idx, size_t b_idx, int fan_in) {
    const double hw = 1.0 / std::sqrt(static_cast<double>(fan_in));
    fill_uniform(params_.item(w_idx).value, hw);
    fill_uniform(params_.item(b_idx).value, hw);
  };
  for (const ConvDims& d : sh_dims_) layer_init(d.w_idx, d.b_idx, d.in_c * kK * kK);
  for (const ConvDims& d : sp_dims_) layer_init(d.w_idx, d.b_idx, d.in_c * kK * kK);
  for (const DenseDims& d : trunk_dims_) layer_init(d.w_idx, d.b_idx, d.in_f);
  fill_uniform(params_.item(head_dims_.w_idx).value, spec_.head_init);
  fill_uniform(params_.item(head_dims_.b_idx).value, spec_.head_init);
}

Tensor StateActionNet::run_branch(const std::vector<ConvDims>& dims, const Tensor& input,
                                  BranchCache& cache) const {
  cache.cols.clear();
  cache.outputs.clear();

  Tensor x = input;
  const int n = input.dim(0);
  for (const ConvDims& d : dims) {
    const int patch = d.out_h * d.out_w;
    const int crows = d.in_c * kK * kK;
    Tensor cols({n, crows, patch});
    Tensor out({n, d.out_c, d.out_h, d.out_w});

    ConstMapMat w(params_.item(d.w_idx).value.data(), d.out_c, crows);
    const Tensor& bias = params_.item(d.b_idx).value;

    for (int s = 0; s < n; ++s) {
      const double* xin = x.data() + static_cast<int64_t>(s) * d.in_c * d.in_h * d.in_w;
      double* colp = cols.data() + static_cast<int64_t>(s) * crows * patch;
      im2col(xin, d.in_c, d.in_h, d.in_w, d.out_h, d.out_w, colp);

      MapMat dst(out.data() + static_cast<int64_t>(s) * d.out_c * patch, d.out_c, patch);
      ConstMapMat colm(colp, crows, patch);
      dst.noalias() = w * colm;
      for (int f = 0; f < d.out_c; ++f) dst.row(f).array() += bias[f];
    }
    // ReLU; the stored output doubles as the activation mask.
    for (int64_t i = 0; i < out.size(); ++i) {
      if (out[i] < 0.0) out[i] = 0.0;
    }
    cache.cols.push_back(std::move(cols));
    cache.outputs.push_back(out);
    x = std::move(out);
  }
  return x;
}

Tensor StateActionNet::forward(const Tensor& sh, const Tensor& sp, const Tensor* action) {
  if (sh.rank() != 4 || sp.rank() != 4 || sh.dim(0) != sp.dim(0)) {
    throw std::invalid_argument("StateActionNet: bad input batch shapes");
  }
  if (sh.dim(1) != spec_.sh_c || sh.dim(2) != spec_.sh_h || sh.dim(3) != spec_.sh_w ||
      sp.dim(1) != spec_.sp_c || sp.dim(2) != spec_.sp_h || sp.dim(3) != spec_.sp_w) {
    throw std::invalid_argument("StateActionNet: input dims do not match the architecture");
  }
  if (spec_.action_dim > 0) {
    if (action == nullptr || action->rank() != 2 || action->dim(0) != sh.dim(0) ||
        action->dim(1) != spec_.action_dim) {
      throw std::invalid_argument("StateActionNet: action input missing or mis-shaped");
    }
  } else if (action != nullptr) {
    throw std::invalid_argument("StateActionNet: unexpected action input");
  }

  batch_ = sh.dim(0);
  const Tensor sh_feat = run_branch(sh_dims_, sh, sh_cache_);
  const Tensor sp_feat = run_branch(sp_dims_, sp, sp_cache_);

  const int sh_f = spec_.branch_feature_dim(spec_.sh_c, spec_.sh_h, spec_.sh_w);
  const int sp_f = spec_.branch_feature_dim(spec_.sp_c, spec_.sp_h, spec_.sp_w);

  features_ = Tensor({batch_, spec_.feature_dim()});
  for (int s = 0; s < batch_; ++s) {
    double* row = features_.data() + static_cast<int64_t>(s) * spec_.feature_dim();
    const double* a = sh_feat.data() + static_cast<int64_t>(s) * sh_f;
    std::copy(a, a + sh_f, row);
    const double* b = sp_feat.data() + static_cast<int64_t>(s) * sp_f;
    std::copy(b, b + sp_f, row + sh_f);
    if (spec_.action_dim > 0) {
      const double* act = action->data() + static_cast<int64_t>(s) * spec_.action_dim;
      std::copy(act, act + spec_.action_dim, row + sh_f + sp_f);
    }
  }

  trunk_in_.clear();
  trunk_out_.clear();
  Tensor x = features_;
  for (const DenseDims& d : trunk_dims_) {
    Tensor out({batch_, d.out_f});
    {
      ConstMapMat xin(x.data(), batch_, d.in_f);
      ConstMapMat w(params_.item(d.w_idx).value.data(), d.out_f, d.in_f);
      MapMat dst(out.data(), batch_, d.out_f);
      dst.noalias() = xin * w.transpose();
      const Tensor& bias = params_.item(d.b_idx).value;
      for (int s = 0; s < batch_; ++s) {
        for (int f = 0; f < d.out_f; ++f) out.at2(s, f) += bias[f];
      }
    }
    for (int64_t i = 0; i < out.size(); ++i) {
      if (out[i] < 0.0) out[i] = 0.0;
    }
    trunk_in_.push_back(std::move(x));
    trunk_out_.push_back(out);
    x = std::move(out);
  }

  Tensor out({batch_, head_dims_.out_f});
  {
    ConstMapMat xin(x.data(), batch_, head_dims_.in_f);
    ConstMapMat w(params_.item(head_dims_.w_idx).value.data(), head_dims_.out_f,
                  head_dims_.in_f);
    MapMat dst(out.data(), batch_, head_dims_.out_f);
    dst.noalias() = xin * w.transpose();
    const Tensor& bias = params_.item(head_dims_.b_idx).value;
    for (int s = 0; s < batch_; ++s) {
      for (int f = 0; f < head_dims_.out_f; ++f) out.at2(s, f) += bias[f];
    }
  }
  trunk_in_.push_back(std::move(x));  // head input

  if (spec_.sigmoid_head) {
    for (int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  }
  head_out_ = out;
  return out;
}

Tensor StateActionNet::branch_backward(const std::vector<ConvDims>& dims,
                                       const BranchCache& cache, const Tensor& grad_flat,
                                       ParamSet& grads, bool need_input_grad) const {
  if (dims.empty()) return grad_flat;  // raw passthrough branch

  Tensor d = grad_flat;  // starts shaped as the flattened last output
  for (size_t li = dims.size(); li-- > 0;) {
    const ConvDims& dim = dims[li];
    const int patch = dim.out_h * dim.out_w;
    const int crows = dim.in_c * kK * kK;
    const Tensor& out = cache.outputs[li];

    // ReLU mask.
    Tensor dy = std::move(d);
    for (int64_t i = 0; i < dy.size(); ++i) {
      if (out[i] <= 0.0) dy[i] = 0.0;
    }

    Tensor& dw = grads.item(dim.w_idx).value;
    Tensor& db = grads.item(dim.b_idx).value;
    MapMat dw_m(dw.data(), dim.out_c, crows);

    const bool propagate = need_input_grad || li > 0;
    Tensor dx;
    if (propagate) dx = Tensor({batch_, dim.in_c, dim.in_h, dim.in_w});

    ConstMapMat w(params_.item(dim.w_idx).value.data(), dim.out_c, crows);
    std::vector<double> dcols(static_cast<size_t>(crows) * patch);
    for (int s = 0; s < batch_; ++s) {
      ConstMapMat dy_m(dy.data() + static_cast<int64_t>(s) * dim.out_c * patch,
                       dim.out_c, patch);
      ConstMapMat col_m(cache.cols[li].data() + static_cast<int64_t>(s) * crows * patch,
                        crows, patch);
      dw_m.noalias() += dy_m * col_m.transpose();
      for (int f = 0; f < dim.out_c; ++f) db[f] += dy_m.row(f).sum();
      if (propagate) {
        MapMat dcol_m(dcols.data(), crows, patch);
        dcol_m.noalias() = w.transpose() * dy_m;
        col2im(dcols.data(), dim.in_c, dim.in_h, dim.in_w, dim.out_h, dim.out_w,
               dx.data() + static_cast<int64_t>(s) * dim.in_c * dim.in_h * dim.in_w);
      }
    }
    if (!propagate) return Tensor();
    d = std::move(dx);
  }
  return d;
}

ParamSet StateActionNet::backward(const Tensor& grad_out, Tensor* action_grad) {
  if (batch_ == 0) throw std::logic_error("StateActionNet: backward before forward");
  if (grad_out.rank() != 2 || grad_out.dim(0) != batch_ ||
      grad_out.dim(1) != head_dims_.out_f) {
    throw std::invalid_argument("StateActionNet: upstream gradient shape mismatch");
  }

  ParamSet grads = params_.clone_shape();

  Tensor d = grad_out;
  if (spec_.sigmoid_head) {
    for (int64_t i = 0; i < d.size(); ++i) {
      const double y = head_out_[i];
      d[i] *= y * (1.0 - y);
    }
  }

  // Head layer.
  {
    const Tensor& xin = trunk_in_.back();
    MapMat dw(grads.item(head_dims_.w_idx).value.data(), head_dims_.out_f,
              head_dims_.in_f);
    Tensor& db = grads.item(head_dims_.b_idx).value;
    ConstMapMat dy(d.data(), batch_, head_dims_.out_f);
    ConstMapMat x(xin.data(), batch_, head_dims_.in_f);
    dw.noalias() = dy.transpose() * x;
    for (int s = 0; s < batch_; ++s) {
      for (int f = 0; f < head_dims_.out_f; ++f) db[f] += d.at2(s, f);
    }
    Tensor dx({batch_, head_dims_.in_f});
    ConstMapMat w(params_.item(head_dims_.w_idx).value.data(), head_dims_.out_f,
                  head_dims_.in_f);
    MapMat dx_m(dx.data(), batch_, head_dims_.in_f);
    dx_m.noalias() = dy * w;
    d = std::move(dx);
  }

  // Trunk layers, in reverse.
  for (size_t li = trunk_dims_.size(); li-- > 0;) {
    const DenseDims& dim = trunk_dims_[li];
    const Tensor& out = trunk_out_[li];
    for (int64_t i = 0; i < d.size(); ++i) {
      if (out[i] <= 0.0) d[i] = 0.0;
    }
    const Tensor& xin = trunk_in_[li];
    MapMat dw(grads.item(dim.w_idx).value.data(), dim.out_f, dim.in_f);
    Tensor& db = grads.item(dim.b_idx).value;
    ConstMapMat dy(d.data(), batch_, dim.out_f);
    ConstMapMat x(xin.data(), batch_, dim.in_f);
    dw.noalias() = dy.transpose() * x;
    for (int s = 0; s < batch_; ++s) {
      for (int f = 0; f < dim.out_f; ++f) db[f] += d.at2(s, f);
    }
    Tensor dx({batch_, dim.in_f});
    ConstMapMat w(params_.item(dim.w_idx).value.data(), dim.out_f, dim.in_f);
    MapMat dx_m(dx.data(), batch_, dim.in_f);
    dx_m.noalias() = dy * w;
    d = std::move(dx);
  }

  // Split the feature gradient into branch and action blocks.
  const int sh_f = spec_.branch_feature_dim(spec_.sh_c, spec_.sh_h, spec_.sh_w);
  const int sp_f = spec_.branch_feature_dim(spec_.sp_c, spec_.sp_h, spec_.sp_w);
  Tensor d_sh({batch_, sh_f});
  Tensor d_sp({batch_, sp_f});
  if (action_grad != nullptr) {
    if (spec_.action_dim == 0) {
      throw std::invalid_argument("StateActionNet: no action input to differentiate");
    }
    *action_grad = Tensor({batch_, spec_.action_dim});
  }
  for (int s = 0; s < batch_; ++s) {
    const double* row = d.data() + static_cast<int64_t>(s) * spec_.feature_dim();
    std::copy(row, row + sh_f, d_sh.data() + static_cast<int64_t>(s) * sh_f);
    std::copy(row + sh_f, row + sh_f + sp_f,
              d_sp.data() + static_cast<int64_t>(s) * sp_f);
    if (action_grad != nullptr) {
      std::copy(row + sh_f + sp_f, row + sh_f + sp_f + spec_.action_dim,
                action_grad->data() + static_cast<int64_t>(s) * spec_.action_dim);
    }
  }

  branch_backward(sh_dims_, sh_cache_, d_sh, grads, false);
  branch_backward(sp_dims_, sp_cache_, d_sp, grads, false);
  return grads;
}

}  // namespace isacsim
