#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "glandflow/nn/params.hpp"
#include "glandflow/rng.hpp"
#include "glandflow/tensor.hpp"

namespace glandflow {

// Layers hold their parameters and accumulate gradients across backward()
// calls until zero_grads(). forward() caches what backward() needs; the cache
// holds exactly one forward pass.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(std::vector<ParamRef>& out) {}
  virtual void init(Rng& rng) {}
};

inline void he_uniform_init(Tensor& w, size_t fan_in, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w.data) v = rng.uniform(-limit, limit);
}

class Dense : public Layer {
 public:
  Dense(size_t in, size_t out, std::string name)
      : in_(in), out_(out), name_(std::move(name)),
        w_({out, in}), b_({out}), gw_({out, in}), gb_({out}) {}

  Tensor forward(const Tensor& x) override {
    if (x.size() != in_) throw std::invalid_argument("Dense " + name_ + ": input size mismatch");
    x_ = x;
    Tensor y({out_});
    for (size_t o = 0; o < out_; ++o) {
      double acc = b_[o];
      const double* wrow = &w_[o * in_];
      for (size_t i = 0; i < in_; ++i) acc += wrow[i] * x[i];
      y[o] = acc;
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx(x_.shape);
    for (size_t o = 0; o < out_; ++o) {
      double g = dy[o];
      gb_[o] += g;
      const double* wrow = &w_[o * in_];
      double* gwrow = &gw_[o * in_];
      for (size_t i = 0; i < in_; ++i) {
        gwrow[i] += g * x_[i];
        dx[i] += g * wrow[i];
      }
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef>& out) override {
    out.push_back({name_ + ".w", &w_, &gw_});
    out.push_back({name_ + ".b", &b_, &gb_});
  }

  void init(Rng& rng) override {
    he_uniform_init(w_, in_, rng);
    b_.fill(0.0);
  }

 private:
  size_t in_, out_;
  std::string name_;
  Tensor w_, b_, gw_, gb_;
  Tensor x_;
};

// 3x3 convolution, stride 1, zero padding, channels-first (C,H,W).
class Conv2D : public Layer {
 public:
  Conv2D(size_t cin, size_t cout, std::string name)
      : cin_(cin), cout_(cout), name_(std::move(name)),
        w_({cout, cin, 3, 3}), b_({cout}), gw_({cout, cin, 3, 3}), gb_({cout}) {}

  Tensor forward(const Tensor& x) override {
    if (x.shape.size() != 3 || x.shape[0] != cin_)
      throw std::invalid_argument("Conv2D " + name_ + ": input shape mismatch");
    x_ = x;
    size_t h = x.shape[1], w = x.shape[2];
    Tensor y({cout_, h, w});
    for (size_t co = 0; co < cout_; ++co) {
      double* yplane = &y.data[co * h * w];
      std::fill(yplane, yplane + h * w, b_[co]);
      for (size_t ci = 0; ci < cin_; ++ci) {
        const double* xplane = &x.data[ci * h * w];
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            double wv = w_[((co * cin_ + ci) * 3 + ky) * 3 + kx];
            if (wv == 0.0) continue;
            accumulate_shifted(yplane, xplane, h, w, ky - 1, kx - 1, wv);
          }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    size_t h = x_.shape[1], w = x_.shape[2];
    Tensor dx(x_.shape);
    for (size_t co = 0; co < cout_; ++co) {
      const double* gplane = &dy.data[co * h * w];
      double gb = 0.0;
      for (size_t i = 0; i < h * w; ++i) gb += gplane[i];
      gb_[co] += gb;
      for (size_t ci = 0; ci < cin_; ++ci) {
        const double* xplane = &x_.data[ci * h * w];
        double* dxplane = &dx.data[ci * h * w];
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            size_t wi = ((co * cin_ + ci) * 3 + ky) * 3 + kx;
            gw_[wi] += dot_shifted(gplane, xplane, h, w, ky - 1, kx - 1);
            double wv = w_[wi];
            if (wv != 0.0) accumulate_shifted(dxplane, gplane, h, w, 1 - ky, 1 - kx, wv);
          }
      }
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef>& out) override {
    out.push_back({name_ + ".w", &w_, &gw_});
    out.push_back({name_ + ".b", &b_, &gb_});
  }

  void init(Rng& rng) override {
    he_uniform_init(w_, cin_ * 9, rng);
    b_.fill(0.0);
  }

 private:
  // out[y][x] += weight * in[y+dy][x+dx] over the in-bounds overlap.
  static void accumulate_shifted(double* out, const double* in, size_t h, size_t w,
                                 int dy, int dx, double weight) {
    int y0 = std::max(0, -dy), y1 = static_cast<int>(h) - std::max(0, dy);
    int x0 = std::max(0, -dx), x1 = static_cast<int>(w) - std::max(0, dx);
    for (int y = y0; y < y1; ++y) {
      double* orow = out + static_cast<size_t>(y) * w;
      const double* irow = in + static_cast<size_t>(y + dy) * w + dx;
      for (int x = x0; x < x1; ++x) orow[x] += weight * irow[x];
    }
  }

  // sum over valid (y,x) of a[y][x] * b[y+dy][x+dx]
  static double dot_shifted(const double* a, const double* b, size_t h, size_t w,
                            int dy, int dx) {
    int y0 = std::max(0, -dy), y1 = static_cast<int>(h) - std::max(0, dy);
    int x0 = std::max(0, -dx), x1 = static_cast<int>(w) - std::max(0, dx);
    double acc = 0.0;
    for (int y = y0; y < y1; ++y) {
      const double* arow = a + static_cast<size_t>(y) * w;
      const double* brow = b + static_cast<size_t>(y + dy) * w + dx;
      for (int x = x0; x < x1; ++x) acc += arow[x] * brow[x];
    }
    return acc;
  }

  size_t cin_, cout_;
  std::string name_;
  Tensor w_, b_, gw_, gb_;
  Tensor x_;
};

// ReLU with derivative 0 at the kink.
class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x) override {
    x_ = x;
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
  }
  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i)
      if (x_[i] <= 0.0) dx[i] = 0.0;
    return dx;
  }

 private:
  Tensor x_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x) override {
    Tensor y = x;
    for (auto& v : y.data) v = std::tanh(v);
    y_ = y;
    return y;
  }
  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - y_[i] * y_[i];
    return dx;
  }

 private:
  Tensor y_;
};

// 2x2 max pooling, stride 2; ties resolved to the first element in row-major
// window order.
class MaxPool2 : public Layer {
 public:
  Tensor forward(const Tensor& x) override {
    if (x.shape.size() != 3 || x.shape[1] % 2 != 0 || x.shape[2] % 2 != 0)
      throw std::invalid_argument("MaxPool2 requires (C,H,W) with even H and W");
    size_t c = x.shape[0], h = x.shape[1], w = x.shape[2];
    in_shape_ = x.shape;
    Tensor y({c, h / 2, w / 2});
    argmax_.assign(y.size(), 0);
    for (size_t ci = 0; ci < c; ++ci) {
      const double* xp = &x.data[ci * h * w];
      for (size_t oy = 0; oy < h / 2; ++oy)
        for (size_t ox = 0; ox < w / 2; ++ox) {
          size_t base = (2 * oy) * w + 2 * ox;
          size_t cand[4] = {base, base + 1, base + w, base + w + 1};
          size_t best = cand[0];
          for (int k = 1; k < 4; ++k)
            if (xp[cand[k]] > xp[best]) best = cand[k];
          size_t oi = (ci * (h / 2) + oy) * (w / 2) + ox;
          y.data[oi] = xp[best];
          argmax_[oi] = ci * h * w + best;
        }
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx(in_shape_);
    for (size_t i = 0; i < dy.size(); ++i) dx.data[argmax_[i]] += dy.data[i];
    return dx;
  }

 private:
  std::vector<size_t> in_shape_;
  std::vector<size_t> argmax_;
};

class UpsampleNearest2 : public Layer {
 public:
  Tensor forward(const Tensor& x) override {
    if (x.shape.size() != 3) throw std::invalid_argument("UpsampleNearest2 requires (C,H,W)");
    size_t c = x.shape[0], h = x.shape[1], w = x.shape[2];
    in_shape_ = x.shape;
    Tensor y({c, 2 * h, 2 * w});
    for (size_t ci = 0; ci < c; ++ci)
      for (size_t yy = 0; yy < 2 * h; ++yy)
        for (size_t xx = 0; xx < 2 * w; ++xx)
          y.at3(ci, yy, xx) = x.at3(ci, yy / 2, xx / 2);
    return y;
  }
  Tensor backward(const Tensor& dy) override {
    Tensor dx(in_shape_);
    size_t c = in_shape_[0], h = in_shape_[1], w = in_shape_[2];
    for (size_t ci = 0; ci < c; ++ci)
      for (size_t yy = 0; yy < 2 * h; ++yy)
        for (size_t xx = 0; xx < 2 * w; ++xx)
          dx.at3(ci, yy / 2, xx / 2) += dy.at3(ci, yy, xx);
    return dx;
  }

 private:
  std::vector<size_t> in_shape_;
};

class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x) override {
    in_shape_ = x.shape;
    Tensor y({x.size()}, x.data);
    return y;
  }
  Tensor backward(const Tensor& dy) override { return Tensor(in_shape_, dy.data); }

 private:
  std::vector<size_t> in_shape_;
};

class Reshape : public Layer {
 public:
  explicit Reshape(std::vector<size_t> shape) : out_shape_(std::move(shape)) {}

  Tensor forward(const Tensor& x) override {
    if (x.size() != Tensor::element_count(out_shape_))
      throw std::invalid_argument("Reshape: element count mismatch");
    in_shape_ = x.shape;
    return Tensor(out_shape_, x.data);
  }
  Tensor backward(const Tensor& dy) override { return Tensor(in_shape_, dy.data); }

 private:
  std::vector<size_t> out_shape_;
  std::vector<size_t> in_shape_;
};

// y = x + F(x), F = relu(conv2(relu(conv1(x)))); identity when F's parameters
// are all zero.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(size_t channels, std::string name)
      : conv1_(channels, channels, name + ".conv1"),
        conv2_(channels, channels, name + ".conv2") {}

  Tensor forward(const Tensor& x) override {
    Tensor f = relu2_.forward(conv2_.forward(relu1_.forward(conv1_.forward(x))));
    Tensor y = x;
    for (size_t i = 0; i < y.size(); ++i) y[i] += f[i];
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dbranch = conv1_.backward(relu1_.backward(conv2_.backward(relu2_.backward(dy))));
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dbranch[i];
    return dx;
  }

  void collect_params(std::vector<ParamRef>& out) override {
    conv1_.collect_params(out);
    conv2_.collect_params(out);
  }

  void init(Rng& rng) override {
    conv1_.init(rng);
    conv2_.init(rng);
  }

 private:
  Conv2D conv1_, conv2_;
  ReLU relu1_, relu2_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;

  template <typename L, typename... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor forward(const Tensor& x) override {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  void collect_params(std::vector<ParamRef>& out) override {
    for (auto& l : layers_) l->collect_params(out);
  }

  void init(Rng& rng) override {
    for (auto& l : layers_) l->init(rng);
  }

  std::vector<ParamRef> params() {
    std::vector<ParamRef> refs;
    collect_params(refs);
    return refs;
  }

  size_t layer_count() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace glandflow
