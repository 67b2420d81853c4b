#include "gaitfuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Matrix>;
using ConstMatMap = Eigen::Map<const Matrix>;

[[noreturn]] void shape_fail(std::string_view op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

bool any_tracks(std::initializer_list<const Tensor*> ts) {
  return std::any_of(ts.begin(), ts.end(), [](const Tensor* t) { return t->tracks(); });
}

// Fills `col` [C_in*k*k x H_out*W_out] from one sample [C_in x H x W].
void im2col(const double* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            std::size_t stride, std::size_t pad, std::size_t ho, std::size_t wo, double* col) {
  const std::size_t plane = ho * wo;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xc = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = col + ((c * k + ky) * k + kx) * plane;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          double* out = row + oy * wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(out, out + wo, 0.0);
            continue;
          }
          const double* xrow = xc + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                          ? 0.0
                          : xrow[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters `col` back into dx (accumulating).
void col2im(const double* col, std::size_t channels, std::size_t h, std::size_t w,
            std::size_t k, std::size_t stride, std::size_t pad, std::size_t ho, std::size_t wo,
            double* dx) {
  const std::size_t plane = ho * wo;
  for (std::size_t c = 0; c < channels; ++c) {
    double* dxc = dx + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double* row = col + ((c * k + ky) * k + kx) * plane;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* dxrow = dxc + static_cast<std::size_t>(iy) * w;
          const double* in = row + oy * wo;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) {
              dxrow[static_cast<std::size_t>(ix)] += in[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

// ---- Tensor ----------------------------------------------------------------

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "x" : "") << shape[k];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_string(shape));
  }
  storage_->values.assign(shape_numel(shape), fill);
  storage_->shape = std::move(shape);
  storage_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  storage_->requires_grad = requires_grad;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return storage_->values[0];
}

std::span<double> Tensor::grad() const {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->values.size(), 0.0);
  return storage_->grad;
}

void Tensor::zero_grad() { std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0); }

void Tensor::set_requires_grad(bool on) { storage_->requires_grad = on; }

Tensor Tensor::clone() const {
  return Tensor(storage_->shape, storage_->values, false);
}

// ---- Tape ------------------------------------------------------------------

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor& output,
                  std::function<void()> backward) {
  output.storage_->recorded = true;
  nodes_.push_back(Node{op, std::move(inputs), output, std::move(backward)});
}

void backward(const Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss");
  }
  if (!loss.tracks()) return;
  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  const auto nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->output.has_grad()) it->backward();
  }
}

// ---- operations -------------------------------------------------------------

Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.dim(1) != w.dim(0) ||
      b.dim(0) != w.dim(1)) {
    shape_fail("affine", "x " + shape_string(x.shape()) + ", W " + shape_string(w.shape()) +
                             ", b " + shape_string(b.shape()));
  }
  const std::size_t n = x.dim(0), din = w.dim(0), dout = w.dim(1);
  Tensor y({n, dout});
  {
    MatMap ym(y.values().data(), n, dout);
    ym.noalias() = ConstMatMap(x.values().data(), n, din) * ConstMatMap(w.values().data(), din, dout);
    const double* bv = b.values().data();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < dout; ++c) ym(r, c) += bv[c];
    }
  }
  if (!any_tracks({&x, &w, &b})) return y;
  tape.record("affine", {x, w, b}, y, [x, w, b, y, n, din, dout]() mutable {
    ConstMatMap gy(y.grad().data(), n, dout);
    if (x.tracks()) {
      MatMap(x.grad().data(), n, din).noalias() += gy * ConstMatMap(w.values().data(), din, dout).transpose();
    }
    if (w.tracks()) {
      MatMap(w.grad().data(), din, dout).noalias() += ConstMatMap(x.values().data(), n, din).transpose() * gy;
    }
    if (b.tracks()) {
      auto gb = b.grad();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < dout; ++c) gb[c] += gy(r, c);
      }
    }
  });
  return y;
}

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& kernel, std::size_t stride,
              std::size_t padding) {
  if (x.rank() != 4 || kernel.rank() != 4 || kernel.dim(1) != x.dim(1) ||
      kernel.dim(2) != kernel.dim(3)) {
    shape_fail("conv2d", "input " + shape_string(x.shape()) + ", kernel " +
                             shape_string(kernel.shape()));
  }
  if (stride == 0) shape_fail("conv2d", "stride must be positive");
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = kernel.dim(0), k = kernel.dim(2);
  if (h + 2 * padding < k || w + 2 * padding < k) {
    shape_fail("conv2d", "kernel " + std::to_string(k) + " larger than padded input " +
                             shape_string(x.shape()));
  }
  const std::size_t ho = (h + 2 * padding - k) / stride + 1;
  const std::size_t wo = (w + 2 * padding - k) / stride + 1;
  const std::size_t rows = cin * k * k, plane = ho * wo;
  const bool direct = (k == 1 && stride == 1 && padding == 0);

  Tensor y({n, cout, ho, wo});
  {
    ConstMatMap km(kernel.values().data(), cout, rows);
    std::vector<double> col(direct ? 0 : rows * plane);
    for (std::size_t s = 0; s < n; ++s) {
      const double* xs = x.values().data() + s * cin * h * w;
      const double* cp = xs;
      if (!direct) {
        im2col(xs, cin, h, w, k, stride, padding, ho, wo, col.data());
        cp = col.data();
      }
      MatMap(y.values().data() + s * cout * plane, cout, plane).noalias() =
          km * ConstMatMap(cp, rows, plane);
    }
  }
  if (!any_tracks({&x, &kernel})) return y;
  tape.record("conv2d", {x, kernel}, y,
              [x, kernel, y, n, cin, h, w, cout, k, stride, padding, ho, wo, rows, plane,
               direct]() mutable {
                ConstMatMap km(kernel.values().data(), cout, rows);
                std::vector<double> col(direct ? 0 : rows * plane);
                std::vector<double> dcol(direct ? 0 : rows * plane);
                const bool need_x = x.tracks(), need_k = kernel.tracks();
                for (std::size_t s = 0; s < n; ++s) {
                  ConstMatMap gy(y.grad().data() + s * cout * plane, cout, plane);
                  const double* xs = x.values().data() + s * cin * h * w;
                  if (need_k) {
                    const double* cp = xs;
                    if (!direct) {
                      im2col(xs, cin, h, w, k, stride, padding, ho, wo, col.data());
                      cp = col.data();
                    }
                    MatMap(kernel.grad().data(), cout, rows).noalias() +=
                        gy * ConstMatMap(cp, rows, plane).transpose();
                  }
                  if (need_x) {
                    double* dxs = x.grad().data() + s * cin * h * w;
                    if (direct) {
                      MatMap(dxs, rows, plane).noalias() += km.transpose() * gy;
                    } else {
                      MatMap(dcol.data(), rows, plane).noalias() = km.transpose() * gy;
                      col2im(dcol.data(), cin, h, w, k, stride, padding, ho, wo, dxs);
                    }
                  }
                }
              });
  return y;
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t k = 0; k < xv.size(); ++k) yv[k] = xv[k] > 0.0 ? xv[k] : 0.0;
  if (!x.tracks()) return y;
  tape.record("relu", {x}, y, [x, y]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    auto xv = x.values();
    for (std::size_t k = 0; k < gx.size(); ++k) {
      if (xv[k] > 0.0) gx[k] += gy[k];
    }
  });
  return y;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t k = 0; k < xv.size(); ++k) {
    // Split by sign so exp never overflows.
    const double v = xv[k];
    if (v >= 0.0) {
      yv[k] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      yv[k] = e / (1.0 + e);
    }
  }
  if (!x.tracks()) return y;
  tape.record("sigmoid", {x}, y, [x, y]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    auto yv = y.values();
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += gy[k] * yv[k] * (1.0 - yv[k]);
  });
  return y;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    shape_fail("add", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Tensor y(a.shape());
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t k = 0; k < yv.size(); ++k) yv[k] = av[k] + bv[k];
  if (!any_tracks({&a, &b})) return y;
  tape.record("add", {a, b}, y, [a, b, y]() mutable {
    auto gy = y.grad();
    for (const Tensor* t : {&a, &b}) {
      if (!t->tracks()) continue;
      auto g = t->grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += gy[k];
    }
  });
  return y;
}

Tensor hadamard(Tape& tape, const Tensor& a_in, const Tensor& b_in) {
  if (a_in.shape() == b_in.shape()) {
    const Tensor& a = a_in;
    const Tensor& b = b_in;
    Tensor y(a.shape());
    auto av = a.values(), bv = b.values();
    auto yv = y.values();
    for (std::size_t k = 0; k < yv.size(); ++k) yv[k] = av[k] * bv[k];
    if (!any_tracks({&a, &b})) return y;
    tape.record("hadamard", {a, b}, y, [a, b, y]() mutable {
      auto gy = y.grad();
      if (a.tracks()) {
        auto g = a.grad();
        auto bv = b.values();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += gy[k] * bv[k];
      }
      if (b.tracks()) {
        auto g = b.grad();
        auto av = a.values();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += gy[k] * av[k];
      }
    });
    return y;
  }

  // Broadcast: `map` is [N x C x ...], `factor` is [N x C].
  const bool swapped = a_in.rank() == 2 && b_in.rank() > 2;
  const Tensor& map = swapped ? b_in : a_in;
  const Tensor& factor = swapped ? a_in : b_in;
  if (factor.rank() != 2 || map.rank() < 3 || map.dim(0) != factor.dim(0) ||
      map.dim(1) != factor.dim(1)) {
    shape_fail("hadamard", shape_string(a_in.shape()) + " vs " + shape_string(b_in.shape()));
  }
  const std::size_t groups = factor.numel();
  const std::size_t inner = map.numel() / groups;
  Tensor y(map.shape());
  {
    auto mv = map.values(), fv = factor.values();
    auto yv = y.values();
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t k = 0; k < inner; ++k) yv[g * inner + k] = mv[g * inner + k] * fv[g];
    }
  }
  if (!any_tracks({&map, &factor})) return y;
  tape.record("hadamard", {map, factor}, y, [map, factor, y, groups, inner]() mutable {
    auto gy = y.grad();
    if (map.tracks()) {
      auto g = map.grad();
      auto fv = factor.values();
      for (std::size_t q = 0; q < groups; ++q) {
        for (std::size_t k = 0; k < inner; ++k) g[q * inner + k] += gy[q * inner + k] * fv[q];
      }
    }
    if (factor.tracks()) {
      auto g = factor.grad();
      auto mv = map.values();
      for (std::size_t q = 0; q < groups; ++q) {
        double acc = 0.0;
        for (std::size_t k = 0; k < inner; ++k) acc += gy[q * inner + k] * mv[q * inner + k];
        g[q] += acc;
      }
    }
  });
  return y;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    shape_fail("concat", "axis " + std::to_string(axis) + " out of range for rank " +
                             std::to_string(first.size()));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = (d == axis) || s[d] == first[d];
    if (!ok) shape_fail("concat", shape_string(s) + " vs " + shape_string(first));
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  Tensor y(out_shape);
  const std::size_t out_row = out_shape[axis] * inner;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t chunk = p.dim(axis) * inner;
    auto pv = p.values();
    auto yv = y.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * chunk, chunk, yv.begin() + o * out_row + off);
    }
    off += chunk;
  }

  bool tracked = false;
  for (const auto& p : parts) tracked = tracked || p.tracks();
  if (!tracked) return y;
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  tape.record("concat", inputs, y, [inputs, y, offsets, outer, inner, out_row, axis]() mutable {
    auto gy = y.grad();
    for (std::size_t q = 0; q < inputs.size(); ++q) {
      Tensor& p = inputs[q];
      if (!p.tracks()) continue;
      const std::size_t chunk = p.dim(axis) * inner;
      auto g = p.grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < chunk; ++k) g[o * chunk + k] += gy[o * out_row + offsets[q] + k];
      }
    }
  });
  return y;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  if (x.rank() != 4) shape_fail("global_avg_pool", "expected [N x C x H x W], got " + shape_string(x.shape()));
  const std::size_t groups = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  Tensor y({x.dim(0), x.dim(1)});
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t g = 0; g < groups; ++g) {
    double acc = 0.0;
    for (std::size_t k = 0; k < area; ++k) acc += xv[g * area + k];
    yv[g] = acc / static_cast<double>(area);
  }
  if (!x.tracks()) return y;
  tape.record("global_avg_pool", {x}, y, [x, y, groups, area]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    const double inv = 1.0 / static_cast<double>(area);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t k = 0; k < area; ++k) gx[g * area + k] += gy[g] * inv;
    }
  });
  return y;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = uniform01(rng) < rate ? 0.0 : scale;
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t k = 0; k < yv.size(); ++k) yv[k] = xv[k] * mask[k];
  if (!x.tracks()) return y;
  tape.record("dropout", {x}, y, [x, y, mask = std::move(mask)]() mutable {
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += gy[k] * mask[k];
  });
  return y;
}

std::vector<double> softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) shape_fail("softmax", "expected [N x K], got " + shape_string(logits.shape()));
  const std::size_t n = logits.dim(0), kk = logits.dim(1);
  std::vector<double> p(n * kk);
  auto lv = logits.values();
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = lv.data() + r * kk;
    const double mx = *std::max_element(row, row + kk);
    double z = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      p[r * kk + c] = std::exp(row[c] - mx);
      z += p[r * kk + c];
    }
    for (std::size_t c = 0; c < kk; ++c) p[r * kk + c] /= z;
  }
  return p;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || labels.size() != logits.dim(0)) {
    shape_fail("softmax_cross_entropy", "logits " + shape_string(logits.shape()) + " with " +
                                            std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = logits.dim(0), kk = logits.dim(1);
  for (std::size_t lab : labels) {
    if (lab >= kk) {
      throw DataError("label " + std::to_string(lab) + " outside [0, " + std::to_string(kk) + ")");
    }
  }
  auto lv = logits.values();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = lv.data() + r * kk;
    const double mx = *std::max_element(row, row + kk);
    double z = 0.0;
    for (std::size_t c = 0; c < kk; ++c) z += std::exp(row[c] - mx);
    loss += (mx + std::log(z)) - row[labels[r]];
  }
  Tensor y({1}, loss / static_cast<double>(n));
  if (!logits.tracks()) return y;
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  tape.record("softmax_cross_entropy", {logits}, y, [logits, y, lab, n, kk]() mutable {
    const std::vector<double> p = softmax_rows(logits);
    const double scale = y.grad()[0] / static_cast<double>(n);
    auto g = logits.grad();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < kk; ++c) {
        const double onehot = (c == lab[r]) ? 1.0 : 0.0;
        g[r * kk + c] += scale * (p[r * kk + c] - onehot);
      }
    }
  });
  return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor y({1}, acc);
  if (!x.tracks()) return y;
  tape.record("sum", {x}, y, [x, y]() mutable {
    const double gy = y.grad()[0];
    for (double& g : x.grad()) g += gy;
  });
  return y;
}

Tensor mean(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  Tensor y({1}, acc * inv);
  if (!x.tracks()) return y;
  tape.record("mean", {x}, y, [x, y, inv]() mutable {
    const double gy = y.grad()[0] * inv;
    for (double& g : x.grad()) g += gy;
  });
  return y;
}

// ---- parameters --------------------------------------------------------------

Tensor ParameterSet::add(std::string name, Tensor tensor) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  items_.push_back(Parameter{std::move(name), tensor});
  return tensor;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : items_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Tensor ParameterSet::get(std::string_view name) const {
  const Parameter* p = find(name);
  if (p == nullptr) throw DataError("no parameter named '" + std::string(name) + "'");
  return p->tensor;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
               double lr, const AdamConfig& cfg) {
  if (grad.size() != param.size()) throw ShapeError("adam_step: gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  if (state.m.size() != param.size() || state.v.size() != param.size()) {
    throw ShapeError("adam_step: optimizer state size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad[k] + cfg.weight_decay * param[k];
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[k] / bc1;
    const double vhat = state.v[k] / bc2;
    param[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Adam::Adam(const ParameterSet& params, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& p : params.items()) params_.push_back(p.tensor);
  states_.resize(params_.size());
}

void Adam::step(double lr) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    adam_step(p.values(), p.grad(), states_[k], lr, cfg_);
  }
}

double decayed_learning_rate(double base, double decay, std::size_t epoch) {
  return base * std::exp(-decay * static_cast<double>(epoch));
}

}  // namespace gaitfuse
