#include "dawn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace dawn {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---- rng -------------------------------------------------------------------

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t rotl64(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

uint64_t Rng::next_u64() {
  // xoshiro256**
  uint64_t result = rotl64(state_[1] * 5, 7) * 9;
  uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl64(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// ---- grad mode ---------------------------------------------------------------

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---- tensor basics -----------------------------------------------------------

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(static_cast<size_t>(shape_numel(shape)), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw std::invalid_argument("data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::uniform(Shape shape, T lo, T hi, Rng& rng, bool requires_grad) {
  std::vector<T> data(static_cast<size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<T>(rng.uniform(lo, hi));
  return from(std::move(shape), std::move(data), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::randn(Shape shape, T stddev, Rng& rng, bool requires_grad) {
  std::vector<T> data(static_cast<size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<T>(stddev * rng.normal());
  return from(std::move(shape), std::move(data), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::he_uniform(Shape shape, int64_t fan_in, Rng& rng, bool requires_grad) {
  if (fan_in <= 0) throw std::invalid_argument("he_uniform: fan_in must be positive");
  T bound = static_cast<T>(std::sqrt(6.0 / static_cast<double>(fan_in)));
  return uniform(std::move(shape), -bound, bound, rng, requires_grad);
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1) throw std::runtime_error("item() on tensor of shape " + shape_str(shape()));
  return checked()->value[0];
}

template <class T>
void Tensor<T>::set_requires_grad(bool value) {
  checked()->requires_grad = value;
}

template <class T>
std::span<T> Tensor<T>::grad() {
  checked()->ensure_grad();
  return {node_->grad.data(), node_->grad.size()};
}

template <class T>
std::span<const T> Tensor<T>::grad() const {
  checked()->ensure_grad();
  return {node_->grad.data(), node_->grad.size()};
}

template <class T>
void Tensor<T>::zero_grad() {
  auto& n = *checked();
  std::fill(n.grad.begin(), n.grad.end(), T(0));
}

template <class T>
void Tensor<T>::backward() {
  auto& root = *checked();
  if (root.value.size() != 1)
    throw std::runtime_error("backward() requires a scalar, got " + shape_str(root.shape));

  // Post-order DFS, then walk in reverse so every node sees its full
  // incoming gradient before propagating.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(&root, 0);
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.ensure_grad();
  root.grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

template <class T>
void Tensor<T>::check_finite(const char* what) const {
  for (T v : checked()->value) {
    if (!std::isfinite(static_cast<double>(v)))
      throw std::runtime_error(std::string("non-finite value in ") + what);
  }
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  auto node = std::make_shared<Node>();
  node->shape = checked()->shape;
  node->value = node_->value;
  return wrap(std::move(node));
}

// ---- op helpers ----------------------------------------------------------------

namespace {

template <class T>
using Node = typename Tensor<T>::Node;

template <class T>
std::shared_ptr<Node<T>> make_result(Shape shape, std::vector<T> value,
                                     std::vector<std::shared_ptr<Node<T>>> parents) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (grad_enabled()) {
    for (auto& p : parents)
      if (p->requires_grad) {
        node->requires_grad = true;
        break;
      }
    if (node->requires_grad) node->parents = std::move(parents);
  }
  return node;
}

// Accumulate into a parent's gradient buffer only when it participates.
template <class NodeT>
auto grad_sink(const std::shared_ptr<NodeT>& p) -> decltype(p->grad.data()) {
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p->grad.data();
}

void expect(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

template <class T>
void expect_rank(const Tensor<T>& t, int rank, const char* op) {
  if (t.ndim() != rank)
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                " tensor, got " + shape_str(t.shape()));
}

}  // namespace

// ---- conv2d -----------------------------------------------------------------

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride_h, int stride_w) {
  expect_rank(input, 4, "conv2d");
  expect_rank(weight, 4, "conv2d");
  const int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t F = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  expect(weight.dim(1) == C, "conv2d: weight channels " + std::to_string(weight.dim(1)) +
                                 " do not match input channels " + std::to_string(C));
  expect(kh <= H && kw <= W, "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                                 " larger than input " + std::to_string(H) + "x" + std::to_string(W));
  expect(stride_h >= 1 && stride_w >= 1, "conv2d: stride must be positive");
  if (bias.defined()) {
    expect_rank(bias, 1, "conv2d bias");
    expect(bias.dim(0) == F, "conv2d: bias length does not match filter count");
  }

  const int64_t Ho = (H - kh) / stride_h + 1;
  const int64_t Wo = (W - kw) / stride_w + 1;
  std::vector<T> out(static_cast<size_t>(B * F * Ho * Wo), T(0));

  const T* x = input.data().data();
  const T* w = weight.data().data();
  const T* b = bias.defined() ? bias.data().data() : nullptr;

  // per-tap accumulation: the inner loop runs contiguously over output
  // columns and each input row feeds a block of four filters
  const int64_t plane = Ho * Wo;
  for (int64_t n = 0; n < B; ++n) {
    for (int64_t f = 0; f < F; ++f) {
      T* o = out.data() + ((n * F + f) * Ho) * Wo;
      const T bv = b ? b[f] : T(0);
      for (int64_t i = 0; i < plane; ++i) o[i] = bv;
    }
    for (int64_t f0 = 0; f0 < F; f0 += 4) {
      const int64_t fb = std::min<int64_t>(4, F - f0);
      T* obase = out.data() + ((n * F + f0) * Ho) * Wo;
      for (int64_t c = 0; c < C; ++c) {
        const T* xc = x + ((n * C + c) * H) * W;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          const int64_t iy0 = oy * stride_h;
          for (int64_t i = 0; i < kh; ++i) {
            const T* xrow = xc + (iy0 + i) * W;
            for (int64_t j = 0; j < kw; ++j) {
              T wv[4] = {};
              for (int64_t f = 0; f < fb; ++f)
                wv[f] = w[(((f0 + f) * C + c) * kh + i) * kw + j];
              if (fb == 4 && stride_w == 1) {
                const T* src = xrow + j;
                T* r0 = obase + oy * Wo;
                T* r1 = r0 + plane;
                T* r2 = r1 + plane;
                T* r3 = r2 + plane;
                for (int64_t ox = 0; ox < Wo; ++ox) {
                  const T xv = src[ox];
                  r0[ox] += wv[0] * xv;
                  r1[ox] += wv[1] * xv;
                  r2[ox] += wv[2] * xv;
                  r3[ox] += wv[3] * xv;
                }
              } else {
                for (int64_t f = 0; f < fb; ++f) {
                  T* orow = obase + f * plane + oy * Wo;
                  const T wvf = wv[f];
                  if (wvf == T(0)) continue;
                  if (stride_w == 1) {
                    const T* src = xrow + j;
                    for (int64_t ox = 0; ox < Wo; ++ox) orow[ox] += wvf * src[ox];
                  } else {
                    for (int64_t ox = 0; ox < Wo; ++ox)
                      orow[ox] += wvf * xrow[ox * stride_w + j];
                  }
                }
              }
            }
          }
        }
      }
    }
  }

  std::vector<std::shared_ptr<Node<T>>> parents{input.node(), weight.node()};
  if (bias.defined()) parents.push_back(bias.node());
  auto node = make_result<T>({B, F, Ho, Wo}, std::move(out), std::move(parents));
  if (node->requires_grad) {
    auto xn = input.node();
    auto wn = weight.node();
    auto bn = bias.defined() ? bias.node() : nullptr;
    node->backward_fn = [xn, wn, bn, B, C, H, W, F, kh, kw, Ho, Wo, stride_h,
                         stride_w](Node<T>& self) {
      const T* g = self.grad.data();
      T* gx = grad_sink(xn);
      T* gw = grad_sink(wn);
      T* gb = bn ? grad_sink(bn) : nullptr;
      const T* x = xn->value.data();
      const T* w = wn->value.data();
      if (gb)
        for (int64_t n = 0; n < B; ++n)
          for (int64_t f = 0; f < F; ++f) {
            const T* go = g + ((n * F + f) * Ho) * Wo;
            T acc = T(0);
            for (int64_t i = 0; i < Ho * Wo; ++i) acc += go[i];
            gb[f] += acc;
          }
      // weight gradient: per (f,c,i,j) a dot product over shifted rows
      if (gw)
        for (int64_t n = 0; n < B; ++n)
          for (int64_t f = 0; f < F; ++f) {
            const T* go = g + ((n * F + f) * Ho) * Wo;
            for (int64_t c = 0; c < C; ++c) {
              const T* xc = x + ((n * C + c) * H) * W;
              T* gwc = gw + ((f * C + c) * kh) * kw;
              for (int64_t i = 0; i < kh; ++i)
                for (int64_t j = 0; j < kw; ++j) {
                  // four independent accumulators break the add latency chain
                  T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0);
                  for (int64_t oy = 0; oy < Ho; ++oy) {
                    const T* xrow = xc + (oy * stride_h + i) * W + j;
                    const T* grow = go + oy * Wo;
                    if (stride_w == 1) {
                      int64_t ox = 0;
                      for (; ox + 4 <= Wo; ox += 4) {
                        a0 += grow[ox] * xrow[ox];
                        a1 += grow[ox + 1] * xrow[ox + 1];
                        a2 += grow[ox + 2] * xrow[ox + 2];
                        a3 += grow[ox + 3] * xrow[ox + 3];
                      }
                      for (; ox < Wo; ++ox) a0 += grow[ox] * xrow[ox];
                    } else {
                      for (int64_t ox = 0; ox < Wo; ++ox) a0 += grow[ox] * xrow[ox * stride_w];
                    }
                  }
                  gwc[i * kw + j] += (a0 + a1) + (a2 + a3);
                }
            }
          }
      // input gradient: scatter the output gradient through the kernel
      if (gx)
        for (int64_t n = 0; n < B; ++n)
          for (int64_t f = 0; f < F; ++f) {
            const T* go = g + ((n * F + f) * Ho) * Wo;
            for (int64_t c = 0; c < C; ++c) {
              const T* wc = w + ((f * C + c) * kh) * kw;
              T* gxc = gx + ((n * C + c) * H) * W;
              for (int64_t oy = 0; oy < Ho; ++oy) {
                const T* grow = go + oy * Wo;
                for (int64_t i = 0; i < kh; ++i) {
                  T* gxrow = gxc + (oy * stride_h + i) * W;
                  const T* wrow = wc + i * kw;
                  for (int64_t j = 0; j < kw; ++j) {
                    const T wv = wrow[j];
                    if (wv == T(0)) continue;
                    if (stride_w == 1) {
                      T* dst = gxrow + j;
                      for (int64_t ox = 0; ox < Wo; ++ox) dst[ox] += grow[ox] * wv;
                    } else {
                      for (int64_t ox = 0; ox < Wo; ++ox)
                        gxrow[ox * stride_w + j] += grow[ox] * wv;
                    }
                  }
                }
              }
            }
          }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- padding -----------------------------------------------------------------

namespace {

// Shared scaffolding for the two padding flavors. `reflect` selects the
// source index mapping; reflection never repeats the border sample.
template <class T>
Tensor<T> pad_impl(const Tensor<T>& input, int top, int bottom, int left, int right,
                   bool reflect) {
  expect_rank(input, 4, "pad");
  expect(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, "pad: negative amount");
  const int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (reflect) {
    expect(top < H && bottom < H, "reflect_pad: vertical pad must be smaller than height " +
                                      std::to_string(H));
    expect(left < W && right < W, "reflect_pad: horizontal pad must be smaller than width " +
                                      std::to_string(W));
  }
  const int64_t Ho = H + top + bottom, Wo = W + left + right;
  std::vector<T> out(static_cast<size_t>(B * C * Ho * Wo), T(0));
  const T* x = input.data().data();

  auto src_index = [](int64_t o, int64_t pad, int64_t extent, bool refl) -> int64_t {
    int64_t i = o - pad;
    if (!refl) return (i >= 0 && i < extent) ? i : -1;
    if (i < 0) return -i;
    if (i >= extent) return 2 * extent - 2 - i;
    return i;
  };

  for (int64_t bc = 0; bc < B * C; ++bc) {
    const T* xp = x + bc * H * W;
    T* op = out.data() + bc * Ho * Wo;
    for (int64_t oy = 0; oy < Ho; ++oy) {
      int64_t sy = src_index(oy, top, H, reflect);
      if (sy < 0) continue;
      for (int64_t ox = 0; ox < Wo; ++ox) {
        int64_t sx = src_index(ox, left, W, reflect);
        if (sx >= 0) op[oy * Wo + ox] = xp[sy * W + sx];
      }
    }
  }

  auto node = make_result<T>({B, C, Ho, Wo}, std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn, B, C, H, W, Ho, Wo, top, left, reflect, src_index](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      for (int64_t bc = 0; bc < B * C; ++bc) {
        T* gxp = gx + bc * H * W;
        const T* gp = g + bc * Ho * Wo;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          int64_t sy = src_index(oy, top, H, reflect);
          if (sy < 0) continue;
          for (int64_t ox = 0; ox < Wo; ++ox) {
            int64_t sx = src_index(ox, left, W, reflect);
            if (sx >= 0) gxp[sy * W + sx] += gp[oy * Wo + ox];
          }
        }
      }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

}  // namespace

template <class T>
Tensor<T> reflect_pad(const Tensor<T>& input, int top, int bottom, int left, int right) {
  return pad_impl(input, top, bottom, left, right, true);
}

template <class T>
Tensor<T> zero_pad(const Tensor<T>& input, int top, int bottom, int left, int right) {
  return pad_impl(input, top, bottom, left, right, false);
}

// ---- pooling -----------------------------------------------------------------

template <class T>
Tensor<T> avg_pool(const Tensor<T>& input, int p) {
  expect_rank(input, 4, "avg_pool");
  expect(p >= 1, "avg_pool: window must be >= 1");
  const int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  expect(H % p == 0 && W % p == 0, "avg_pool: extents " + std::to_string(H) + "x" +
                                       std::to_string(W) + " not divisible by window " +
                                       std::to_string(p));
  const int64_t Ho = H / p, Wo = W / p;
  const T inv = T(1) / static_cast<T>(p * p);
  std::vector<T> out(static_cast<size_t>(B * C * Ho * Wo));
  const T* x = input.data().data();
  for (int64_t bc = 0; bc < B * C; ++bc) {
    const T* xp = x + bc * H * W;
    T* op = out.data() + bc * Ho * Wo;
    for (int64_t oy = 0; oy < Ho; ++oy)
      for (int64_t ox = 0; ox < Wo; ++ox) {
        T acc = T(0);
        for (int64_t i = 0; i < p; ++i)
          for (int64_t j = 0; j < p; ++j) acc += xp[(oy * p + i) * W + ox * p + j];
        op[oy * Wo + ox] = acc * inv;
      }
  }
  auto node = make_result<T>({B, C, Ho, Wo}, std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn, B, C, H, W, Ho, Wo, p, inv](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      for (int64_t bc = 0; bc < B * C; ++bc) {
        T* gxp = gx + bc * H * W;
        const T* gp = g + bc * Ho * Wo;
        for (int64_t oy = 0; oy < Ho; ++oy)
          for (int64_t ox = 0; ox < Wo; ++ox) {
            const T gv = gp[oy * Wo + ox] * inv;
            for (int64_t i = 0; i < p; ++i)
              for (int64_t j = 0; j < p; ++j) gxp[(oy * p + i) * W + ox * p + j] += gv;
          }
      }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  expect_rank(input, 4, "global_avg_pool");
  const int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  expect(H * W >= 1, "global_avg_pool: empty spatial extent");
  const T inv = T(1) / static_cast<T>(H * W);
  std::vector<T> out(static_cast<size_t>(B * C));
  const T* x = input.data().data();
  for (int64_t bc = 0; bc < B * C; ++bc) {
    T acc = T(0);
    const T* xp = x + bc * H * W;
    for (int64_t i = 0; i < H * W; ++i) acc += xp[i];
    out[static_cast<size_t>(bc)] = acc * inv;
  }
  auto node = make_result<T>({B, C}, std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn, B, C, H, W, inv](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      for (int64_t bc = 0; bc < B * C; ++bc) {
        const T gv = g[bc] * inv;
        T* gxp = gx + bc * H * W;
        for (int64_t i = 0; i < H * W; ++i) gxp[i] += gv;
      }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- batch norm ----------------------------------------------------------------

template <class T>
BatchNormState<T> BatchNormState<T>::make(int64_t channels) {
  BatchNormState<T> s;
  s.scale = Tensor<T>::full({channels}, T(1), true);
  s.shift = Tensor<T>::zeros({channels}, true);
  s.running_mean.assign(static_cast<size_t>(channels), T(0));
  s.running_var.assign(static_cast<size_t>(channels), T(1));
  return s;
}

template <class T>
Tensor<T> batch_norm(const Tensor<T>& input, BatchNormState<T>& state, bool training) {
  expect_rank(input, 4, "batch_norm");
  const int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  expect(state.scale.numel() == C && state.shift.numel() == C &&
             static_cast<int64_t>(state.running_mean.size()) == C,
         "batch_norm: state does not match channel count " + std::to_string(C));
  const int64_t N = B * H * W;  // samples per channel
  if (training) expect(N >= 2, "batch_norm: training mode needs B*H*W >= 2 for batch statistics");

  const T* x = input.data().data();
  const T* gamma = state.scale.data().data();
  const T* beta = state.shift.data().data();
  const T eps = state.eps;

  std::vector<T> mean(static_cast<size_t>(C)), inv_std(static_cast<size_t>(C));
  if (training) {
    for (int64_t c = 0; c < C; ++c) {
      double m = 0;
      for (int64_t n = 0; n < B; ++n) {
        const T* xp = x + ((n * C + c) * H) * W;
        for (int64_t i = 0; i < H * W; ++i) m += static_cast<double>(xp[i]);
      }
      m /= static_cast<double>(N);
      double var = 0;
      for (int64_t n = 0; n < B; ++n) {
        const T* xp = x + ((n * C + c) * H) * W;
        for (int64_t i = 0; i < H * W; ++i) {
          double d = static_cast<double>(xp[i]) - m;
          var += d * d;
        }
      }
      var /= static_cast<double>(N);  // biased, used for normalization
      mean[static_cast<size_t>(c)] = static_cast<T>(m);
      inv_std[static_cast<size_t>(c)] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      // Running stats keep the unbiased variance.
      const T m_ = state.momentum;
      state.running_mean[static_cast<size_t>(c)] =
          (T(1) - m_) * state.running_mean[static_cast<size_t>(c)] + m_ * static_cast<T>(m);
      state.running_var[static_cast<size_t>(c)] =
          (T(1) - m_) * state.running_var[static_cast<size_t>(c)] +
          m_ * static_cast<T>(var * static_cast<double>(N) / static_cast<double>(N - 1));
    }
  } else {
    for (int64_t c = 0; c < C; ++c) {
      mean[static_cast<size_t>(c)] = state.running_mean[static_cast<size_t>(c)];
      inv_std[static_cast<size_t>(c)] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(state.running_var[static_cast<size_t>(c)]) +
                          static_cast<double>(eps)));
    }
  }

  std::vector<T> out(static_cast<size_t>(B * C * H * W));
  for (int64_t n = 0; n < B; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const T* xp = x + ((n * C + c) * H) * W;
      T* op = out.data() + ((n * C + c) * H) * W;
      const T mu = mean[static_cast<size_t>(c)], is = inv_std[static_cast<size_t>(c)];
      const T gsc = gamma[c], bsh = beta[c];
      for (int64_t i = 0; i < H * W; ++i) op[i] = (xp[i] - mu) * is * gsc + bsh;
    }

  auto node = make_result<T>({B, C, H, W}, std::move(out),
                             {input.node(), state.scale.node(), state.shift.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    auto gn = state.scale.node();
    auto bn = state.shift.node();
    node->backward_fn = [xn, gn, bn, B, C, H, W, N, mean, inv_std, training](Node<T>& self) {
      const T* g = self.grad.data();
      const T* x = xn->value.data();
      const T* gamma = gn->value.data();
      T* gx = grad_sink(xn);
      T* gg = grad_sink(gn);
      T* gb = grad_sink(bn);
      for (int64_t c = 0; c < C; ++c) {
        const T mu = mean[static_cast<size_t>(c)], is = inv_std[static_cast<size_t>(c)];
        double sum_g = 0, sum_gxh = 0;
        for (int64_t n = 0; n < B; ++n) {
          const T* gp = g + ((n * C + c) * H) * W;
          const T* xp = x + ((n * C + c) * H) * W;
          for (int64_t i = 0; i < H * W; ++i) {
            sum_g += static_cast<double>(gp[i]);
            sum_gxh += static_cast<double>(gp[i]) * static_cast<double>((xp[i] - mu) * is);
          }
        }
        if (gg) gg[c] += static_cast<T>(sum_gxh);
        if (gb) gb[c] += static_cast<T>(sum_g);
        if (gx) {
          const double invN = 1.0 / static_cast<double>(N);
          for (int64_t n = 0; n < B; ++n) {
            const T* gp = g + ((n * C + c) * H) * W;
            const T* xp = x + ((n * C + c) * H) * W;
            T* gxp = gx + ((n * C + c) * H) * W;
            for (int64_t i = 0; i < H * W; ++i) {
              const double xh = static_cast<double>((xp[i] - mu) * is);
              double d;
              if (training) {
                d = static_cast<double>(gp[i]) - sum_g * invN - xh * sum_gxh * invN;
              } else {
                d = static_cast<double>(gp[i]);
              }
              gxp[i] += static_cast<T>(d * static_cast<double>(gamma[c]) * static_cast<double>(is));
            }
          }
        }
      }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- activations ----------------------------------------------------------------

template <class T>
Tensor<T> relu(const Tensor<T>& input) {
  std::vector<T> out(input.data().begin(), input.data().end());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  auto node = make_result<T>(input.shape(), std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      const T* x = xn->value.data();
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (x[i] > T(0)) gx[i] += g[i];
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

template <class T>
Tensor<T> tanh_act(const Tensor<T>& input) {
  std::vector<T> out(input.data().begin(), input.data().end());
  for (auto& v : out) v = std::tanh(v);
  auto node = make_result<T>(input.shape(), std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      const T* y = self.value.data();
      for (size_t i = 0; i < self.grad.size(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- dense / log_softmax ---------------------------------------------------------

template <class T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  expect_rank(input, 2, "dense");
  expect_rank(weight, 2, "dense weight");
  expect_rank(bias, 1, "dense bias");
  const int64_t B = input.dim(0), N = input.dim(1), P = weight.dim(0);
  expect(weight.dim(1) == N, "dense: weight width " + std::to_string(weight.dim(1)) +
                                 " does not match input width " + std::to_string(N));
  expect(bias.dim(0) == P, "dense: bias length does not match output width");

  std::vector<T> out(static_cast<size_t>(B * P));
  const T* x = input.data().data();
  const T* w = weight.data().data();
  const T* b = bias.data().data();
  for (int64_t n = 0; n < B; ++n)
    for (int64_t p = 0; p < P; ++p) {
      T acc = b[p];
      const T* xr = x + n * N;
      const T* wr = w + p * N;
      for (int64_t i = 0; i < N; ++i) acc += xr[i] * wr[i];
      out[static_cast<size_t>(n * P + p)] = acc;
    }
  auto node =
      make_result<T>({B, P}, std::move(out), {input.node(), weight.node(), bias.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    auto wn = weight.node();
    auto bn = bias.node();
    node->backward_fn = [xn, wn, bn, B, N, P](Node<T>& self) {
      const T* g = self.grad.data();
      const T* x = xn->value.data();
      const T* w = wn->value.data();
      T* gx = grad_sink(xn);
      T* gw = grad_sink(wn);
      T* gb = grad_sink(bn);
      for (int64_t n = 0; n < B; ++n)
        for (int64_t p = 0; p < P; ++p) {
          const T gv = g[n * P + p];
          if (gv == T(0)) continue;
          if (gb) gb[p] += gv;
          for (int64_t i = 0; i < N; ++i) {
            if (gx) gx[n * N + i] += gv * w[p * N + i];
            if (gw) gw[p * N + i] += gv * x[n * N + i];
          }
        }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

template <class T>
Tensor<T> log_softmax(const Tensor<T>& input) {
  expect_rank(input, 2, "log_softmax");
  const int64_t B = input.dim(0), P = input.dim(1);
  expect(P >= 1, "log_softmax: empty rows");
  std::vector<T> out(static_cast<size_t>(B * P));
  const T* x = input.data().data();
  for (int64_t n = 0; n < B; ++n) {
    const T* xr = x + n * P;
    T mx = xr[0];
    for (int64_t p = 1; p < P; ++p) mx = std::max(mx, xr[p]);
    double lse = 0;
    for (int64_t p = 0; p < P; ++p) lse += std::exp(static_cast<double>(xr[p] - mx));
    const T shift = mx + static_cast<T>(std::log(lse));
    for (int64_t p = 0; p < P; ++p) out[static_cast<size_t>(n * P + p)] = xr[p] - shift;
  }
  auto node = make_result<T>({B, P}, std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn, B, P](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      const T* y = self.value.data();
      for (int64_t n = 0; n < B; ++n) {
        double gsum = 0;
        for (int64_t p = 0; p < P; ++p) gsum += static_cast<double>(g[n * P + p]);
        for (int64_t p = 0; p < P; ++p)
          gx[n * P + p] += g[n * P + p] -
                           static_cast<T>(std::exp(static_cast<double>(y[n * P + p])) * gsum);
      }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- concat / polyphase ------------------------------------------------------------

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& inputs, int axis) {
  expect(!inputs.empty(), "concat: no inputs");
  const int rank = inputs[0].ndim();
  expect(axis >= 0 && axis < rank, "concat: axis out of range");
  Shape out_shape = inputs[0].shape();
  for (size_t k = 1; k < inputs.size(); ++k) {
    expect(inputs[k].ndim() == rank, "concat: rank mismatch");
    for (int d = 0; d < rank; ++d) {
      if (d == axis) continue;
      expect(inputs[k].dim(d) == out_shape[static_cast<size_t>(d)],
             "concat: extent mismatch on axis " + std::to_string(d) + " between " +
                 shape_str(inputs[0].shape()) + " and " + shape_str(inputs[k].shape()));
    }
    out_shape[static_cast<size_t>(axis)] += inputs[k].dim(axis);
  }

  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= out_shape[static_cast<size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= out_shape[static_cast<size_t>(d)];
  const int64_t total_axis = out_shape[static_cast<size_t>(axis)];

  std::vector<T> out(static_cast<size_t>(outer * total_axis * inner));
  std::vector<int64_t> offsets(inputs.size());
  {
    int64_t off = 0;
    for (size_t k = 0; k < inputs.size(); ++k) {
      offsets[k] = off;
      off += inputs[k].dim(axis);
    }
  }
  for (size_t k = 0; k < inputs.size(); ++k) {
    const int64_t ak = inputs[k].dim(axis);
    const T* x = inputs[k].data().data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy(x + o * ak * inner, x + (o + 1) * ak * inner,
                out.data() + (o * total_axis + offsets[k]) * inner);
  }

  std::vector<std::shared_ptr<Node<T>>> parents;
  parents.reserve(inputs.size());
  std::vector<int64_t> axis_sizes(inputs.size());
  for (size_t k = 0; k < inputs.size(); ++k) {
    parents.push_back(inputs[k].node());
    axis_sizes[k] = inputs[k].dim(axis);
  }
  auto node = make_result<T>(out_shape, std::move(out), std::move(parents));
  if (node->requires_grad) {
    auto srcs = node->parents;  // copy: same order as inputs
    node->backward_fn = [srcs, offsets, axis_sizes, outer, inner, total_axis](Node<T>& self) {
      const T* g = self.grad.data();
      for (size_t k = 0; k < srcs.size(); ++k) {
        T* gp = grad_sink(srcs[k]);
        if (!gp) continue;
        const int64_t ak = axis_sizes[k];
        for (int64_t o = 0; o < outer; ++o) {
          const T* gsrc = g + (o * total_axis + offsets[k]) * inner;
          T* gdst = gp + o * ak * inner;
          for (int64_t i = 0; i < ak * inner; ++i) gdst[i] += gsrc[i];
        }
      }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

namespace {

// take_even/take_odd share one kernel; phase is 0 or 1.
template <class T>
Tensor<T> take_phase(const Tensor<T>& input, int axis, int phase) {
  const int rank = input.ndim();
  expect(axis >= 0 && axis < rank, "split_even_odd: axis out of range");
  const int64_t extent = input.dim(axis);
  expect(extent >= 2 && extent % 2 == 0, "split_even_odd: extent " + std::to_string(extent) +
                                             " along axis " + std::to_string(axis) +
                                             " must be even and >= 2");
  Shape out_shape = input.shape();
  out_shape[static_cast<size_t>(axis)] = extent / 2;
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= input.dim(d);
  for (int d = axis + 1; d < rank; ++d) inner *= input.dim(d);

  std::vector<T> out(static_cast<size_t>(outer * (extent / 2) * inner));
  const T* x = input.data().data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t a = 0; a < extent / 2; ++a)
      std::copy(x + (o * extent + 2 * a + phase) * inner, x + (o * extent + 2 * a + phase + 1) * inner,
                out.data() + (o * (extent / 2) + a) * inner);

  auto node = make_result<T>(out_shape, std::move(out), {input.node()});
  if (node->requires_grad) {
    auto xn = input.node();
    node->backward_fn = [xn, outer, inner, extent, phase](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T* g = self.grad.data();
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t a = 0; a < extent / 2; ++a) {
          const T* gsrc = g + (o * (extent / 2) + a) * inner;
          T* gdst = gx + (o * extent + 2 * a + phase) * inner;
          for (int64_t i = 0; i < inner; ++i) gdst[i] += gsrc[i];
        }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

}  // namespace

template <class T>
Tensor<T> take_even(const Tensor<T>& input, int axis) {
  return take_phase(input, axis, 0);
}

template <class T>
Tensor<T> take_odd(const Tensor<T>& input, int axis) {
  return take_phase(input, axis, 1);
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> split_even_odd(const Tensor<T>& input, int axis) {
  return {take_even(input, axis), take_odd(input, axis)};
}

template <class T>
Tensor<T> interleave(const Tensor<T>& even, const Tensor<T>& odd, int axis) {
  expect(even.shape() == odd.shape(), "interleave: shapes differ, " + shape_str(even.shape()) +
                                          " vs " + shape_str(odd.shape()));
  const int rank = even.ndim();
  expect(axis >= 0 && axis < rank, "interleave: axis out of range");
  Shape out_shape = even.shape();
  const int64_t half = out_shape[static_cast<size_t>(axis)];
  out_shape[static_cast<size_t>(axis)] = 2 * half;
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= even.dim(d);
  for (int d = axis + 1; d < rank; ++d) inner *= even.dim(d);

  std::vector<T> out(static_cast<size_t>(outer * 2 * half * inner));
  const T* e = even.data().data();
  const T* o_ = odd.data().data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t a = 0; a < half; ++a) {
      std::copy(e + (o * half + a) * inner, e + (o * half + a + 1) * inner,
                out.data() + (o * 2 * half + 2 * a) * inner);
      std::copy(o_ + (o * half + a) * inner, o_ + (o * half + a + 1) * inner,
                out.data() + (o * 2 * half + 2 * a + 1) * inner);
    }

  auto node = make_result<T>(out_shape, std::move(out), {even.node(), odd.node()});
  if (node->requires_grad) {
    auto en = even.node();
    auto on = odd.node();
    node->backward_fn = [en, on, outer, inner, half](Node<T>& self) {
      const T* g = self.grad.data();
      T* ge = grad_sink(en);
      T* go = grad_sink(on);
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t a = 0; a < half; ++a) {
          if (ge) {
            const T* gsrc = g + (o * 2 * half + 2 * a) * inner;
            T* gdst = ge + (o * half + a) * inner;
            for (int64_t i = 0; i < inner; ++i) gdst[i] += gsrc[i];
          }
          if (go) {
            const T* gsrc = g + (o * 2 * half + 2 * a + 1) * inner;
            T* gdst = go + (o * half + a) * inner;
            for (int64_t i = 0; i < inner; ++i) gdst[i] += gsrc[i];
          }
        }
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- elementwise -------------------------------------------------------------------

namespace {

template <class T, class Fwd, class Bwd>
Tensor<T> binary_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* name, Fwd fwd,
                            Bwd bwd) {
  expect(a.shape() == b.shape(), std::string(name) + ": shapes differ, " + shape_str(a.shape()) +
                                     " vs " + shape_str(b.shape()));
  std::vector<T> out(a.data().size());
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(pa[i], pb[i]);
  auto node = make_result<T>(a.shape(), std::move(out), {a.node(), b.node()});
  if (node->requires_grad) {
    auto an = a.node();
    auto bn = b.node();
    node->backward_fn = [an, bn, bwd](Node<T>& self) {
      T* ga = grad_sink(an);
      T* gb = grad_sink(bn);
      const T* g = self.grad.data();
      const T* pa = an->value.data();
      const T* pb = bn->value.data();
      for (size_t i = 0; i < self.grad.size(); ++i) bwd(g[i], pa[i], pb[i], ga ? ga + i : nullptr,
                                                        gb ? gb + i : nullptr);
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

}  // namespace

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_same_shape(
      a, b, "add", [](T x, T y) { return x + y; },
      [](T g, T, T, T* ga, T* gb) {
        if (ga) *ga += g;
        if (gb) *gb += g;
      });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_same_shape(
      a, b, "sub", [](T x, T y) { return x - y; },
      [](T g, T, T, T* ga, T* gb) {
        if (ga) *ga += g;
        if (gb) *gb -= g;
      });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_same_shape(
      a, b, "mul", [](T x, T y) { return x * y; },
      [](T g, T x, T y, T* ga, T* gb) {
        if (ga) *ga += g * y;
        if (gb) *gb += g * x;
      });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  auto node = make_result<T>(a.shape(), std::move(out), {a.node()});
  if (node->requires_grad) {
    auto an = a.node();
    node->backward_fn = [an, factor](Node<T>& self) {
      T* ga = grad_sink(an);
      if (!ga) return;
      const T* g = self.grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += g[i] * factor;
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- reductions ---------------------------------------------------------------------

namespace {

// Scalar-valued reduction with an elementwise local derivative.
template <class T, class Fwd, class Deriv>
Tensor<T> reduce_scalar(const Tensor<T>& a, Fwd fwd, Deriv deriv) {
  double acc = 0;
  const T* pa = a.data().data();
  for (size_t i = 0; i < a.data().size(); ++i) acc += static_cast<double>(fwd(pa[i]));
  auto node = make_result<T>({}, {static_cast<T>(acc)}, {a.node()});
  if (node->requires_grad) {
    auto an = a.node();
    node->backward_fn = [an, deriv](Node<T>& self) {
      T* ga = grad_sink(an);
      if (!ga) return;
      const T g = self.grad[0];
      const T* pa = an->value.data();
      for (size_t i = 0; i < an->value.size(); ++i) ga[i] += g * deriv(pa[i]);
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

}  // namespace

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  return reduce_scalar(
      a, [](T x) { return x; }, [](T) { return T(1); });
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& a) {
  expect(a.numel() >= 1, "mean_all: empty tensor");
  const T inv = T(1) / static_cast<T>(a.numel());
  return reduce_scalar(
      a, [inv](T x) { return x * inv; }, [inv](T) { return inv; });
}

template <class T>
Tensor<T> sum_squares(const Tensor<T>& a) {
  return reduce_scalar(
      a, [](T x) { return x * x; }, [](T x) { return T(2) * x; });
}

template <class T>
Tensor<T> huber_sum(const Tensor<T>& a, T delta) {
  expect(delta > T(0), "huber_sum: delta must be positive");
  return reduce_scalar(
      a,
      [delta](T x) {
        T ax = std::abs(x);
        return ax <= delta ? x * x / T(2) : delta * (ax - delta / T(2));
      },
      [delta](T x) {
        T ax = std::abs(x);
        if (ax <= delta) return x;
        return x > T(0) ? delta : -delta;
      });
}

template <class T>
Tensor<T> nll_loss(const Tensor<T>& log_probs, const std::vector<int>& labels) {
  expect_rank(log_probs, 2, "nll_loss");
  const int64_t B = log_probs.dim(0), P = log_probs.dim(1);
  expect(static_cast<int64_t>(labels.size()) == B, "nll_loss: label count does not match batch");
  for (int y : labels)
    expect(y >= 0 && y < P, "nll_loss: label " + std::to_string(y) + " out of range [0," +
                                std::to_string(P) + ")");
  double acc = 0;
  const T* lp = log_probs.data().data();
  for (int64_t n = 0; n < B; ++n) acc -= static_cast<double>(lp[n * P + labels[static_cast<size_t>(n)]]);
  acc /= static_cast<double>(B);
  auto node = make_result<T>({}, {static_cast<T>(acc)}, {log_probs.node()});
  if (node->requires_grad) {
    auto xn = log_probs.node();
    node->backward_fn = [xn, labels, B, P](Node<T>& self) {
      T* gx = grad_sink(xn);
      if (!gx) return;
      const T g = self.grad[0] / static_cast<T>(B);
      for (int64_t n = 0; n < B; ++n) gx[n * P + labels[static_cast<size_t>(n)]] -= g;
    };
  }
  return Tensor<T>::wrap(std::move(node));
}

// ---- explicit instantiations ----------------------------------------------------------

#define DAWN_INSTANTIATE_TENSOR(T)                                                            \
  template class Tensor<T>;                                                                   \
  template struct BatchNormState<T>;                                                          \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);  \
  template Tensor<T> reflect_pad(const Tensor<T>&, int, int, int, int);                       \
  template Tensor<T> zero_pad(const Tensor<T>&, int, int, int, int);                          \
  template Tensor<T> avg_pool(const Tensor<T>&, int);                                         \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                       \
  template Tensor<T> batch_norm(const Tensor<T>&, BatchNormState<T>&, bool);                  \
  template Tensor<T> relu(const Tensor<T>&);                                                  \
  template Tensor<T> tanh_act(const Tensor<T>&);                                              \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> log_softmax(const Tensor<T>&);                                           \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                              \
  template Tensor<T> take_even(const Tensor<T>&, int);                                        \
  template Tensor<T> take_odd(const Tensor<T>&, int);                                         \
  template std::pair<Tensor<T>, Tensor<T>> split_even_odd(const Tensor<T>&, int);             \
  template Tensor<T> interleave(const Tensor<T>&, const Tensor<T>&, int);                     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                              \
  template Tensor<T> sum(const Tensor<T>&);                                                   \
  template Tensor<T> mean_all(const Tensor<T>&);                                              \
  template Tensor<T> sum_squares(const Tensor<T>&);                                           \
  template Tensor<T> huber_sum(const Tensor<T>&, T);                                          \
  template Tensor<T> nll_loss(const Tensor<T>&, const std::vector<int>&);

DAWN_INSTANTIATE_TENSOR(float)
DAWN_INSTANTIATE_TENSOR(double)

#undef DAWN_INSTANTIATE_TENSOR

}  // namespace dawn
