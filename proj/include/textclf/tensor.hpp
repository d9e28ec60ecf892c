#pragma once
// Dense n-dimensional arrays with reverse-mode automatic differentiation.
//
// A Tensor<S> is a shared handle to a value buffer plus an optional position
// in a gradient graph. Forward operations are free functions; when gradient
// tracking is enabled and an operand participates in the graph, the result
// node records its parents and a backward closure. backward(loss) replays the
// closures in reverse topological order, accumulating gradients additively at
// fan-out points. With tracking disabled the same numeric kernels run and no
// graph is built, so untracked forward evaluation is bit-identical.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace textclf {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

namespace detail {

template <typename S>
struct Node {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::function<void(Node<S>&)> backprop;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), S(0));
  }
};

inline bool& grad_mode() {
  static thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Disables gradient recording on the current thread while alive.
struct NoGradGuard {
  NoGradGuard() : prev_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename S>
class Tensor {
 public:
  using Node = detail::Node<S>;
  using NodePtr = std::shared_ptr<Node>;

  Tensor() = default;

  static Tensor zeros(Shape shape) { return filled(std::move(shape), S(0)); }

  static Tensor filled(Shape shape, S v) {
    auto n = std::make_shared<Node>();
    n->value.assign(static_cast<std::size_t>(numel(shape)), v);
    n->shape = std::move(shape);
    return Tensor(std::move(n));
  }

  static Tensor from(Shape shape, std::vector<S> data) {
    if (numel(shape) != static_cast<std::int64_t>(data.size())) {
      throw std::invalid_argument("Tensor::from: shape " + shape_str(shape) +
                                  " does not match buffer of length " +
                                  std::to_string(data.size()));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    return Tensor(std::move(n));
  }

  static Tensor scalar(S v) { return from({}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->value.size()); }
  std::int64_t dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }

  std::span<const S> values() const { return {node_->value.data(), node_->value.size()}; }
  std::span<S> values_mut() { return {node_->value.data(), node_->value.size()}; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const S> grad() const {
    if (node_->grad.empty()) throw std::logic_error("Tensor::grad: no gradient recorded");
    return {node_->grad.data(), node_->grad.size()};
  }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), S(0)); }

  void set_requires_grad(bool b) { node_->requires_grad = b; }
  bool requires_grad() const { return node_->requires_grad; }

  S item() const {
    if (size() != 1) {
      throw std::invalid_argument("Tensor::item: tensor of shape " + shape_str(shape()) +
                                  " is not a scalar");
    }
    return node_->value[0];
  }

  // Graph internals, used by the layer kernels and the checker.
  const NodePtr& node() const { return node_; }
  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;
};

namespace detail {

/// Builds the result node of an op. Parents and the backward closure are kept
/// only when tracking is on and some parent participates in the graph.
template <typename S>
Tensor<S> make_result(Shape shape, std::vector<S> value,
                      std::vector<std::shared_ptr<Node<S>>> parents,
                      std::function<void(Node<S>&)> backprop) {
  auto n = std::make_shared<Node<S>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (grad_mode()) {
    bool any = false;
    for (const auto& p : parents) any = any || (p && p->requires_grad);
    if (any) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backprop = std::move(backprop);
    }
  }
  return Tensor<S>::wrap(std::move(n));
}

// Trailing-dimension broadcast plan: output shape plus per-operand strides
// aligned to the output rank, zero on broadcast dimensions.
struct BcPlan {
  Shape out;
  std::vector<std::int64_t> sa, sb;
};

inline BcPlan make_bc(const Shape& a, const Shape& b, const char* opname) {
  const int ra = static_cast<int>(a.size());
  const int rb = static_cast<int>(b.size());
  const int r = std::max(ra, rb);
  BcPlan p;
  p.out.assign(static_cast<std::size_t>(r), 1);
  for (int i = 1; i <= r; ++i) {
    const std::int64_t da = i <= ra ? a[static_cast<std::size_t>(ra - i)] : 1;
    const std::int64_t db = i <= rb ? b[static_cast<std::size_t>(rb - i)] : 1;
    if (da != db && da != 1 && db != 1) {
      throw std::invalid_argument(std::string(opname) + ": shapes " + shape_str(a) +
                                  " and " + shape_str(b) + " are not broadcastable");
    }
    p.out[static_cast<std::size_t>(r - i)] = std::max(da, db);
  }
  auto strides_for = [&](const Shape& s) {
    std::vector<std::int64_t> st(static_cast<std::size_t>(r), 0);
    std::int64_t acc = 1;
    const int rs = static_cast<int>(s.size());
    for (int i = 1; i <= rs; ++i) {
      const std::size_t k = static_cast<std::size_t>(rs - i);
      st[static_cast<std::size_t>(r - i)] = (s[k] == 1) ? 0 : acc;
      acc *= s[k];
    }
    return st;
  };
  p.sa = strides_for(a);
  p.sb = strides_for(b);
  return p;
}

/// Walks the broadcast index space calling f(out_index, a_index, b_index).
template <class F>
void bc_walk(const BcPlan& p, F f) {
  const std::int64_t n = numel(p.out);
  const int r = static_cast<int>(p.out.size());
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  std::int64_t ia = 0, ib = 0;
  for (std::int64_t i = 0;;) {
    f(i, ia, ib);
    if (++i == n) break;
    for (int d = r - 1;; --d) {
      const auto du = static_cast<std::size_t>(d);
      ia += p.sa[du];
      ib += p.sb[du];
      if (++idx[du] < p.out[du]) break;
      ia -= p.sa[du] * p.out[du];
      ib -= p.sb[du] * p.out[du];
      idx[du] = 0;
    }
  }
}

template <typename S>
using MatMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using MutMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops with trailing-dimension broadcasting.
// ---------------------------------------------------------------------------

namespace detail {

template <typename S, class Fwd, class Bwd>
Tensor<S> ew_binary(const Tensor<S>& a, const Tensor<S>& b, const char* name, Fwd fwd, Bwd bwd) {
  const BcPlan plan = make_bc(a.shape(), b.shape(), name);
  std::vector<S> out(static_cast<std::size_t>(numel(plan.out)));
  const auto an = a.node();
  const auto bn = b.node();
  bc_walk(plan, [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
    out[static_cast<std::size_t>(i)] =
        fwd(an->value[static_cast<std::size_t>(ia)], bn->value[static_cast<std::size_t>(ib)]);
  });
  return make_result<S>(
      plan.out, std::move(out), {an, bn}, [an, bn, plan, bwd](Node<S>& self) {
        const bool ga = an->requires_grad;
        const bool gb = bn->requires_grad;
        if (ga) an->ensure_grad();
        if (gb) bn->ensure_grad();
        bc_walk(plan, [&](std::int64_t i, std::int64_t ia, std::int64_t ib) {
          bwd(self.grad[static_cast<std::size_t>(i)], an->value[static_cast<std::size_t>(ia)],
              bn->value[static_cast<std::size_t>(ib)],
              ga ? &an->grad[static_cast<std::size_t>(ia)] : nullptr,
              gb ? &bn->grad[static_cast<std::size_t>(ib)] : nullptr);
        });
      });
}

}  // namespace detail

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::ew_binary(
      a, b, "add", [](S x, S y) { return x + y; },
      [](S g, S, S, S* ga, S* gb) {
        if (ga) *ga += g;
        if (gb) *gb += g;
      });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::ew_binary(
      a, b, "sub", [](S x, S y) { return x - y; },
      [](S g, S, S, S* ga, S* gb) {
        if (ga) *ga += g;
        if (gb) *gb -= g;
      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::ew_binary(
      a, b, "mul", [](S x, S y) { return x * y; },
      [](S g, S x, S y, S* ga, S* gb) {
        if (ga) *ga += g * y;
        if (gb) *gb += g * x;
      });
}

template <typename S>
Tensor<S> mul_scalar(const Tensor<S>& a, S c) {
  const auto an = a.node();
  std::vector<S> out(an->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->value[i] * c;
  return detail::make_result<S>(a.shape(), std::move(out), {an}, [an, c](detail::Node<S>& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * c;
  });
}

template <typename S>
Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) { return add(a, b); }
template <typename S>
Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b) { return sub(a, b); }
template <typename S>
Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b) { return mul(a, b); }

// ---------------------------------------------------------------------------
// Matrix product.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const auto an = a.node();
  const auto bn = b.node();
  std::vector<S> out(static_cast<std::size_t>(m * n));
  detail::MutMap<S>(out.data(), m, n).noalias() =
      detail::MatMap<S>(an->value.data(), m, k) * detail::MatMap<S>(bn->value.data(), k, n);
  return detail::make_result<S>(
      {m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](detail::Node<S>& self) {
        detail::MatMap<S> g(self.grad.data(), m, n);
        if (an->requires_grad) {
          an->ensure_grad();
          detail::MutMap<S>(an->grad.data(), m, k).noalias() +=
              g * detail::MatMap<S>(bn->value.data(), k, n).transpose();
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          detail::MutMap<S>(bn->grad.data(), k, n).noalias() +=
              detail::MatMap<S>(an->value.data(), m, k).transpose() * g;
        }
      });
}

// ---------------------------------------------------------------------------
// Activations.
// ---------------------------------------------------------------------------

/// Branch form: never exponentiates a positive argument, so no overflow.
template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) {
    const S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  const auto xn = x.node();
  std::vector<S> out(xn->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(xn->value[i]);
  return detail::make_result<S>(x.shape(), std::move(out), {xn}, [xn](detail::Node<S>& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const S y = self.value[i];
      xn->grad[i] += self.grad[i] * y * (S(1) - y);
    }
  });
}

template <typename S>
Tensor<S> tanh_act(const Tensor<S>& x) {
  const auto xn = x.node();
  std::vector<S> out(xn->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xn->value[i]);
  return detail::make_result<S>(x.shape(), std::move(out), {xn}, [xn](detail::Node<S>& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const S y = self.value[i];
      xn->grad[i] += self.grad[i] * (S(1) - y * y);
    }
  });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  const auto xn = x.node();
  std::vector<S> out(xn->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xn->value[i] > S(0) ? xn->value[i] : S(0);
  return detail::make_result<S>(x.shape(), std::move(out), {xn}, [xn](detail::Node<S>& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (xn->value[i] > S(0)) xn->grad[i] += self.grad[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and reshaping.
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  const auto xn = x.node();
  S acc = S(0);
  for (const S v : xn->value) acc += v;
  return detail::make_result<S>({}, {acc}, {xn}, [xn](detail::Node<S>& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const S g = self.grad[0];
    for (auto& gi : xn->grad) gi += g;
  });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  const auto xn = x.node();
  const S inv = S(1) / static_cast<S>(xn->value.size());
  S acc = S(0);
  for (const S v : xn->value) acc += v;
  return detail::make_result<S>({}, {acc * inv}, {xn}, [xn, inv](detail::Node<S>& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const S g = self.grad[0] * inv;
    for (auto& gi : xn->grad) gi += g;
  });
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                shape_str(shape));
  }
  const auto xn = x.node();
  std::vector<S> out = xn->value;
  return detail::make_result<S>(std::move(shape), std::move(out), {xn},
                                [xn](detail::Node<S>& self) {
                                  if (!xn->requires_grad) return;
                                  xn->ensure_grad();
                                  for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                    xn->grad[i] += self.grad[i];
                                  }
                                });
}

// ---------------------------------------------------------------------------
// Sequence plumbing: time-axis slicing, stacking, reversal, feature concat.
// All of these treat rank-3 tensors as (batch, time, features).
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> slice_time(const Tensor<S>& x, std::int64_t t) {
  if (x.rank() != 3) throw std::invalid_argument("slice_time: expected rank-3 input");
  const auto n = x.dim(0), len = x.dim(1), c = x.dim(2);
  if (t < 0 || t >= len) throw std::invalid_argument("slice_time: index out of range");
  const auto xn = x.node();
  std::vector<S> out(static_cast<std::size_t>(n * c));
  for (std::int64_t s = 0; s < n; ++s) {
    const S* src = xn->value.data() + (s * len + t) * c;
    std::copy(src, src + c, out.data() + s * c);
  }
  return detail::make_result<S>({n, c}, std::move(out), {xn},
                                [xn, n, len, c, t](detail::Node<S>& self) {
                                  if (!xn->requires_grad) return;
                                  xn->ensure_grad();
                                  for (std::int64_t s = 0; s < n; ++s) {
                                    S* dst = xn->grad.data() + (s * len + t) * c;
                                    const S* g = self.grad.data() + s * c;
                                    for (std::int64_t j = 0; j < c; ++j) dst[j] += g[j];
                                  }
                                });
}

/// Stacks T rank-2 tensors of shape (n, c) into (n, T, c).
template <typename S>
Tensor<S> stack_time(const std::vector<Tensor<S>>& steps) {
  if (steps.empty()) throw std::invalid_argument("stack_time: no steps");
  const auto n = steps[0].dim(0), c = steps[0].dim(1);
  const auto len = static_cast<std::int64_t>(steps.size());
  std::vector<typename Tensor<S>::NodePtr> parents;
  parents.reserve(steps.size());
  std::vector<S> out(static_cast<std::size_t>(n * len * c));
  for (std::int64_t t = 0; t < len; ++t) {
    const auto& st = steps[static_cast<std::size_t>(t)];
    if (st.rank() != 2 || st.dim(0) != n || st.dim(1) != c) {
      throw std::invalid_argument("stack_time: inconsistent step shapes");
    }
    parents.push_back(st.node());
    for (std::int64_t s = 0; s < n; ++s) {
      const S* src = st.node()->value.data() + s * c;
      std::copy(src, src + c, out.data() + (s * len + t) * c);
    }
  }
  auto ps = parents;
  return detail::make_result<S>(
      {n, len, c}, std::move(out), std::move(parents), [ps, n, len, c](detail::Node<S>& self) {
        for (std::int64_t t = 0; t < len; ++t) {
          const auto& p = ps[static_cast<std::size_t>(t)];
          if (!p->requires_grad) continue;
          p->ensure_grad();
          for (std::int64_t s = 0; s < n; ++s) {
            const S* g = self.grad.data() + (s * len + t) * c;
            S* dst = p->grad.data() + s * c;
            for (std::int64_t j = 0; j < c; ++j) dst[j] += g[j];
          }
        }
      });
}

template <typename S>
Tensor<S> reverse_time(const Tensor<S>& x) {
  if (x.rank() != 3) throw std::invalid_argument("reverse_time: expected rank-3 input");
  const auto n = x.dim(0), len = x.dim(1), c = x.dim(2);
  const auto xn = x.node();
  std::vector<S> out(xn->value.size());
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t t = 0; t < len; ++t) {
      const S* src = xn->value.data() + (s * len + t) * c;
      std::copy(src, src + c, out.data() + (s * len + (len - 1 - t)) * c);
    }
  }
  return detail::make_result<S>({n, len, c}, std::move(out), {xn},
                                [xn, n, len, c](detail::Node<S>& self) {
                                  if (!xn->requires_grad) return;
                                  xn->ensure_grad();
                                  for (std::int64_t s = 0; s < n; ++s) {
                                    for (std::int64_t t = 0; t < len; ++t) {
                                      const S* g = self.grad.data() + (s * len + (len - 1 - t)) * c;
                                      S* dst = xn->grad.data() + (s * len + t) * c;
                                      for (std::int64_t j = 0; j < c; ++j) dst[j] += g[j];
                                    }
                                  }
                                });
}

/// Concatenates along the last (feature) axis; ranks 2 and 3 supported.
template <typename S>
Tensor<S> concat_last(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != b.rank() || (a.rank() != 2 && a.rank() != 3)) {
    throw std::invalid_argument("concat_last: expected two rank-2 or rank-3 tensors");
  }
  Shape lead(a.shape().begin(), a.shape().end() - 1);
  Shape lead_b(b.shape().begin(), b.shape().end() - 1);
  if (lead != lead_b) {
    throw std::invalid_argument("concat_last: leading dimensions disagree: " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const auto ca = a.shape().back(), cb = b.shape().back();
  const auto rows = numel(lead);
  const auto an = a.node();
  const auto bn = b.node();
  std::vector<S> out(static_cast<std::size_t>(rows * (ca + cb)));
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy(an->value.data() + r * ca, an->value.data() + (r + 1) * ca,
              out.data() + r * (ca + cb));
    std::copy(bn->value.data() + r * cb, bn->value.data() + (r + 1) * cb,
              out.data() + r * (ca + cb) + ca);
  }
  Shape oshape = lead;
  oshape.push_back(ca + cb);
  return detail::make_result<S>(
      std::move(oshape), std::move(out), {an, bn}, [an, bn, rows, ca, cb](detail::Node<S>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r) {
            const S* g = self.grad.data() + r * (ca + cb);
            S* dst = an->grad.data() + r * ca;
            for (std::int64_t j = 0; j < ca; ++j) dst[j] += g[j];
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r) {
            const S* g = self.grad.data() + r * (ca + cb) + ca;
            S* dst = bn->grad.data() + r * cb;
            for (std::int64_t j = 0; j < cb; ++j) dst[j] += g[j];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Backward pass.
// ---------------------------------------------------------------------------

/// Seeds d(root)/d(root) = 1 and runs every recorded closure once, in reverse
/// topological order. Interior nodes get a fresh gradient buffer per call;
/// leaves accumulate, so repeated calls without zeroing add up.
template <typename S>
void backward(const Tensor<S>& root) {
  if (root.size() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_str(root.shape()));
  }
  using NodeT = detail::Node<S>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  struct Frame {
    NodeT* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root.node().get(), 0});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      NodeT* p = f.n->parents[f.next++].get();
      if (p && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  for (NodeT* n : order) {
    if (n->backprop) {
      n->ensure_grad();
      std::fill(n->grad.begin(), n->grad.end(), S(0));
    }
  }
  root.node()->ensure_grad();
  root.node()->grad[0] += S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

}  // namespace textclf
