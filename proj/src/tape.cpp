#include "motion/grad/tape.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace motion::grad {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

MapC as_mat(const Tensor& t) {
  return MapC(t.data(), static_cast<Eigen::Index>(t.dim(0)),
              static_cast<Eigen::Index>(t.dim(1)));
}

MapM as_mat(Tensor& t) {
  return MapM(t.data(), static_cast<Eigen::Index>(t.dim(0)),
              static_cast<Eigen::Index>(t.dim(1)));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got " +
                                t.shape_str());
  }
}

}  // namespace

// ---------------------------------------------------------------- store ----

Tensor& ParameterStore::create(const std::string& name, std::vector<std::size_t> shape,
                               Init init) {
  if (index_.count(name)) {
    throw std::invalid_argument("parameter '" + name + "' already registered");
  }
  Tensor value(shape);
  if (init == Init::Glorot) {
    if (value.rank() != 2) {
      throw std::invalid_argument("glorot init requires a rank-2 parameter, got " +
                                  value.shape_str());
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
    Rng rng(derive_seed(seed_, fnv1a64(name)));
    for (std::size_t i = 0; i < value.numel(); ++i) {
      value[i] = rng.uniform(-limit, limit);
    }
  }
  index_[name] = names_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
  m1_.emplace_back(shape);
  m2_.emplace_back(shape);
  return values_.back();
}

std::size_t ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }
  return it->second;
}

Tensor& ParameterStore::ensure(const std::string& name, std::vector<std::size_t> shape,
                               Init init) {
  if (!has(name)) return create(name, std::move(shape), init);
  Tensor& existing = get(name);
  if (existing.shape() != shape) {
    throw std::invalid_argument("parameter '" + name + "' exists with shape " +
                                existing.shape_str() + ", expected " +
                                Tensor(shape).shape_str());
  }
  return existing;
}

Tensor& ParameterStore::get(const std::string& name) { return values_[find(name)]; }
const Tensor& ParameterStore::get(const std::string& name) const {
  return values_[find(name)];
}

std::size_t ParameterStore::total_params() const {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.numel();
  return n;
}

void ParameterStore::restore_values(const std::vector<Tensor>& snap) {
  if (snap.size() != values_.size()) {
    throw std::invalid_argument("parameter snapshot size mismatch");
  }
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (!snap[i].same_shape(values_[i])) {
      throw std::invalid_argument("parameter snapshot shape mismatch for '" + names_[i] +
                                  "'");
    }
    values_[i] = snap[i];
  }
}

// ----------------------------------------------------------------- tape ----

int Tape::push(Tensor value, std::function<void(Tape&, int)> back) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(Var v) const {
  check_valid(v, "tape");
  return nodes_.at(static_cast<std::size_t>(v.id));
}

void Tape::check_valid(Var v, const char* op) {
  if (!v.valid()) {
    throw std::invalid_argument(std::string(op) + ": use of an unset tape variable");
  }
}

Tensor& Tape::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad_of(Var v) {
  check_valid(v, "grad_of");
  return grad_ref(v.id);
}

Var Tape::leaf(Tensor value) { return {push(std::move(value), nullptr)}; }

Var Tape::param(ParameterStore& store, const std::string& name) {
  auto it = param_vars_.find(name);
  if (it != param_vars_.end()) return it->second;
  Var v{push(store.get(name), nullptr)};
  param_vars_[name] = v;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  check_valid(a, "matmul");
  check_valid(b, "matmul");
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  require_rank2("matmul", ta);
  require_rank2("matmul", tb);
  if (ta.dim(1) != tb.dim(0)) shape_error("matmul", ta, tb);

  Tensor out({ta.dim(0), tb.dim(1)});
  as_mat(out).noalias() = as_mat(ta) * as_mat(tb);

  const int ia = a.id, ib = b.id;
  return {push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vb = t.nodes_[ib].value;
    as_mat(t.grad_ref(ia)).noalias() += as_mat(g) * as_mat(vb).transpose();
    as_mat(t.grad_ref(ib)).noalias() += as_mat(va).transpose() * as_mat(g);
  })};
}

Var Tape::add(Var a, Var b) {
  check_valid(a, "add");
  check_valid(b, "add");
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  if (!ta.same_shape(tb)) shape_error("add", ta, tb);
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] + tb[i];
  const int ia = a.id, ib = b.id;
  return {push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_ref(ia);
    Tensor& gb = t.grad_ref(ib);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  })};
}

Var Tape::sub(Var a, Var b) {
  check_valid(a, "sub");
  check_valid(b, "sub");
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  if (!ta.same_shape(tb)) shape_error("sub", ta, tb);
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] - tb[i];
  const int ia = a.id, ib = b.id;
  return {push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_ref(ia);
    Tensor& gb = t.grad_ref(ib);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  })};
}

Var Tape::mul(Var a, Var b) {
  check_valid(a, "mul");
  check_valid(b, "mul");
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] * tb[i];
  const int ia = a.id, ib = b.id;
  return {push(std::move(out), [ia, ib](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vb = t.nodes_[ib].value;
    Tensor& ga = t.grad_ref(ia);
    Tensor& gb = t.grad_ref(ib);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  })};
}

Var Tape::bias_add(Var x, Var b) {
  check_valid(x, "bias_add");
  check_valid(b, "bias_add");
  const Tensor& tx = nodes_[x.id].value;
  const Tensor& tb = nodes_[b.id].value;
  require_rank2("bias_add", tx);
  if (tb.rank() != 1 || tb.dim(0) != tx.dim(1)) shape_error("bias_add", tx, tb);
  Tensor out(tx.shape());
  const std::size_t rows = tx.dim(0), cols = tx.dim(1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = tx[r * cols + c] + tb[c];
  const int ix = x.id, ib = b.id;
  return {push(std::move(out), [ix, ib, rows, cols](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.grad_ref(ix);
    Tensor& gb = t.grad_ref(ib);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        gx[r * cols + c] += g[r * cols + c];
        gb[c] += g[r * cols + c];
      }
  })};
}

Var Tape::concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  std::size_t rows = 0, cols = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_valid(xs[i], "concat");
    const Tensor& t = nodes_[xs[i].id].value;
    require_rank2("concat", t);
    if (i == 0) {
      rows = t.dim(0);
    } else if (t.dim(0) != rows) {
      shape_error("concat", nodes_[xs[0].id].value, t);
    }
    cols += t.dim(1);
  }
  Tensor out({rows, cols});
  std::size_t off = 0;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (Var v : xs) {
    const Tensor& t = nodes_[v.id].value;
    const std::size_t w = t.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) out[r * cols + off + c] = t[r * w + c];
    ids.push_back(v.id);
    widths.push_back(w);
    off += w;
  }
  return {push(std::move(out), [ids, widths, rows, cols](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    std::size_t off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Tensor& gi = t.grad_ref(ids[i]);
      const std::size_t w = widths[i];
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c) gi[r * w + c] += g[r * cols + off + c];
      off += w;
    }
  })};
}

Var Tape::slice(Var x, std::size_t start, std::size_t len) {
  check_valid(x, "slice");
  const Tensor& tx = nodes_[x.id].value;
  require_rank2("slice", tx);
  if (start + len > tx.dim(1)) {
    throw std::invalid_argument("slice: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") exceeds " +
                                tx.shape_str());
  }
  const std::size_t rows = tx.dim(0), cols = tx.dim(1);
  Tensor out({rows, len});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < len; ++c) out[r * len + c] = tx[r * cols + start + c];
  const int ix = x.id;
  return {push(std::move(out), [ix, start, len, rows, cols](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < len; ++c) gx[r * cols + start + c] += g[r * len + c];
  })};
}

Var Tape::relu(Var x) {
  check_valid(x, "relu");
  const Tensor& tx = nodes_[x.id].value;
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = tx[i] > 0.0 ? tx[i] : 0.0;
  const int ix = x.id;
  return {push(std::move(out), [ix](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& vx = t.nodes_[ix].value;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      if (vx[i] > 0.0) gx[i] += g[i];
    }
  })};
}

Var Tape::sigmoid(Var x) {
  check_valid(x, "sigmoid");
  const Tensor& tx = nodes_[x.id].value;
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-tx[i]));
  const int ix = x.id;
  return {push(std::move(out), [ix](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.nodes_[self].value;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  })};
}

Var Tape::tanh(Var x) {
  check_valid(x, "tanh");
  const Tensor& tx = nodes_[x.id].value;
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(tx[i]);
  const int ix = x.id;
  return {push(std::move(out), [ix](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.nodes_[self].value;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  })};
}

Var Tape::dropout(Var x, double rate) {
  check_valid(x, "dropout");
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  }
  if (!training_ || rate == 0.0) return x;

  stochastic_ = true;
  const Tensor& tx = nodes_[x.id].value;
  auto mask = std::make_shared<std::vector<double>>(tx.numel());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : *mask) m = rng_.uniform() < rate ? 0.0 : keep_scale;

  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = tx[i] * (*mask)[i];
  const int ix = x.id;
  return {push(std::move(out), [ix, mask](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * (*mask)[i];
  })};
}

Var Tape::sum(Var x) {
  check_valid(x, "sum");
  const Tensor& tx = nodes_[x.id].value;
  double s = 0.0;
  for (std::size_t i = 0; i < tx.numel(); ++i) s += tx[i];
  const int ix = x.id;
  return {push(Tensor::scalar(s), [ix](Tape& t, int self) {
    const double g = t.nodes_[self].grad[0];
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  })};
}

Var Tape::mean(Var x) {
  check_valid(x, "mean");
  const Tensor& tx = nodes_[x.id].value;
  if (tx.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < tx.numel(); ++i) s += tx[i];
  const double inv_n = 1.0 / static_cast<double>(tx.numel());
  const int ix = x.id;
  return {push(Tensor::scalar(s * inv_n), [ix, inv_n](Tape& t, int self) {
    const double g = t.nodes_[self].grad[0] * inv_n;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  })};
}

Var Tape::square(Var x) {
  check_valid(x, "square");
  const Tensor& tx = nodes_[x.id].value;
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = tx[i] * tx[i];
  const int ix = x.id;
  return {push(std::move(out), [ix](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& vx = t.nodes_[ix].value;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += 2.0 * g[i] * vx[i];
  })};
}

Var Tape::scale(Var x, double c) {
  check_valid(x, "scale");
  const Tensor& tx = nodes_[x.id].value;
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = tx[i] * c;
  const int ix = x.id;
  return {push(std::move(out), [ix, c](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * c;
  })};
}

Var Tape::one_minus(Var x) {
  check_valid(x, "one_minus");
  const Tensor& tx = nodes_[x.id].value;
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 - tx[i];
  const int ix = x.id;
  return {push(std::move(out), [ix](Tape& t, int self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.grad_ref(ix);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] -= g[i];
  })};
}

std::map<std::string, Tensor> Tape::backward(Var loss, const ParameterStore& store) {
  check_valid(loss, "backward");
  const Tensor& lv = nodes_[loss.id].value;
  if (lv.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + lv.shape_str());
  }
  grad_ref(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.has_grad && n.back) n.back(*this, id);
  }

  std::map<std::string, Tensor> grads;
  for (const auto& name : store.names()) {
    auto it = param_vars_.find(name);
    if (it != param_vars_.end() && nodes_[it->second.id].has_grad &&
        it->second.id <= loss.id) {
      grads[name] = nodes_[it->second.id].grad;
    } else {
      grads[name] = Tensor(store.get(name).shape());
    }
  }
  return grads;
}

}  // namespace motion::grad
