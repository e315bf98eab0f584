#include "tagseq/graph.hpp"

#include <algorithm>
#include <cmath>

#include "tagseq/errors.hpp"

namespace tagseq {

Parameter& ParameterStore::create(const std::string& name, Shape shape) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor::zeros(shape);
  p->grad = Tensor::zeros(std::move(shape));
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::create_uniform(const std::string& name, Shape shape, Rng& rng,
                                          double lo, double hi) {
  Parameter& p = create(name, std::move(shape));
  for (double& v : p.value.data) v = rng.uniform(lo, hi);
  return p;
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParameterStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw ContractError("unknown parameter: " + name);
  return *p;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_)
    for (double g : p->grad.data) sq += g * g;
  return std::sqrt(sq);
}

namespace {

// Elementwise accumulate; shapes may differ in rank but must agree in size.
void acc(Tensor& dst, const Tensor& src) {
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

int Graph::check(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw ContractError("invalid graph node handle");
  return v.id;
}

Var Graph::push(const char* op, std::vector<int> inputs, Tensor value,
                std::function<void(Graph&, Node&)> pull) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.grad.defined()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

const Tensor& Graph::grad(Var v) {
  return grad_buf(check(v));
}

Var Graph::input(Tensor value) { return push("input", {}, std::move(value), nullptr); }

Var Graph::param(Parameter& p) {
  Var v = push("param", {}, p.value, nullptr);
  nodes_[v.id].bound = &p;
  return v;
}

Var Graph::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  const int ia = check(a), ib = check(b);
  Tensor out = kernels::matmul(nodes_[ia].value, nodes_[ib].value, trans_a, trans_b);
  return push("matmul", {ia, ib}, std::move(out), [trans_a, trans_b](Graph& g, Node& self) {
    const Tensor& gc = self.grad;
    const Tensor& av = g.nodes_[self.inputs[0]].value;
    const Tensor& bv = g.nodes_[self.inputs[1]].value;
    // With A' = op(A), B' = op(B): dA' = dC B'^T, dB' = A'^T dC.
    Tensor da2, db2;
    if (!trans_b) da2 = kernels::matmul(gc, bv, false, true);
    else da2 = kernels::matmul(gc, bv, false, false);
    if (trans_a) da2 = kernels::transpose(da2);
    if (!trans_a) db2 = kernels::matmul(av, gc, true, false);
    else db2 = kernels::matmul(av, gc, false, false);
    if (trans_b) db2 = kernels::transpose(db2);
    acc(g.grad_buf(self.inputs[0]), da2);
    acc(g.grad_buf(self.inputs[1]), db2);
  });
}

Var Graph::add(Var a, Var b) {
  const int ia = check(a), ib = check(b);
  const Tensor& av = nodes_[ia].value;
  const Tensor& bv = nodes_[ib].value;
  Tensor out = av;
  enum class Mode { same, row, scalar } mode;
  if (bv.numel() == 1) {
    mode = Mode::scalar;
    for (double& v : out.data) v += bv.data[0];
  } else if (av.same_shape(bv) || av.numel() == bv.numel()) {
    mode = Mode::same;
    if (av.numel() != bv.numel())
      throw ShapeError("add shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  } else if (bv.rows() == 1 && bv.cols() == av.cols()) {
    mode = Mode::row;
    const int r = av.rows(), c = av.cols();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out.at(i, j) += bv.data[j];
  } else {
    throw ShapeError("add shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  return push("add", {ia, ib}, std::move(out), [mode](Graph& g, Node& self) {
    const Tensor& gv = self.grad;
    acc(g.grad_buf(self.inputs[0]), gv);
    Tensor& db = g.grad_buf(self.inputs[1]);
    if (mode == Mode::same) {
      acc(db, gv);
    } else if (mode == Mode::scalar) {
      double s = 0.0;
      for (double v : gv.data) s += v;
      db.data[0] += s;
    } else {
      const int r = gv.rows(), c = gv.cols();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) db.data[j] += gv.at(i, j);
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const int ia = check(a), ib = check(b);
  const Tensor& av = nodes_[ia].value;
  const Tensor& bv = nodes_[ib].value;
  Tensor out = av;
  const bool scalar_b = bv.numel() == 1 && av.numel() != 1;
  if (scalar_b) {
    for (double& v : out.data) v *= bv.data[0];
  } else {
    if (av.numel() != bv.numel())
      throw ShapeError("mul shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  }
  return push("mul", {ia, ib}, std::move(out), [scalar_b](Graph& g, Node& self) {
    const Tensor& gv = self.grad;
    const Tensor& av = g.nodes_[self.inputs[0]].value;
    const Tensor& bv = g.nodes_[self.inputs[1]].value;
    Tensor& da = g.grad_buf(self.inputs[0]);
    Tensor& db = g.grad_buf(self.inputs[1]);
    if (scalar_b) {
      for (size_t i = 0; i < gv.data.size(); ++i) da.data[i] += gv.data[i] * bv.data[0];
      double s = 0.0;
      for (size_t i = 0; i < gv.data.size(); ++i) s += gv.data[i] * av.data[i];
      db.data[0] += s;
    } else {
      for (size_t i = 0; i < gv.data.size(); ++i) {
        da.data[i] += gv.data[i] * bv.data[i];
        db.data[i] += gv.data[i] * av.data[i];
      }
    }
  });
}

Var Graph::scale(Var a, double c) { return mul(a, input(Tensor::scalar(c))); }

Var Graph::concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw ContractError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw ContractError("concat axis must be 0 or 1");
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (Var v : xs) ids.push_back(check(v));
  const Tensor& first = nodes_[ids[0]].value;
  int rows = first.rows(), cols = first.cols();
  for (size_t i = 1; i < ids.size(); ++i) {
    const Tensor& t = nodes_[ids[i]].value;
    if (axis == 0) {
      if (t.cols() != cols)
        throw ShapeError("concat axis 0 column mismatch: " + shape_str(first.shape) + " vs " + shape_str(t.shape));
      rows += t.rows();
    } else {
      if (t.rows() != rows)
        throw ShapeError("concat axis 1 row mismatch: " + shape_str(first.shape) + " vs " + shape_str(t.shape));
      cols += t.cols();
    }
  }
  if (axis == 1) cols = 0;
  Tensor out;
  if (axis == 0) {
    out = Tensor::zeros({rows, first.cols()});
    int r = 0;
    for (int id : ids) {
      const Tensor& t = nodes_[id].value;
      std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<size_t>(r) * out.cols());
      r += t.rows();
    }
  } else {
    for (int id : ids) cols += nodes_[id].value.cols();
    out = Tensor::zeros({first.rows(), cols});
    int c = 0;
    for (int id : ids) {
      const Tensor& t = nodes_[id].value;
      for (int i = 0; i < t.rows(); ++i)
        std::copy(t.row_span(i).begin(), t.row_span(i).end(), out.data.begin() + static_cast<size_t>(i) * cols + c);
      c += t.cols();
    }
  }
  return push("concat", std::move(ids), std::move(out), [axis](Graph& g, Node& self) {
    const Tensor& gv = self.grad;
    int off = 0;
    for (int id : self.inputs) {
      Tensor& din = g.grad_buf(id);
      const Tensor& v = g.nodes_[id].value;
      if (axis == 0) {
        for (int i = 0; i < v.rows(); ++i)
          for (int j = 0; j < v.cols(); ++j) din.data[static_cast<size_t>(i) * v.cols() + j] += gv.at(off + i, j);
        off += v.rows();
      } else {
        for (int i = 0; i < v.rows(); ++i)
          for (int j = 0; j < v.cols(); ++j) din.data[static_cast<size_t>(i) * v.cols() + j] += gv.at(i, off + j);
        off += v.cols();
      }
    }
  });
}

Var Graph::slice(Var a, int row0, int row1, int col0, int col1) {
  const int ia = check(a);
  const Tensor& av = nodes_[ia].value;
  if (row0 < 0 || col0 < 0 || row1 > av.rows() || col1 > av.cols() || row0 >= row1 || col0 >= col1)
    throw ShapeError("slice bounds [" + std::to_string(row0) + "," + std::to_string(row1) + ")x[" +
                     std::to_string(col0) + "," + std::to_string(col1) + ") outside " + shape_str(av.shape));
  Tensor out({row1 - row0, col1 - col0}, 0.0);
  for (int i = row0; i < row1; ++i)
    for (int j = col0; j < col1; ++j) out.at(i - row0, j - col0) = av.at(i, j);
  return push("slice", {ia}, std::move(out), [row0, col0](Graph& g, Node& self) {
    const Tensor& gv = self.grad;
    Tensor& da = g.grad_buf(self.inputs[0]);
    const int cols = g.nodes_[self.inputs[0]].value.cols();
    for (int i = 0; i < gv.rows(); ++i)
      for (int j = 0; j < gv.cols(); ++j)
        da.data[static_cast<size_t>(row0 + i) * cols + (col0 + j)] += gv.at(i, j);
  });
}

Var Graph::sigmoid(Var a) {
  const int ia = check(a);
  Tensor out = nodes_[ia].value;
  for (double& v : out.data) v = kernels::sigmoid(v);
  return push("sigmoid", {ia}, std::move(out), [](Graph& g, Node& self) {
    Tensor& da = g.grad_buf(self.inputs[0]);
    for (size_t i = 0; i < da.data.size(); ++i) {
      const double y = self.value.data[i];
      da.data[i] += self.grad.data[i] * y * (1.0 - y);
    }
  });
}

Var Graph::tanh(Var a) {
  const int ia = check(a);
  Tensor out = nodes_[ia].value;
  for (double& v : out.data) v = std::tanh(v);
  return push("tanh", {ia}, std::move(out), [](Graph& g, Node& self) {
    Tensor& da = g.grad_buf(self.inputs[0]);
    for (size_t i = 0; i < da.data.size(); ++i) {
      const double y = self.value.data[i];
      da.data[i] += self.grad.data[i] * (1.0 - y * y);
    }
  });
}

Var Graph::relu(Var a) {
  const int ia = check(a);
  Tensor out = nodes_[ia].value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push("relu", {ia}, std::move(out), [](Graph& g, Node& self) {
    Tensor& da = g.grad_buf(self.inputs[0]);
    const Tensor& x = g.nodes_[self.inputs[0]].value;
    for (size_t i = 0; i < da.data.size(); ++i)
      if (x.data[i] > 0.0) da.data[i] += self.grad.data[i];
  });
}

Var Graph::softmax(Var a, int axis) {
  const int ia = check(a);
  const Tensor& av = nodes_[ia].value;
  if (av.rank() == 1) axis = 1;
  if (axis != 0 && axis != 1) throw ContractError("softmax axis must be 0 or 1");
  Tensor out = av;
  if (axis == 1) {
    for (int i = 0; i < out.rows(); ++i) kernels::softmax_row(out.row_span(i));
  } else {
    Tensor t = kernels::transpose(av);
    for (int i = 0; i < t.rows(); ++i) kernels::softmax_row(t.row_span(i));
    Tensor back = kernels::transpose(t);
    out.data = std::move(back.data);
  }
  return push("softmax", {ia}, std::move(out), [axis](Graph& g, Node& self) {
    Tensor& da = g.grad_buf(self.inputs[0]);
    const Tensor& y = self.value;
    const Tensor& gy = self.grad;
    const int r = y.rows(), c = y.cols();
    if (axis == 1) {
      for (int i = 0; i < r; ++i) {
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += gy.at(i, j) * y.at(i, j);
        for (int j = 0; j < c; ++j)
          da.data[static_cast<size_t>(i) * c + j] += y.at(i, j) * (gy.at(i, j) - dot);
      }
    } else {
      for (int j = 0; j < c; ++j) {
        double dot = 0.0;
        for (int i = 0; i < r; ++i) dot += gy.at(i, j) * y.at(i, j);
        for (int i = 0; i < r; ++i)
          da.data[static_cast<size_t>(i) * c + j] += y.at(i, j) * (gy.at(i, j) - dot);
      }
    }
  });
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const int ix = check(x), ig = check(gain), ib = check(bias);
  const Tensor& xv = nodes_[ix].value;
  const Tensor& gv = nodes_[ig].value;
  const Tensor& bv = nodes_[ib].value;
  const int d = xv.cols();
  if (d < 2) throw ContractError("layer_norm requires normalized axis length >= 2");
  if (gv.numel() != d || bv.numel() != d)
    throw ShapeError("layer_norm gain/bias must have size " + std::to_string(d));
  Tensor out = xv;
  for (int i = 0; i < xv.rows(); ++i)
    kernels::layer_norm_row(xv.row_span(i), {gv.data.data(), gv.data.size()},
                            {bv.data.data(), bv.data.size()}, eps, out.row_span(i));
  return push("layer_norm", {ix, ig, ib}, std::move(out), [eps](Graph& g, Node& self) {
    const Tensor& xv = g.nodes_[self.inputs[0]].value;
    const Tensor& gainv = g.nodes_[self.inputs[1]].value;
    Tensor& dx = g.grad_buf(self.inputs[0]);
    Tensor& dgain = g.grad_buf(self.inputs[1]);
    Tensor& dbias = g.grad_buf(self.inputs[2]);
    const Tensor& gy = self.grad;
    const int r = xv.rows(), d = xv.cols();
    const double dd = static_cast<double>(d);
    for (int i = 0; i < r; ++i) {
      auto xr = xv.row_span(i);
      double mean = 0.0;
      for (double v : xr) mean += v;
      mean /= dd;
      double var = 0.0;
      for (double v : xr) var += (v - mean) * (v - mean);
      var /= dd;
      const double inv = 1.0 / std::sqrt(var + eps);
      // dxhat_j = gy_j * gain_j; then the standard two-correction form.
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (int j = 0; j < d; ++j) {
        const double xhat = (xr[j] - mean) * inv;
        const double dxhat = gy.at(i, j) * gainv.data[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        dgain.data[j] += gy.at(i, j) * xhat;
        dbias.data[j] += gy.at(i, j);
      }
      for (int j = 0; j < d; ++j) {
        const double xhat = (xr[j] - mean) * inv;
        const double dxhat = gy.at(i, j) * gainv.data[j];
        dx.data[static_cast<size_t>(i) * d + j] +=
            inv * (dxhat - sum_dxhat / dd - xhat * sum_dxhat_xhat / dd);
      }
    }
  });
}

Var Graph::embedding(Var table, std::span<const int> ids) {
  const int it = check(table);
  const Tensor& tv = nodes_[it].value;
  const int v = tv.rows(), d = tv.cols();
  Tensor out({static_cast<int>(ids.size()), d}, 0.0);
  std::vector<int> idv(ids.begin(), ids.end());
  for (size_t t = 0; t < idv.size(); ++t) {
    if (idv[t] < 0 || idv[t] >= v)
      throw ContractError("embedding id " + std::to_string(idv[t]) + " outside table of " + std::to_string(v));
    auto src = tv.row_span(idv[t]);
    std::copy(src.begin(), src.end(), out.row_span(static_cast<int>(t)).begin());
  }
  return push("embedding", {it}, std::move(out), [idv = std::move(idv)](Graph& g, Node& self) {
    Tensor& dt = g.grad_buf(self.inputs[0]);
    const int d = g.nodes_[self.inputs[0]].value.cols();
    for (size_t t = 0; t < idv.size(); ++t)
      for (int j = 0; j < d; ++j)
        dt.data[static_cast<size_t>(idv[t]) * d + j] += self.grad.at(static_cast<int>(t), j);
  });
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights) {
  const int il = check(logits);
  const Tensor& lv = nodes_[il].value;
  const int t_len = lv.rows(), vocab = lv.cols();
  if (static_cast<int>(targets.size()) != t_len || static_cast<int>(weights.size()) != t_len)
    throw ShapeError("cross_entropy targets/weights length must equal logit rows " + std::to_string(t_len));
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<double> wts(weights.begin(), weights.end());
  std::vector<double> lses(t_len);
  double total = 0.0;
  for (int i = 0; i < t_len; ++i) {
    if (tgt[i] < 0 || tgt[i] >= vocab)
      throw ContractError("cross_entropy target id " + std::to_string(tgt[i]) + " outside vocab " + std::to_string(vocab));
    auto row = lv.row_span(i);
    double mx = row[0];
    for (double x : row) mx = std::max(mx, x);
    double s = 0.0;
    for (double x : row) s += std::exp(x - mx);
    lses[i] = mx + std::log(s);
    total += wts[i] * (lses[i] - row[tgt[i]]);
  }
  return push("cross_entropy", {il}, Tensor::scalar(total),
              [tgt = std::move(tgt), wts = std::move(wts), lses = std::move(lses)](Graph& g, Node& self) {
                const double go = self.grad.data[0];
                const Tensor& lv = g.nodes_[self.inputs[0]].value;
                Tensor& dl = g.grad_buf(self.inputs[0]);
                const int t_len = lv.rows(), vocab = lv.cols();
                for (int i = 0; i < t_len; ++i) {
                  if (wts[i] == 0.0) continue;
                  const double w = wts[i] * go;
                  auto row = lv.row_span(i);
                  for (int j = 0; j < vocab; ++j) {
                    double p = std::exp(row[j] - lses[i]);
                    dl.data[static_cast<size_t>(i) * vocab + j] += w * (p - (j == tgt[i] ? 1.0 : 0.0));
                  }
                }
              });
}

Var Graph::sum(Var a) {
  const int ia = check(a);
  const Tensor& av = nodes_[ia].value;
  Var ones_col = input(Tensor({av.cols(), 1}, 1.0));
  if (av.rows() == 1) return matmul(a, ones_col);
  Var ones_row = input(Tensor::full({av.rows()}, 1.0));
  return matmul(matmul(ones_row, a), ones_col);
}

void Graph::backward(Var loss) {
  const int il = check(loss);
  if (nodes_[il].value.numel() != 1)
    throw ContractError("backward requires a scalar loss, got shape " + shape_str(nodes_[il].value.shape));
  grad_buf(il).data[0] = 1.0;
  for (int id = il; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.grad.defined()) continue;
    if (n.bound) {
      acc(n.bound->grad, n.grad);
    } else if (n.pull) {
      n.pull(*this, n);
    }
  }
}

}  // namespace tagseq
