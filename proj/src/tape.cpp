#include "bghgnn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "bghgnn/kernels.hpp"

namespace bghgnn {

namespace ker = kernels;

size_t Tape::check(Id id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
    throw std::out_of_range("tape: bad node id");
  return static_cast<size_t>(id);
}

void Tape::require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

Tape::Id Tape::push(Tensor value, bool requires_grad) {
#ifndef NDEBUG
  for (int64_t i = 0; i < value.numel(); ++i)
    if (!std::isfinite(value.at(i)))
      throw std::domain_error("tape: non-finite value produced by an op");
#endif
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(Tensor value) { return push(std::move(value), false); }

Tape::Id Tape::parameter(Tensor value, std::string name) {
  Id id = push(std::move(value), true);
  nodes_.back().name = std::move(name);
  params_.push_back(id);
  return id;
}

Tape::Id Tape::matmul(Id a, Id b, bool trans_a, bool trans_b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  int64_t m = trans_a ? va.cols() : va.rows();
  int64_t ka = trans_a ? va.rows() : va.cols();
  int64_t kb = trans_b ? vb.cols() : vb.rows();
  int64_t n = trans_b ? vb.rows() : vb.cols();
  if (ka != kb)
    throw std::invalid_argument("matmul: inner dims " + va.shape_str() + " vs " + vb.shape_str());
  Tensor out({m, n});
  ker::matmul(va.data(), vb.data(), out.data(), m, ka, n, trans_a, trans_b, false);
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b, trans_a, trans_b](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      const Tensor& ta = t.value(a);
      const Tensor& tb = t.value(b);
      int64_t m2 = g.rows(), n2 = g.cols();
      int64_t k2 = trans_a ? ta.rows() : ta.cols();
      if (t.needs_grad(a)) {
        double* da = t.grad_buf(a).data();
        if (!trans_a) {
          // dA = G * op(B)^T
          if (!trans_b) ker::matmul(g.data(), tb.data(), da, m2, n2, k2, false, true, true);
          else          ker::matmul(g.data(), tb.data(), da, m2, n2, k2, false, false, true);
        } else {
          // dA = op(B) * G^T
          if (!trans_b) ker::matmul(tb.data(), g.data(), da, k2, n2, m2, false, true, true);
          else          ker::matmul(tb.data(), g.data(), da, k2, n2, m2, true, true, true);
        }
      }
      if (t.needs_grad(b)) {
        double* db = t.grad_buf(b).data();
        if (!trans_b) {
          // dB = op(A)^T * G
          if (!trans_a) ker::matmul(ta.data(), g.data(), db, k2, m2, n2, true, false, true);
          else          ker::matmul(ta.data(), g.data(), db, k2, m2, n2, false, false, true);
        } else {
          // dB = G^T * op(A)
          if (!trans_a) ker::matmul(g.data(), ta.data(), db, n2, m2, k2, true, false, true);
          else          ker::matmul(g.data(), ta.data(), db, n2, m2, k2, true, true, true);
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "add");
  Tensor out(va.shape());
  ker::ew_add(va.data(), vb.data(), out.data(), va.numel());
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      if (t.needs_grad(a)) ker::acc(t.grad_buf(a).data(), g.data(), g.numel());
      if (t.needs_grad(b)) ker::acc(t.grad_buf(b).data(), g.data(), g.numel());
    };
  }
  return id;
}

Tape::Id Tape::sub(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "sub");
  Tensor out(va.shape());
  ker::ew_sub(va.data(), vb.data(), out.data(), va.numel());
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      if (t.needs_grad(a)) ker::acc(t.grad_buf(a).data(), g.data(), g.numel());
      if (t.needs_grad(b)) ker::acc_scaled(t.grad_buf(b).data(), g.data(), -1.0, g.numel());
    };
  }
  return id;
}

Tape::Id Tape::mul(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "mul");
  Tensor out(va.shape());
  ker::ew_mul(va.data(), vb.data(), out.data(), va.numel());
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      if (t.needs_grad(a)) ker::acc_mul(t.grad_buf(a).data(), g.data(), t.value(b).data(), g.numel());
      if (t.needs_grad(b)) ker::acc_mul(t.grad_buf(b).data(), g.data(), t.value(a).data(), g.numel());
    };
  }
  return id;
}

Tape::Id Tape::scalar_mul(Id a, double s) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  ker::scalar_mul(va.data(), s, out.data(), va.numel());
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, s](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      ker::acc_scaled(t.grad_buf(a).data(), g.data(), s, g.numel());
    };
  }
  return id;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rows() != vb.rows())
    throw std::invalid_argument("concat_cols: row mismatch " + va.shape_str() + " vs " + vb.shape_str());
  int64_t n = va.rows(), ca = va.cols(), cb = vb.cols();
  Tensor out({n, ca + cb});
  for (int64_t i = 0; i < n; ++i) {
    double* dst = out.data() + i * (ca + cb);
    const double* sa = va.data() + i * ca;
    const double* sb = vb.data() + i * cb;
    for (int64_t j = 0; j < ca; ++j) dst[j] = sa[j];
    for (int64_t j = 0; j < cb; ++j) dst[ca + j] = sb[j];
  }
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b, n, ca, cb](Tape& t, Id self) {
      const double* g = t.grad(self).data();
      if (t.needs_grad(a)) {
        double* da = t.grad_buf(a).data();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < ca; ++j) da[i * ca + j] += g[i * (ca + cb) + j];
      }
      if (t.needs_grad(b)) {
        double* db = t.grad_buf(b).data();
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < cb; ++j) db[i * cb + j] += g[i * (ca + cb) + ca + j];
      }
    };
  }
  return id;
}

Tape::Id Tape::concat_rows(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.cols() != vb.cols())
    throw std::invalid_argument("concat_rows: col mismatch " + va.shape_str() + " vs " + vb.shape_str());
  int64_t ra = va.rows(), rb = vb.rows(), c = va.cols();
  Tensor out({ra + rb, c});
  std::copy(va.data(), va.data() + ra * c, out.data());
  std::copy(vb.data(), vb.data() + rb * c, out.data() + ra * c);
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b, ra, rb, c](Tape& t, Id self) {
      const double* g = t.grad(self).data();
      if (t.needs_grad(a)) ker::acc(t.grad_buf(a).data(), g, ra * c);
      if (t.needs_grad(b)) ker::acc(t.grad_buf(b).data(), g + ra * c, rb * c);
    };
  }
  return id;
}

Tape::Id Tape::row_gather(Id a, std::vector<int64_t> rows) {
  const Tensor& va = value(a);
  int64_t src_rows = va.rows(), c = va.cols();
  for (int64_t r : rows)
    if (r < 0 || r >= src_rows) throw std::out_of_range("row_gather: row index out of range");
  int64_t n = static_cast<int64_t>(rows.size());
  Tensor out({n, c});
  ker::row_gather(va.data(), rows.data(), out.data(), n, c);
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    auto rows_p = std::make_shared<std::vector<int64_t>>(std::move(rows));
    nodes_.back().back = [a, rows_p, src_rows, c](Tape& t, Id self) {
      ker::acc_row_scatter(t.grad_buf(a).data(), t.grad(self).data(), *rows_p, src_rows, c);
    };
  }
  return id;
}

Tape::Id Tape::segment_sum(Id a, std::vector<int64_t> ids, int64_t num_segments) {
  const Tensor& va = value(a);
  if (static_cast<int64_t>(ids.size()) != va.rows())
    throw std::invalid_argument("segment_sum: ids length must equal row count");
  int64_t c = va.cols();
  auto idx = std::make_shared<ker::SegmentIndex>(ker::build_segment_index(ids, num_segments));
  Tensor out({num_segments, c});
  ker::segment_sum(va.data(), *idx, out.data(), c);
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    auto ids_p = std::make_shared<std::vector<int64_t>>(std::move(ids));
    nodes_.back().back = [a, ids_p, c](Tape& t, Id self) {
      const double* g = t.grad(self).data();
      double* da = t.grad_buf(a).data();
      int64_t n = static_cast<int64_t>(ids_p->size());
#pragma omp parallel for schedule(static) if (n * c > 4096)
      for (int64_t i = 0; i < n; ++i) {
        const double* src = g + (*ids_p)[static_cast<size_t>(i)] * c;
        for (int64_t j = 0; j < c; ++j) da[i * c + j] += src[j];
      }
    };
  }
  return id;
}

Tape::Id Tape::segment_mean(Id a, std::vector<int64_t> ids, int64_t num_segments) {
  const Tensor& va = value(a);
  if (static_cast<int64_t>(ids.size()) != va.rows())
    throw std::invalid_argument("segment_mean: ids length must equal row count");
  int64_t c = va.cols();
  auto idx = std::make_shared<ker::SegmentIndex>(ker::build_segment_index(ids, num_segments));
  Tensor out({num_segments, c});
  ker::segment_mean(va.data(), *idx, out.data(), c);  // throws on empty segment
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    auto ids_p = std::make_shared<std::vector<int64_t>>(std::move(ids));
    auto idx_p = idx;
    nodes_.back().back = [a, ids_p, idx_p, c](Tape& t, Id self) {
      const double* g = t.grad(self).data();
      double* da = t.grad_buf(a).data();
      int64_t n = static_cast<int64_t>(ids_p->size());
#pragma omp parallel for schedule(static) if (n * c > 4096)
      for (int64_t i = 0; i < n; ++i) {
        int64_t s = (*ids_p)[static_cast<size_t>(i)];
        double inv = 1.0 / static_cast<double>(idx_p->offsets[static_cast<size_t>(s) + 1] -
                                               idx_p->offsets[static_cast<size_t>(s)]);
        const double* src = g + s * c;
        for (int64_t j = 0; j < c; ++j) da[i * c + j] += inv * src[j];
      }
    };
  }
  return id;
}

Tape::Id Tape::segment_softmax(Id a, std::vector<int64_t> ids, int64_t num_segments) {
  const Tensor& va = value(a);
  if (static_cast<int64_t>(ids.size()) != va.rows())
    throw std::invalid_argument("segment_softmax: ids length must equal row count");
  int64_t n = va.rows(), c = va.cols();
  auto idx = std::make_shared<ker::SegmentIndex>(ker::build_segment_index(ids, num_segments));
  Tensor out({n, c});
  ker::segment_softmax(va.data(), *idx, out.data(), n, c);
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, idx, c](Tape& t, Id self) {
      ker::acc_segment_softmax_grad(t.grad_buf(a).data(), t.value(self).data(),
                                    t.grad(self).data(), *idx, c);
    };
  }
  return id;
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  ker::leaky_relu(va.data(), slope, out.data(), va.numel());
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, slope](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      ker::acc_leaky_relu_grad(t.grad_buf(a).data(), g.data(), t.value(a).data(), slope, g.numel());
    };
  }
  return id;
}

Tape::Id Tape::exp(Id a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  ker::exp_fwd(va.data(), out.data(), va.numel());
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      ker::acc_mul(t.grad_buf(a).data(), g.data(), t.value(self).data(), g.numel());
    };
  }
  return id;
}

Tape::Id Tape::log(Id a) {
  const Tensor& va = value(a);
  Tensor out(va.shape());
  ker::log_fwd(va.data(), out.data(), va.numel());
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      ker::acc_div(t.grad_buf(a).data(), g.data(), t.value(a).data(), g.numel());
    };
  }
  return id;
}

Tape::Id Tape::reduce_sum(Id a) {
  const Tensor& va = value(a);
  Tensor out = Tensor::scalar(ker::reduce_sum(va.data(), va.numel()));
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a](Tape& t, Id self) {
      double g = t.grad(self).at(0);
      Tensor& da = t.grad_buf(a);
      ker::acc_scalar(da.data(), g, da.numel());
    };
  }
  return id;
}

Tape::Id Tape::reduce_mean(Id a) {
  const Tensor& va = value(a);
  if (va.numel() == 0) throw std::invalid_argument("reduce_mean: empty tensor");
  double inv = 1.0 / static_cast<double>(va.numel());
  Tensor out = Tensor::scalar(ker::reduce_sum(va.data(), va.numel()) * inv);
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, inv](Tape& t, Id self) {
      double g = t.grad(self).at(0) * inv;
      Tensor& da = t.grad_buf(a);
      ker::acc_scalar(da.data(), g, da.numel());
    };
  }
  return id;
}

Tape::Id Tape::reshape(Id a, std::vector<int64_t> shape) {
  const Tensor& va = value(a);
  Tensor out(std::move(shape), va.vec());
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a](Tape& t, Id self) {
      const Tensor& g = t.grad(self);
      ker::acc(t.grad_buf(a).data(), g.data(), g.numel());
    };
  }
  return id;
}

Tape::Id Tape::expand_cols(Id a, int64_t cols) {
  const Tensor& va = value(a);
  if (va.ndim() != 2 || va.cols() != 1)
    throw std::invalid_argument("expand_cols: expected [n,1], got " + va.shape_str());
  int64_t n = va.rows();
  Tensor out({n, cols});
  ker::expand_cols(va.data(), out.data(), n, cols);
  bool req = needs_grad(a);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, n, cols](Tape& t, Id self) {
      ker::acc_row_sum(t.grad_buf(a).data(), t.grad(self).data(), n, cols);
    };
  }
  return id;
}

Tape::Id Tape::row_kron(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rows() != vb.rows())
    throw std::invalid_argument("row_kron: row mismatch " + va.shape_str() + " vs " + vb.shape_str());
  int64_t n = va.rows(), p = va.cols(), q = vb.cols();
  Tensor out({n, p * q});
#pragma omp parallel for schedule(static) if (n * p * q > 4096)
  for (int64_t v = 0; v < n; ++v) {
    const double* ra = va.data() + v * p;
    const double* rb = vb.data() + v * q;
    double* ro = out.data() + v * p * q;
    for (int64_t i = 0; i < p; ++i)
      for (int64_t j = 0; j < q; ++j) ro[i * q + j] = ra[i] * rb[j];
  }
  bool req = needs_grad(a) || needs_grad(b);
  Id id = push(std::move(out), req);
  if (req) {
    nodes_.back().back = [a, b, n, p, q](Tape& t, Id self) {
      const double* g = t.grad(self).data();
      const double* ra = t.value(a).data();
      const double* rb = t.value(b).data();
      if (t.needs_grad(a)) {
        double* da = t.grad_buf(a).data();
#pragma omp parallel for schedule(static) if (n * p * q > 4096)
        for (int64_t v = 0; v < n; ++v)
          for (int64_t i = 0; i < p; ++i) {
            double s = 0.0;
            for (int64_t j = 0; j < q; ++j) s += g[v * p * q + i * q + j] * rb[v * q + j];
            da[v * p + i] += s;
          }
      }
      if (t.needs_grad(b)) {
        double* db = t.grad_buf(b).data();
#pragma omp parallel for schedule(static) if (n * p * q > 4096)
        for (int64_t v = 0; v < n; ++v)
          for (int64_t j = 0; j < q; ++j) {
            double s = 0.0;
            for (int64_t i = 0; i < p; ++i) s += g[v * p * q + i * q + j] * ra[v * p + i];
            db[v * q + j] += s;
          }
      }
    };
  }
  return id;
}

void Tape::backward(Id loss) {
  size_t li = check(loss);
  if (nodes_[li].value.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " + nodes_[li].value.shape_str());
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor::zeros(n.value.shape());
    else n.grad = Tensor();
  }
  if (!nodes_[li].requires_grad) return;  // loss independent of all parameters
  nodes_[li].grad.at(0) = 1.0;
  for (int64_t i = static_cast<int64_t>(li); i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.requires_grad && n.back) n.back(*this, static_cast<Id>(i));
  }
}

GradCheckReport grad_check(
    const std::function<Tape::Id(Tape&, const std::vector<Tensor>&)>& program,
    std::vector<Tensor> params, double eps) {
  GradCheckReport report;

  Tape tape;
  Tape::Id loss = program(tape, params);
  tape.backward(loss);
  const std::vector<Tape::Id>& pids = tape.parameters();
  if (pids.size() != params.size())
    throw std::invalid_argument("grad_check: program registered a different number of parameters");

  auto eval = [&](const std::vector<Tensor>& p) {
    Tape t;
    Tape::Id l = program(t, p);
    return t.value(l).at(0);
  };

  for (size_t pi = 0; pi < params.size(); ++pi) {
    GradCheckReport::Entry entry;
    entry.name = tape.name(pids[pi]).empty() ? ("p" + std::to_string(pi)) : tape.name(pids[pi]);
    const Tensor& analytic = tape.grad(pids[pi]);
    for (int64_t j = 0; j < params[pi].numel(); ++j) {
      double orig = params[pi].at(j);
      params[pi].at(j) = orig + eps;
      double lp = eval(params);
      params[pi].at(j) = orig - eps;
      double lm = eval(params);
      params[pi].at(j) = orig;
      double fd = (lp - lm) / (2.0 * eps);
      double an = analytic.at(j);
      double rel = std::fabs(an - fd) / std::max({1.0, std::fabs(an), std::fabs(fd)});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace bghgnn
