#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bghgnn/tensor.hpp"

namespace bghgnn {

// Recorded-operation reverse-mode autodiff over dense f64 tensors.
//
// A Tape is an append-only record of executed ops. Leaves enter via
// input() (no gradient) or parameter() (registered, gradient slot).
// backward(loss) replays the record once in reverse and accumulates
// gradients; parameters not reachable from the loss keep zero gradients.
// A Tape is single-threaded; the kernels underneath parallelize each op.
class Tape {
 public:
  using Id = int32_t;

  Id input(Tensor value);
  Id parameter(Tensor value, std::string name = {});

  Id matmul(Id a, Id b, bool trans_a = false, bool trans_b = false);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);  // elementwise
  Id scalar_mul(Id a, double s);
  Id concat_cols(Id a, Id b);
  Id concat_rows(Id a, Id b);
  Id row_gather(Id a, std::vector<int64_t> rows);
  Id segment_sum(Id a, std::vector<int64_t> ids, int64_t num_segments);
  Id segment_mean(Id a, std::vector<int64_t> ids, int64_t num_segments);
  Id segment_softmax(Id a, std::vector<int64_t> ids, int64_t num_segments);
  Id leaky_relu(Id a, double slope = 0.2);
  Id exp(Id a);
  Id log(Id a);
  Id reduce_sum(Id a);
  Id reduce_mean(Id a);
  Id reshape(Id a, std::vector<int64_t> shape);
  Id expand_cols(Id a, int64_t cols);  // [n,1] -> [n,cols]
  Id row_kron(Id a, Id b);             // row-wise Kronecker: [n,p],[n,q] -> [n,p*q]

  // loss must be a scalar node
  void backward(Id loss);

  const Tensor& value(Id id) const { return nodes_[check(id)].value; }
  const Tensor& grad(Id id) const { return nodes_[check(id)].grad; }
  const std::vector<Id>& parameters() const { return params_; }
  const std::string& name(Id id) const { return nodes_[check(id)].name; }
  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::string name;
    std::function<void(Tape&, Id)> back;  // empty for leaves; receives own id
  };

  Id push(Tensor value, bool requires_grad);
  size_t check(Id id) const;
  bool needs_grad(Id id) const { return nodes_[check(id)].requires_grad; }
  Tensor& grad_buf(Id id) { return nodes_[check(id)].grad; }
  static void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

  std::vector<Node> nodes_;
  std::vector<Id> params_;
};

// Per-parameter comparison of recorded gradients against central finite
// differences. `program` must register its parameters via tape.parameter()
// in the order given and return a scalar loss id; it is re-run for every
// probe, so it must be deterministic.
struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Entry> entries;
  double max_rel_err = 0.0;
};

GradCheckReport grad_check(
    const std::function<Tape::Id(Tape&, const std::vector<Tensor>&)>& program,
    std::vector<Tensor> params, double eps = 1e-5);

}  // namespace bghgnn
