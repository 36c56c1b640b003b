#pragma once

#include <array>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "tegee/tensor.hpp"

namespace tegee {

// Reverse-mode tape over a closed op set: the dense ops the host model needs
// plus row-softmax, mean pooling and cross-entropy. Nodes are appended in
// evaluation order, so the tape is acyclic by construction.
class Graph {
 public:
  enum class Op {
    kInput,
    kMatMul,
    kMatMulNT,  // a * b^T, used for attention scores
    kAdd,
    kScale,
    kRelu,
    kSoftmaxRows,
    kMeanRows,
    kCrossEntropy,
  };

  struct Node {
    Op op;
    std::array<int, 2> in{-1, -1};
    double c = 0.0;          // kScale factor
    std::size_t label = 0;   // kCrossEntropy target index
    Tensor value;
    bool trainable = false;
  };

  int input(Tensor t, bool trainable = false) {
    Node n;
    n.op = Op::kInput;
    n.value = std::move(t);
    n.trainable = trainable;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int matmul(int a, int b) { return push(Op::kMatMul, a, b); }
  int matmul_nt(int a, int b) { return push(Op::kMatMulNT, a, b); }
  int add(int a, int b) { return push(Op::kAdd, a, b); }

  int scale(int a, double c) {
    Node n;
    n.op = Op::kScale;
    n.in = {a, -1};
    n.c = c;
    n.value = eval_scale(nodes_[a].value, c);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int relu(int a) { return push(Op::kRelu, a, -1); }
  int softmax_rows(int a) { return push(Op::kSoftmaxRows, a, -1); }
  int mean_rows(int a) { return push(Op::kMeanRows, a, -1); }

  int cross_entropy(int logits, std::size_t label) {
    const Tensor& l = nodes_[logits].value;
    if (l.rows() != 1) throw dim_error("cross_entropy: logits must be a row vector");
    if (label >= l.cols()) throw contract_error("cross_entropy: label out of range");
    Node n;
    n.op = Op::kCrossEntropy;
    n.in = {logits, -1};
    n.label = label;
    n.value = eval_cross_entropy(l, label);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Tensor& value(int id) const { return nodes_[id].value; }
  std::size_t node_count() const { return nodes_.size(); }
  bool is_trainable(int id) const { return nodes_[id].trainable; }

  std::vector<int> trainable_ids() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
      if (nodes_[i].trainable) out.push_back(i);
    return out;
  }

  // Direct access to an input node's value, for finite differencing.
  Tensor& mutable_input(int id) {
    if (nodes_[id].op != Op::kInput)
      throw contract_error("mutable_input: node is not an input");
    return nodes_[id].value;
  }

  // Re-evaluates every non-input node in tape order.
  void recompute() {
    for (auto& n : nodes_) {
      switch (n.op) {
        case Op::kInput: break;
        case Op::kMatMul: n.value = tegee::matmul(nodes_[n.in[0]].value, nodes_[n.in[1]].value); break;
        case Op::kMatMulNT: n.value = tegee::matmul_nt(nodes_[n.in[0]].value, nodes_[n.in[1]].value); break;
        case Op::kAdd: n.value = tegee::add(nodes_[n.in[0]].value, nodes_[n.in[1]].value); break;
        case Op::kScale: n.value = eval_scale(nodes_[n.in[0]].value, n.c); break;
        case Op::kRelu: n.value = eval_relu(nodes_[n.in[0]].value); break;
        case Op::kSoftmaxRows: n.value = eval_softmax_rows(nodes_[n.in[0]].value); break;
        case Op::kMeanRows: n.value = eval_mean_rows(nodes_[n.in[0]].value); break;
        case Op::kCrossEntropy: n.value = eval_cross_entropy(nodes_[n.in[0]].value, n.label); break;
      }
    }
  }

  // Gradients of a scalar root with respect to every trainable input.
  std::unordered_map<int, Tensor> backward(int root) const {
    const Tensor& rv = nodes_[root].value;
    if (rv.rows() != 1 || rv.cols() != 1)
      throw contract_error("backward: root must be scalar");
    std::vector<Tensor> grad(nodes_.size());
    std::vector<bool> has_grad(nodes_.size(), false);
    grad[root] = Tensor::scalar(1.0);
    has_grad[root] = true;

    auto accum = [&](int id, Tensor g) {
      if (!has_grad[id]) {
        grad[id] = std::move(g);
        has_grad[id] = true;
      } else {
        grad[id] = tegee::add(grad[id], g);
      }
    };

    for (int i = root; i >= 0; --i) {
      if (!has_grad[i]) continue;
      const Node& n = nodes_[i];
      const Tensor& g = grad[i];
      switch (n.op) {
        case Op::kInput:
          break;
        case Op::kMatMul:
          accum(n.in[0], tegee::matmul_nt(g, nodes_[n.in[1]].value));
          accum(n.in[1], tegee::matmul_tn(nodes_[n.in[0]].value, g));
          break;
        case Op::kMatMulNT:
          accum(n.in[0], tegee::matmul(g, nodes_[n.in[1]].value));
          accum(n.in[1], tegee::matmul_tn(g, nodes_[n.in[0]].value));
          break;
        case Op::kAdd:
          accum(n.in[0], g);
          accum(n.in[1], g);
          break;
        case Op::kScale:
          accum(n.in[0], eval_scale(g, n.c));
          break;
        case Op::kRelu: {
          const Tensor& x = nodes_[n.in[0]].value;
          Tensor gx = g;
          for (std::size_t j = 0; j < gx.data.size(); ++j)
            if (x.data[j] <= 0.0) gx.data[j] = 0.0;
          accum(n.in[0], std::move(gx));
          break;
        }
        case Op::kSoftmaxRows: {
          const Tensor& s = n.value;
          Tensor gx(s.rows(), s.cols());
          for (std::size_t r = 0; r < s.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < s.cols(); ++c) dot += g.at(r, c) * s.at(r, c);
            for (std::size_t c = 0; c < s.cols(); ++c)
              gx.at(r, c) = s.at(r, c) * (g.at(r, c) - dot);
          }
          accum(n.in[0], std::move(gx));
          break;
        }
        case Op::kMeanRows: {
          const Tensor& x = nodes_[n.in[0]].value;
          Tensor gx(x.rows(), x.cols());
          const double inv = 1.0 / static_cast<double>(x.rows());
          for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t c = 0; c < x.cols(); ++c)
              gx.at(r, c) = g.at(0, c) * inv;
          accum(n.in[0], std::move(gx));
          break;
        }
        case Op::kCrossEntropy: {
          Tensor p = eval_softmax_rows(nodes_[n.in[0]].value);
          p.data[n.label] -= 1.0;
          accum(n.in[0], eval_scale(p, g.data[0]));
          break;
        }
      }
    }

    std::unordered_map<int, Tensor> out;
    for (int i = 0; i <= root; ++i)
      if (nodes_[i].trainable) {
        if (has_grad[i])
          out.emplace(i, std::move(grad[i]));
        else
          out.emplace(i, Tensor::zeros(nodes_[i].value.rows(), nodes_[i].value.cols()));
      }
    return out;
  }

  static Tensor eval_relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data)
      if (v < 0.0) v = 0.0;
    return y;
  }

  static Tensor eval_scale(const Tensor& x, double c) { return tegee::scale(x, c); }

  static Tensor eval_softmax_rows(const Tensor& x) {
    Tensor y(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double mx = x.at(r, 0);
      for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x.at(r, c));
      double sum = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double e = std::exp(x.at(r, c) - mx);
        y.at(r, c) = e;
        sum += e;
      }
      for (std::size_t c = 0; c < x.cols(); ++c) y.at(r, c) /= sum;
    }
    return y;
  }

  static Tensor eval_mean_rows(const Tensor& x) {
    if (x.rows() == 0) throw contract_error("mean_rows: empty input");
    Tensor y(1, x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) y.at(0, c) += x.at(r, c);
    return eval_scale(y, 1.0 / static_cast<double>(x.rows()));
  }

  // loss = logsumexp(logits) - logits[label]
  static Tensor eval_cross_entropy(const Tensor& logits, std::size_t label) {
    double mx = logits.data[0];
    for (double v : logits.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits.data) sum += std::exp(v - mx);
    return Tensor::scalar(mx + std::log(sum) - logits.data[label]);
  }

 private:
  int push(Op op, int a, int b) {
    Node n;
    n.op = op;
    n.in = {a, b};
    switch (op) {
      case Op::kMatMul: n.value = tegee::matmul(nodes_[a].value, nodes_[b].value); break;
      case Op::kMatMulNT: n.value = tegee::matmul_nt(nodes_[a].value, nodes_[b].value); break;
      case Op::kAdd: n.value = tegee::add(nodes_[a].value, nodes_[b].value); break;
      case Op::kRelu: n.value = eval_relu(nodes_[a].value); break;
      case Op::kSoftmaxRows: n.value = eval_softmax_rows(nodes_[a].value); break;
      case Op::kMeanRows: n.value = eval_mean_rows(nodes_[a].value); break;
      default: throw contract_error("push: bad op");
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

// Central-difference gradient of the root scalar w.r.t. one input node.
// Restores the graph to its original state before returning.
inline Tensor finite_diff(Graph& g, int root, int param, double eps) {
  if (eps <= 0.0) throw contract_error("finite_diff: eps must be positive");
  const Tensor& rv = g.value(root);
  if (rv.rows() != 1 || rv.cols() != 1)
    throw contract_error("finite_diff: root must be scalar");
  Tensor& p = g.mutable_input(param);
  Tensor out(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    const double orig = p.data[i];
    p.data[i] = orig + eps;
    g.recompute();
    const double fp = g.value(root).data[0];
    p.data[i] = orig - eps;
    g.recompute();
    const double fm = g.value(root).data[0];
    p.data[i] = orig;
    out.data[i] = (fp - fm) / (2.0 * eps);
  }
  g.recompute();
  return out;
}

}  // namespace tegee
