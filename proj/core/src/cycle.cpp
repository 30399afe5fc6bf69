#include "scot/cycle.hpp"

#include <cmath>

#include "scot/error.hpp"

namespace scot {

std::string to_string(CycleMode mode) {
  return mode == CycleMode::kOneSided ? "one_sided" : "two_sided";
}

CycleMode parse_cycle_mode(const std::string& text) {
  if (text == "one_sided") return CycleMode::kOneSided;
  if (text == "two_sided") return CycleMode::kTwoSided;
  throw InputError("unknown cycle mode '" + text + "' (expected one_sided|two_sided)");
}

CycleParams init_cycle(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.01);
  CycleParams p;
  p.wq = Matrix::Identity(d, d);
  p.wk = Matrix::Identity(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index k = 0; k < d; ++k) p.wq(i, k) += normal(rng);
  for (Index i = 0; i < d; ++i)
    for (Index k = 0; k < d; ++k) p.wk(i, k) += normal(rng);
  return p;
}

namespace {

void check(const Matrix& zq, const Matrix& zk, const CycleParams& params) {
  const Index d = zq.cols();
  if (zk.cols() != d || params.wq.rows() != d || params.wq.cols() != d ||
      params.wk.rows() != d || params.wk.cols() != d) {
    throw InputError("cross_attention: embedding and projection dimensions differ");
  }
}

Matrix softmax_rows(Matrix logits) {
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

// dL/dlogits from dL/dA for a row softmax.
Matrix softmax_rows_backward(const Matrix& attn, const Matrix& grad_attn) {
  const Vector dots = (attn.array() * grad_attn.array()).rowwise().sum();
  return attn.cwiseProduct(grad_attn - dots.replicate(1, attn.cols()));
}

struct Attention {
  Matrix queries;  // Zq Wqᵀ
  Matrix keys;     // Zk Wkᵀ
  Matrix attn;
};

Attention forward(const Matrix& zq, const Matrix& zk, const CycleParams& p) {
  Attention a;
  a.queries = zq * p.wq.transpose();
  a.keys = zk * p.wk.transpose();
  const double scale = 1.0 / std::sqrt(static_cast<double>(zq.cols()));
  a.attn = softmax_rows(scale * a.queries * a.keys.transpose());
  return a;
}

// Accumulates gradients of one attention map into the query/key sides.
void backward(const Attention& a, const Matrix& zq, const Matrix& zk, const CycleParams& p,
              const Matrix& grad_attn, Matrix& grad_zq, Matrix& grad_zk, Matrix& grad_wq,
              Matrix& grad_wk) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(zq.cols()));
  const Matrix grad_logits = scale * softmax_rows_backward(a.attn, grad_attn);
  const Matrix grad_q = grad_logits * a.keys;
  const Matrix grad_k = grad_logits.transpose() * a.queries;
  grad_zq += grad_q * p.wq;
  grad_wq += grad_q.transpose() * zq;
  grad_zk += grad_k * p.wk;
  grad_wk += grad_k.transpose() * zk;
}

}  // namespace

Matrix cross_attention(const Matrix& zq, const Matrix& zk, const CycleParams& params) {
  check(zq, zk, params);
  return forward(zq, zk, params).attn;
}

CycleResult cycle_loss(const Matrix& zs, const Matrix& zt, const CycleParams& params) {
  check(zs, zt, params);
  if (!(params.beta >= 0.0)) throw InputError("cycle_loss: beta must be nonnegative");
  const Index ns = zs.rows();
  const Index nt = zt.rows();
  const Index d = zs.cols();

  const Attention st = forward(zs, zt, params);  // n_s x n_t
  const Attention ts = forward(zt, zs, params);  // n_t x n_s

  CycleResult out;
  Matrix grad_st = Matrix::Zero(ns, nt);
  Matrix grad_ts = Matrix::Zero(nt, ns);

  {
    const Matrix residual = st.attn * ts.attn - Matrix::Identity(ns, ns);
    const double c = params.normalize_by_n2 ? 1.0 / static_cast<double>(ns * ns) : 1.0;
    out.l_cyc += c * residual.squaredNorm();
    const Matrix grad_r = 2.0 * c * residual;
    grad_st += grad_r * ts.attn.transpose();
    grad_ts += st.attn.transpose() * grad_r;
  }
  if (params.mode == CycleMode::kTwoSided) {
    const Matrix residual = ts.attn * st.attn - Matrix::Identity(nt, nt);
    const double c = params.normalize_by_n2 ? 1.0 / static_cast<double>(nt * nt) : 1.0;
    out.l_cyc += c * residual.squaredNorm();
    const Matrix grad_r = 2.0 * c * residual;
    grad_ts += grad_r * st.attn.transpose();
    grad_st += ts.attn.transpose() * grad_r;
  }

  {
    const double inv_n = 1.0 / static_cast<double>(ns);
    const Eigen::ArrayXXd shifted = st.attn.array() + params.delta;
    out.r_ent = -inv_n * (st.attn.array() * shifted.log()).sum();
    grad_st += (-inv_n * params.beta * (shifted.log() + st.attn.array() / shifted)).matrix();
  }
  out.l_rec = out.l_cyc + params.beta * out.r_ent;

  out.grad_zs = Matrix::Zero(ns, d);
  out.grad_zt = Matrix::Zero(nt, d);
  out.grad_wq = Matrix::Zero(d, d);
  out.grad_wk = Matrix::Zero(d, d);
  backward(st, zs, zt, params, grad_st, out.grad_zs, out.grad_zt, out.grad_wq, out.grad_wk);
  backward(ts, zt, zs, params, grad_ts, out.grad_zt, out.grad_zs, out.grad_wq, out.grad_wk);
  return out;
}

}  // namespace scot
