#include "scot/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "scot/error.hpp"

namespace scot {

EncoderParams init_encoder(Index n, Index d, std::mt19937_64& rng, double init_std, double leak) {
  if (n < 1 || d < 2) throw InputError("init_encoder: need n >= 1 and d >= 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  EncoderParams p;
  p.leak = leak;
  p.h0.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) p.h0(i, k) = init_std * normal(rng);
  p.mix = Matrix::Identity(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index k = 0; k < d; ++k) p.mix(i, k) += 0.01 * normal(rng);
  return p;
}

EncoderParams init_encoder_spectral(const CityGraph& graph, Index d, std::mt19937_64& rng,
                                    double init_std, double leak) {
  const Index n = graph.size();
  EncoderParams p = init_encoder(n, d, rng, 0.01 * init_std, leak);
  const Matrix sym = 0.5 * (graph.mobility + graph.mobility.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("spectral init: eigensolver failed");
  const Index used = std::min(n, d);
  const double scale = init_std * std::sqrt(static_cast<double>(n));
  for (Index c = 0; c < used; ++c) {
    // Eigen sorts ascending; take the largest eigenvalues first.
    Vector v = eig.eigenvectors().col(n - 1 - c);
    const double skew = v.array().cube().sum();
    if (std::abs(skew) > 1e-12) {
      if (skew < 0.0) v = -v;
    } else {
      Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0.0) v = -v;
    }
    p.h0.col(c) += scale * v;
  }
  return p;
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  const Index n = adjacency.rows();
  if (adjacency.cols() != n) throw InputError("normalized_adjacency: matrix must be square");
  Matrix a_hat = adjacency + Matrix::Identity(n, n);
  const Vector inv_sqrt_deg = a_hat.rowwise().sum().array().rsqrt();
  return inv_sqrt_deg.asDiagonal() * a_hat * inv_sqrt_deg.asDiagonal();
}

namespace {

void check_shapes(const EncoderParams& params, const Matrix& adj_norm) {
  if (params.h0.rows() != adj_norm.rows() || adj_norm.rows() != adj_norm.cols()) {
    throw InputError("encode: embedding table has " + std::to_string(params.h0.rows()) +
                     " rows but the graph has " + std::to_string(adj_norm.rows()) + " regions");
  }
  if (params.mix.rows() != params.h0.cols() || params.mix.cols() != params.h0.cols()) {
    throw InputError("encode: mixing matrix must be d x d");
  }
}

}  // namespace

Matrix encode(const EncoderParams& params, const Matrix& adj_norm) {
  check_shapes(params, adj_norm);
  Matrix pre = adj_norm * params.h0 * params.mix;
  const double leak = params.leak;
  return pre.unaryExpr([leak](double x) { return x >= 0.0 ? x : leak * x; });
}

Matrix encode(const EncoderParams& params, const CityGraph& graph) {
  return encode(params, normalized_adjacency(graph.adjacency));
}

EncoderGrads encode_backward(const EncoderParams& params, const Matrix& adj_norm,
                             const Matrix& upstream) {
  check_shapes(params, adj_norm);
  if (upstream.rows() != params.h0.rows() || upstream.cols() != params.h0.cols()) {
    throw InputError("encode_backward: upstream gradient shape mismatch");
  }
  const Matrix propagated = adj_norm * params.h0;
  const Matrix pre = propagated * params.mix;
  Matrix d_pre = upstream;
  for (Index i = 0; i < pre.rows(); ++i)
    for (Index k = 0; k < pre.cols(); ++k)
      if (pre(i, k) < 0.0) d_pre(i, k) *= params.leak;

  EncoderGrads g;
  g.mix = propagated.transpose() * d_pre;
  g.h0 = adj_norm.transpose() * d_pre * params.mix.transpose();
  return g;
}

EncoderGrads encode_backward(const EncoderParams& params, const CityGraph& graph,
                             const Matrix& upstream) {
  return encode_backward(params, normalized_adjacency(graph.adjacency), upstream);
}

IntraLoss intra_loss(const Matrix& z, const Matrix& mobility) {
  const Index n = z.rows();
  if (mobility.rows() != n || mobility.cols() != n) {
    throw InputError("intra_loss: mobility must be n x n with n = embedding rows");
  }
  for (Index i = 0; i < n; ++i) {
    if (std::abs(mobility.row(i).sum() - 1.0) > 1e-9 || mobility.row(i).minCoeff() < 0.0) {
      throw InputError("intra_loss: mobility row " + std::to_string(i) + " is not stochastic");
    }
  }

  const Matrix logits = z * z.transpose();
  Matrix probs(n, n);
  IntraLoss out;
  for (Index i = 0; i < n; ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    probs.row(i) = (logits.row(i).array() - lse).exp();
    for (Index j = 0; j < n; ++j) {
      if (mobility(i, j) > 0.0) out.loss -= mobility(i, j) * (logits(i, j) - lse);
    }
  }
  // dL/dlogits_ij = rowsum(M)_i * P̂_ij - M_ij; logits = z zᵀ is symmetric in z.
  const Matrix g = probs - mobility;
  out.grad = (g + g.transpose()) * z;
  return out;
}

}  // namespace scot
