#pragma once

#include <random>

#include "scot/citydata.hpp"
#include "scot/types.hpp"

namespace scot {

/// Learnable state of the graph-propagation encoder for one city:
///   z = leaky( Â · H0 · W ),  Â = D^{-1/2} (A + I) D^{-1/2}.
struct EncoderParams {
  Matrix h0;   // n x d embedding table
  Matrix mix;  // d x d mixing matrix
  double leak = 0.25;

  Index regions() const noexcept { return h0.rows(); }
  Index dim() const noexcept { return h0.cols(); }
};

struct EncoderGrads {
  Matrix h0;
  Matrix mix;
};

/// H0 ~ N(0, init_std^2), W = I + N(0, 0.01^2).
EncoderParams init_encoder(Index n, Index d, std::mt19937_64& rng, double init_std = 0.1,
                           double leak = 0.25);

/// Permutation-equivariant start: the leading eigenvectors of (M + Mᵀ)/2,
/// sign-fixed so each has positive third moment, scaled to entry std
/// `init_std`, plus N(0, (0.01 init_std)^2) jitter. Columns beyond n are
/// jitter only. W as in init_encoder.
EncoderParams init_encoder_spectral(const CityGraph& graph, Index d, std::mt19937_64& rng,
                                    double init_std = 0.1, double leak = 0.25);

/// Symmetric-normalized adjacency with self-loops.
Matrix normalized_adjacency(const Matrix& adjacency);

Matrix encode(const EncoderParams& params, const Matrix& adj_norm);
Matrix encode(const EncoderParams& params, const CityGraph& graph);

/// Chain rule through encode() given dLoss/dz.
EncoderGrads encode_backward(const EncoderParams& params, const Matrix& adj_norm,
                             const Matrix& upstream);
EncoderGrads encode_backward(const EncoderParams& params, const CityGraph& graph,
                             const Matrix& upstream);

struct IntraLoss {
  double loss = 0.0;
  Matrix grad;  // dLoss/dz
};

/// Mobility-weighted NLL of the inner-product softmax P̂_i· = softmax_k(z_i·z_k).
IntraLoss intra_loss(const Matrix& z, const Matrix& mobility);

}  // namespace scot
