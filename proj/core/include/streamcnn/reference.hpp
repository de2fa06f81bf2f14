#pragma once

#include <vector>

#include "streamcnn/kernels.hpp"
#include "streamcnn/model.hpp"
#include "streamcnn/tensor.hpp"

/// Direct, loop-nest implementations of every layer. Slow and obvious; used as
/// the oracle for the streaming engine.
namespace streamcnn::reference {

/// Y[v,u,n] = b[n] + sum_c sum_j sum_k X[v*s+j, u*s+k, c] * W[j,k,c,n] over the
/// zero-padded input; the window at output (v,u) is anchored at its top-left.
Tensor conv2d_direct(const Tensor& x, const Layer& layer, ArithMode mode = ArithMode::Real,
                     const fx::FxFormat& in_format = fx::kDefaultFormat);
/// Real-mode convenience form: w has shape (K, K, C, N), bias (N) or empty.
Tensor conv2d_direct(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, Padding padding);

Tensor pool_direct(const Tensor& x, const Layer& layer, ArithMode mode = ArithMode::Real,
                   const fx::FxFormat& in_format = fx::kDefaultFormat);
Tensor pool_direct(const Tensor& x, int pool, LayerKind kind);

Tensor dense_direct(const Tensor& x, const Layer& layer, ArithMode mode = ArithMode::Real,
                    const fx::FxFormat& in_format = fx::kDefaultFormat);
/// w has shape (in, out).
Tensor dense_direct(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor softmax(const Tensor& x);

Tensor apply_layer(const Layer& layer, const Tensor& x, ArithMode mode, const fx::FxFormat& in_format);

/// Whole-graph evaluation. In fixed mode the input is quantized to the graph's
/// input format and every layer output to that layer's output format.
Tensor run_direct(const ModelGraph& g, const Tensor& x, ArithMode mode = ArithMode::Real);

/// As run_direct, returning every layer's output.
std::vector<Tensor> run_direct_trace(const ModelGraph& g, const Tensor& x, ArithMode mode = ArithMode::Real);

}  // namespace streamcnn::reference
