#include "relaynet/mlp.hpp"

#include <cmath>
#include <string>

#include "relaynet/error.hpp"

namespace relaynet {

MlpParams MlpParams::zeros(std::vector<std::size_t> layer_sizes) {
  require(layer_sizes.size() >= 2, ErrorCode::Dimension, "mlp needs at least input and output sizes");
  MlpParams p;
  p.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    require(p.layer_sizes[l] > 0 && p.layer_sizes[l + 1] > 0, ErrorCode::Dimension,
            "mlp layer sizes must be positive");
    p.weights.emplace_back(std::vector<std::size_t>{p.layer_sizes[l + 1], p.layer_sizes[l]});
    p.biases.emplace_back(std::vector<std::size_t>{p.layer_sizes[l + 1]});
  }
  return p;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return n;
}

std::vector<std::size_t> MlpParams::hidden_sizes() const {
  if (layer_sizes.size() <= 2) return {};
  return {layer_sizes.begin() + 1, layer_sizes.end() - 1};
}

void MlpParams::validate() const {
  require(layer_sizes.size() >= 2, ErrorCode::Dimension, "mlp needs at least two layer sizes");
  require(weights.size() == layer_sizes.size() - 1 && biases.size() == weights.size(),
          ErrorCode::Dimension, "mlp layer count does not match layer sizes");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto in = layer_sizes[l];
    const auto out = layer_sizes[l + 1];
    require(weights[l].shape() == std::vector<std::size_t>{out, in}, ErrorCode::Dimension,
            "mlp weight shape mismatch at layer " + std::to_string(l));
    require(biases[l].shape() == std::vector<std::size_t>{out}, ErrorCode::Dimension,
            "mlp bias shape mismatch at layer " + std::to_string(l));
  }
}

std::vector<std::span<double>> MlpParams::segments() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l].data());
    out.push_back(biases[l].data());
  }
  return out;
}

std::vector<std::span<const double>> MlpParams::segments() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l].data());
    out.push_back(biases[l].data());
  }
  return out;
}

void MlpParams::set_zero() {
  for (auto& w : weights) w.fill(0.0);
  for (auto& b : biases) b.fill(0.0);
}

namespace {

// Rows of the returned [rows, cols] matrix are orthonormal when rows <= cols,
// otherwise the columns are.
std::vector<double> random_orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  const bool transpose = rows < cols;
  const std::size_t n = transpose ? cols : rows;  // long side
  const std::size_t k = transpose ? rows : cols;  // short side
  std::vector<double> a(n * k);                   // column-major: k columns of length n
  for (auto& v : a) v = standard_normal(rng);
  for (std::size_t j = 0; j < k; ++j) {
    double* cj = &a[j * n];
    for (std::size_t i = 0; i < j; ++i) {
      const double* ci = &a[i * n];
      double dot = 0.0;
      for (std::size_t r = 0; r < n; ++r) dot += ci[r] * cj[r];
      for (std::size_t r = 0; r < n; ++r) cj[r] -= dot * ci[r];
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += cj[r] * cj[r];
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (std::size_t r = 0; r < n; ++r) cj[r] /= norm;
  }
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = transpose ? a[r * n + c] : a[c * n + r];
  return out;
}

}  // namespace

void init_orthogonal(MlpParams& params, Rng& rng, double hidden_gain, double output_gain) {
  params.validate();
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto out = params.layer_sizes[l + 1];
    const auto in = params.layer_sizes[l];
    const double gain = (l + 1 == params.num_layers()) ? output_gain : hidden_gain;
    auto q = random_orthogonal(out, in, rng);
    auto w = params.weights[l].data();
    for (std::size_t i = 0; i < q.size(); ++i) w[i] = gain * q[i];
    params.biases[l].fill(0.0);
  }
}

MlpTape::MlpTape(const MlpParams& params) {
  activations_.resize(params.layer_sizes.size());
  deltas_.resize(params.layer_sizes.size());
  for (std::size_t l = 0; l < params.layer_sizes.size(); ++l) {
    activations_[l].resize(params.layer_sizes[l]);
    deltas_[l].resize(params.layer_sizes[l]);
  }
}

std::span<const double> MlpTape::forward(const MlpParams& params, std::span<const double> input) {
  const std::size_t layers = params.num_layers();
  if (input.size() != params.input_size())
    fail(ErrorCode::Dimension, "mlp input size " + std::to_string(input.size()) + " != " +
                                   std::to_string(params.input_size()));
  if (!all_finite(input)) fail(ErrorCode::Numeric, "non-finite mlp input");
  std::copy(input.begin(), input.end(), activations_[0].begin());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = params.layer_sizes[l];
    const std::size_t out = params.layer_sizes[l + 1];
    const double* w = params.weights[l].data().data();
    const double* b = params.biases[l].data().data();
    const double* x = activations_[l].data();
    double* y = activations_[l + 1].data();
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * x[i];
      y[o] = hidden ? std::tanh(acc) : acc;
    }
  }
  const auto& result = activations_.back();
  if (!all_finite(result)) fail(ErrorCode::Numeric, "non-finite mlp output");
  return result;
}

void MlpTape::backward(const MlpParams& params, std::span<const double> output_grad, MlpParams* grads,
                       std::span<double> input_grad) {
  const std::size_t layers = params.num_layers();
  if (output_grad.size() != params.output_size())
    fail(ErrorCode::Dimension, "mlp output gradient size mismatch");
  std::copy(output_grad.begin(), output_grad.end(), deltas_[layers].begin());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = params.layer_sizes[l];
    const std::size_t out = params.layer_sizes[l + 1];
    const double* w = params.weights[l].data().data();
    const double* x = activations_[l].data();
    double* d = deltas_[l + 1].data();
    if (l + 1 < layers) {
      // tanh'(z) = 1 - tanh(z)^2 with tanh(z) cached as the activation.
      const double* y = activations_[l + 1].data();
      for (std::size_t o = 0; o < out; ++o) d[o] *= 1.0 - y[o] * y[o];
    }
    if (grads) {
      double* gw = grads->weights[l].data().data();
      double* gb = grads->biases[l].data().data();
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        gb[o] += dv;
        double* gwr = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) gwr[i] += dv * x[i];
      }
    }
    if (l > 0 || !input_grad.empty()) {
      double* dx = deltas_[l].data();
      for (std::size_t i = 0; i < in; ++i) dx[i] = 0.0;
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) dx[i] += wr[i] * dv;
      }
    }
  }
  if (!input_grad.empty()) {
    if (input_grad.size() != params.input_size()) fail(ErrorCode::Dimension, "mlp input gradient size mismatch");
    std::copy(deltas_[0].begin(), deltas_[0].end(), input_grad.begin());
  }
}

namespace {

std::size_t batch_rows(const Tensor& t, std::size_t width, const char* what) {
  if (t.rank() == 1) {
    if (t.dim(0) != width) fail(ErrorCode::Dimension, std::string(what) + " last dimension mismatch");
    return 1;
  }
  if (t.rank() != 2 || t.dim(1) != width)
    fail(ErrorCode::Dimension, std::string(what) + " last dimension mismatch");
  return t.dim(0);
}

}  // namespace

Tensor mlp_forward(const MlpParams& params, const Tensor& input) {
  params.validate();
  const std::size_t rows = batch_rows(input, params.input_size(), "mlp input");
  Tensor output = input.rank() == 1 ? Tensor({params.output_size()})
                                    : Tensor({rows, params.output_size()});
  MlpTape tape(params);
  for (std::size_t r = 0; r < rows; ++r) {
    auto y = tape.forward(params, input.row(r));
    std::copy(y.begin(), y.end(), output.row(r).begin());
  }
  return output;
}

MlpGradients backprop(const MlpParams& params, const Tensor& input, const Tensor& output_grad) {
  params.validate();
  const std::size_t rows = batch_rows(input, params.input_size(), "mlp input");
  const std::size_t grad_rows = batch_rows(output_grad, params.output_size(), "mlp output gradient");
  require(rows == grad_rows && input.rank() == output_grad.rank(), ErrorCode::Dimension,
          "output gradient does not match output shape");
  if (!output_grad.all_finite()) fail(ErrorCode::Numeric, "non-finite output gradient");
  MlpGradients g{MlpParams::zeros(params.layer_sizes), Tensor(input.shape())};
  MlpTape tape(params);
  for (std::size_t r = 0; r < rows; ++r) {
    tape.forward(params, input.row(r));
    tape.backward(params, output_grad.row(r), &g.params, g.input.row(r));
  }
  for (const auto& w : g.params.weights) w.require_finite("weight gradient");
  for (const auto& b : g.params.biases) b.require_finite("bias gradient");
  g.input.require_finite("input gradient");
  return g;
}

}  // namespace relaynet
