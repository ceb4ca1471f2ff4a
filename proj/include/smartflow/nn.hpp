#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace smartflow::nn {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    void fill(double v) { data.assign(data.size(), v); }

    bool operator==(const Matrix&) const = default;
};

enum class ExecMode { Serial, Parallel };

/// Inner-loop kernels. Every output element is produced by exactly one loop
/// iteration with a serial accumulation, so Serial and Parallel results are
/// bit-identical regardless of thread count. The parallel variants fall back
/// to the serial path below a work threshold where fork/join costs dominate.
namespace kernels {

/// y = x * W^T + b   with x: B x in, w: out x in, b: out, y: B x out.
void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    Matrix& y, ExecMode mode);

/// Gradients for the affine layer given upstream dy (B x out):
///   dw[o][i] = sum_b dy[b][o] * x[b][i]
///   db[o]    = sum_b dy[b][o]
///   dx[b][i] = sum_o dy[b][o] * w[o][i]
void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                     Matrix& dw, std::vector<double>& db, Matrix& dx, ExecMode mode);

void relu_forward(const Matrix& z, Matrix& a, ExecMode mode);

/// dz = da where z > 0, else 0.
void relu_backward(const Matrix& z, const Matrix& da, Matrix& dz, ExecMode mode);

}  // namespace kernels

/// Fully connected network: affine layers with rectified-linear hidden
/// activations and a linear output layer.
class Mlp {
public:
    Mlp() = default;

    /// Uniform fan-in initialization: every weight and bias of a layer drawn
    /// from U(-1/sqrt(fan_in), +1/sqrt(fan_in)) with the given seed.
    Mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
        std::size_t output_dim, std::uint64_t seed);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t layer_count() const { return weights_.size(); }
    const std::vector<std::size_t>& hidden_sizes() const { return hidden_; }

    std::vector<Matrix>& weights() { return weights_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    ExecMode exec_mode() const { return mode_; }
    void set_exec_mode(ExecMode m) { mode_ = m; }

    /// Single-observation forward pass.
    std::vector<double> forward(const std::vector<double>& x) const;

    /// Batch forward pass; rows are observations.
    Matrix forward(const Matrix& x) const;

    /// Intermediate values kept for backpropagation.
    struct Cache {
        std::vector<Matrix> inputs;  // inputs[l] is what layer l saw
        std::vector<Matrix> pre;     // pre[l] is the affine output of layer l
    };

    struct Gradients {
        std::vector<Matrix> dw;
        std::vector<std::vector<double>> db;
    };

    Matrix forward_cached(const Matrix& x, Cache& cache) const;

    /// Backpropagates dLoss/dOutput through the cached pass.
    void backward(const Cache& cache, const Matrix& dout, Gradients& grads) const;

    /// Hard copy of all weights; shapes must match.
    void copy_weights_from(const Mlp& other);

    bool same_shape(const Mlp& other) const;

    // Flat parameter view (layer order, weights then bias), for finite
    // difference checks and serialization.
    std::size_t parameter_count() const;
    double get_parameter(std::size_t k) const;
    void set_parameter(std::size_t k, double value);

    bool operator==(const Mlp& other) const;

private:
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::vector<std::size_t> hidden_;
    std::vector<Matrix> weights_;               // weights_[l]: out x in
    std::vector<std::vector<double>> biases_;   // biases_[l]: out
    ExecMode mode_ = ExecMode::Parallel;
};

/// Adaptive moment estimation with the standard defaults. State is lazily
/// shaped to the first network it steps.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(Mlp& net, const Mlp::Gradients& grads);

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Matrix> mw_, vw_;
    std::vector<std::vector<double>> mb_, vb_;
};

}  // namespace smartflow::nn
