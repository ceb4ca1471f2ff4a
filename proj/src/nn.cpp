#include "smartflow/nn.hpp"

#include <cmath>
#include <random>

#include "smartflow/errors.hpp"

namespace smartflow::nn {

namespace kernels {

namespace {
// Below this many multiply-adds the fork/join overhead outweighs the loop.
constexpr std::size_t kParallelCutoff = 32768;

bool go_parallel(ExecMode mode, std::size_t work) {
    return mode == ExecMode::Parallel && work >= kParallelCutoff;
}
}  // namespace

void affine_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    Matrix& y, ExecMode mode) {
    if (x.cols != w.cols || b.size() != w.rows) {
        throw ContractViolation("affine_forward: shape mismatch");
    }
    const std::ptrdiff_t bsz = static_cast<std::ptrdiff_t>(x.rows);
    const std::size_t out = w.rows, in = w.cols;
    y = Matrix(x.rows, out);

    if (go_parallel(mode, x.rows * out * in)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t bi = 0; bi < bsz; ++bi) {
            const double* xr = x.row(bi);
            double* yr = y.row(bi);
            for (std::size_t o = 0; o < out; ++o) {
                const double* wr = w.row(o);
                double acc = b[o];
                for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
                yr[o] = acc;
            }
        }
    } else {
        for (std::ptrdiff_t bi = 0; bi < bsz; ++bi) {
            const double* xr = x.row(bi);
            double* yr = y.row(bi);
            for (std::size_t o = 0; o < out; ++o) {
                const double* wr = w.row(o);
                double acc = b[o];
                for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
                yr[o] = acc;
            }
        }
    }
}

void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                     Matrix& dw, std::vector<double>& db, Matrix& dx, ExecMode mode) {
    if (x.rows != dy.rows || x.cols != w.cols || dy.cols != w.rows) {
        throw ContractViolation("affine_backward: shape mismatch");
    }
    const std::size_t bsz = x.rows, out = w.rows, in = w.cols;
    dw = Matrix(out, in);
    db.assign(out, 0.0);
    dx = Matrix(bsz, in);

    const std::size_t work = bsz * out * in;
    // Weight and bias gradients: one thread owns each output row, batch
    // accumulation stays in serial order.
    if (go_parallel(mode, work)) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(out); ++o) {
            double* dwr = dw.row(o);
            double acc_b = 0.0;
            for (std::size_t bi = 0; bi < bsz; ++bi) {
                const double g = dy.at(bi, o);
                const double* xr = x.row(bi);
                for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
                acc_b += g;
            }
            db[o] = acc_b;
        }
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(bsz); ++bi) {
            const double* dyr = dy.row(bi);
            double* dxr = dx.row(bi);
            for (std::size_t o = 0; o < out; ++o) {
                const double g = dyr[o];
                const double* wr = w.row(o);
                for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
            }
        }
    } else {
        for (std::size_t o = 0; o < out; ++o) {
            double* dwr = dw.row(o);
            double acc_b = 0.0;
            for (std::size_t bi = 0; bi < bsz; ++bi) {
                const double g = dy.at(bi, o);
                const double* xr = x.row(bi);
                for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
                acc_b += g;
            }
            db[o] = acc_b;
        }
        for (std::size_t bi = 0; bi < bsz; ++bi) {
            const double* dyr = dy.row(bi);
            double* dxr = dx.row(bi);
            for (std::size_t o = 0; o < out; ++o) {
                const double g = dyr[o];
                const double* wr = w.row(o);
                for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
            }
        }
    }
}

void relu_forward(const Matrix& z, Matrix& a, ExecMode mode) {
    a = Matrix(z.rows, z.cols);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(z.data.size());
    if (go_parallel(mode, z.data.size())) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            a.data[k] = z.data[k] > 0.0 ? z.data[k] : 0.0;
        }
    } else {
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            a.data[k] = z.data[k] > 0.0 ? z.data[k] : 0.0;
        }
    }
}

void relu_backward(const Matrix& z, const Matrix& da, Matrix& dz, ExecMode mode) {
    if (z.rows != da.rows || z.cols != da.cols) {
        throw ContractViolation("relu_backward: shape mismatch");
    }
    dz = Matrix(z.rows, z.cols);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(z.data.size());
    if (go_parallel(mode, z.data.size())) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            dz.data[k] = z.data[k] > 0.0 ? da.data[k] : 0.0;
        }
    } else {
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            dz.data[k] = z.data[k] > 0.0 ? da.data[k] : 0.0;
        }
    }
}

}  // namespace kernels

Mlp::Mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
         std::size_t output_dim, std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim), hidden_(hidden) {
    if (input_dim == 0 || output_dim == 0) {
        throw ContractViolation("Mlp: zero-sized input or output");
    }
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    for (std::size_t h : hidden) {
        if (h == 0) throw ContractViolation("Mlp: zero-sized hidden layer");
        dims.push_back(h);
    }
    dims.push_back(output_dim);

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l], out = dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(out, in);
        for (double& v : w.data) v = dist(rng);
        std::vector<double> b(out);
        for (double& v : b) v = dist(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
    }
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
    if (x.size() != input_dim_) {
        throw ContractViolation("Mlp::forward: input length != input_dim");
    }
    Matrix m(1, x.size());
    m.data = x;
    Matrix out = forward(m);
    return out.data;
}

Matrix Mlp::forward(const Matrix& x) const {
    Cache scratch;
    return forward_cached(x, scratch);
}

Matrix Mlp::forward_cached(const Matrix& x, Cache& cache) const {
    if (x.cols != input_dim_) {
        throw ContractViolation("Mlp::forward: batch width != input_dim");
    }
    cache.inputs.clear();
    cache.pre.clear();
    Matrix cur = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        cache.inputs.push_back(cur);
        Matrix z;
        kernels::affine_forward(cur, weights_[l], biases_[l], z, mode_);
        cache.pre.push_back(z);
        if (l + 1 < weights_.size()) {
            kernels::relu_forward(z, cur, mode_);
        } else {
            cur = std::move(z);
        }
    }
    return cur;
}

void Mlp::backward(const Cache& cache, const Matrix& dout, Gradients& grads) const {
    if (cache.inputs.size() != weights_.size()) {
        throw ContractViolation("Mlp::backward: cache does not match network");
    }
    grads.dw.assign(weights_.size(), Matrix());
    grads.db.assign(weights_.size(), {});

    Matrix delta = dout;
    for (std::size_t l = weights_.size(); l-- > 0;) {
        Matrix dx;
        kernels::affine_backward(cache.inputs[l], weights_[l], delta,
                                 grads.dw[l], grads.db[l], dx, mode_);
        if (l > 0) {
            kernels::relu_backward(cache.pre[l - 1], dx, delta, mode_);
        }
    }
}

void Mlp::copy_weights_from(const Mlp& other) {
    if (!same_shape(other)) throw ContractViolation("copy_weights_from: shape mismatch");
    weights_ = other.weights_;
    biases_ = other.biases_;
}

bool Mlp::same_shape(const Mlp& other) const {
    return input_dim_ == other.input_dim_ && output_dim_ == other.output_dim_ &&
           hidden_ == other.hidden_;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += weights_[l].data.size() + biases_[l].size();
    }
    return n;
}

double Mlp::get_parameter(std::size_t k) const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (k < weights_[l].data.size()) return weights_[l].data[k];
        k -= weights_[l].data.size();
        if (k < biases_[l].size()) return biases_[l][k];
        k -= biases_[l].size();
    }
    throw ContractViolation("get_parameter: index out of range");
}

void Mlp::set_parameter(std::size_t k, double value) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (k < weights_[l].data.size()) {
            weights_[l].data[k] = value;
            return;
        }
        k -= weights_[l].data.size();
        if (k < biases_[l].size()) {
            biases_[l][k] = value;
            return;
        }
        k -= biases_[l].size();
    }
    throw ContractViolation("set_parameter: index out of range");
}

bool Mlp::operator==(const Mlp& other) const {
    return same_shape(other) && weights_ == other.weights_ && biases_ == other.biases_;
}

void AdamOptimizer::step(Mlp& net, const Mlp::Gradients& grads) {
    auto& ws = net.weights();
    auto& bs = net.biases();
    if (grads.dw.size() != ws.size() || grads.db.size() != bs.size()) {
        throw ContractViolation("AdamOptimizer::step: gradient/network mismatch");
    }
    if (mw_.empty()) {
        for (std::size_t l = 0; l < ws.size(); ++l) {
            mw_.emplace_back(ws[l].rows, ws[l].cols);
            vw_.emplace_back(ws[l].rows, ws[l].cols);
            mb_.emplace_back(bs[l].size(), 0.0);
            vb_.emplace_back(bs[l].size(), 0.0);
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

    auto update = [&](double& w, double g, double& m, double& v) {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        w -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    };

    for (std::size_t l = 0; l < ws.size(); ++l) {
        if (grads.dw[l].rows != ws[l].rows || grads.dw[l].cols != ws[l].cols) {
            throw ContractViolation("AdamOptimizer::step: gradient shape mismatch");
        }
        for (std::size_t k = 0; k < ws[l].data.size(); ++k) {
            update(ws[l].data[k], grads.dw[l].data[k], mw_[l].data[k], vw_[l].data[k]);
        }
        for (std::size_t k = 0; k < bs[l].size(); ++k) {
            update(bs[l][k], grads.db[l][k], mb_[l][k], vb_[l][k]);
        }
    }
}

}  // namespace smartflow::nn
