#include "lotus/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lotus/errors.hpp"

namespace lotus {

namespace {

void add_bias_rows(DenseMatrix& z, const std::vector<double>& b) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* zi = z.row_ptr(i);
        const double bi = b[i];
        for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += bi;
    }
}

void tanh_inplace(DenseMatrix& z) {
    for (double& v : z.data()) v = std::tanh(v);
}

/// Column-wise softmax probabilities and, if labels given, the mean cross
/// entropy. logits is overwritten with the probabilities.
double softmax_columns(DenseMatrix& logits, const std::vector<std::size_t>* labels) {
    const std::size_t c = logits.rows();
    const std::size_t b = logits.cols();
    double loss = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
        double mx = logits(0, j);
        for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, logits(i, j));
        double denom = 0.0;
        for (std::size_t i = 0; i < c; ++i) denom += std::exp(logits(i, j) - mx);
        const double log_denom = std::log(denom);
        if (labels) {
            loss -= logits((*labels)[j], j) - mx - log_denom;
        }
        for (std::size_t i = 0; i < c; ++i) {
            logits(i, j) = std::exp(logits(i, j) - mx - log_denom);
        }
    }
    return b > 0 ? loss / static_cast<double>(b) : 0.0;
}

} // namespace

Mlp Mlp::random(const std::vector<std::size_t>& widths, RngState& rng) {
    if (widths.size() < 2) {
        throw DimensionError("Mlp::random: need at least input and output widths");
    }
    Mlp net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.weight = gaussian_matrix(widths[l + 1], widths[l], rng);
        const double s = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        for (double& v : layer.weight.data()) v *= s;
        layer.bias.assign(widths[l + 1], 0.0);
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

std::size_t Mlp::input_dim() const {
    return layers_.empty() ? 0 : layers_.front().weight.cols();
}

std::size_t Mlp::output_dim() const {
    return layers_.empty() ? 0 : layers_.back().weight.rows();
}

DenseMatrix Mlp::forward(const DenseMatrix& x) const {
    DenseMatrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        DenseMatrix z = matmul(layers_[l].weight, a);
        add_bias_rows(z, layers_[l].bias);
        if (l + 1 < layers_.size()) tanh_inplace(z);
        a = std::move(z);
    }
    return a;
}

double Mlp::loss_and_gradients(const DenseMatrix& x, const std::vector<std::size_t>& labels,
                               Gradients& out) const {
    if (labels.size() != x.cols()) {
        std::ostringstream os;
        os << "loss_and_gradients: " << labels.size() << " labels for " << x.cols() << " samples";
        throw DimensionError(os.str());
    }
    const std::size_t depth = layers_.size();
    const std::size_t batch = x.cols();

    // Forward pass keeping every activation for the backward sweep.
    std::vector<DenseMatrix> acts;
    acts.reserve(depth + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < depth; ++l) {
        DenseMatrix z = matmul(layers_[l].weight, acts.back());
        add_bias_rows(z, layers_[l].bias);
        if (l + 1 < depth) tanh_inplace(z);
        acts.push_back(std::move(z));
    }

    DenseMatrix delta = acts.back(); // logits -> probabilities in place
    const double loss = softmax_columns(delta, &labels);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t j = 0; j < batch; ++j) delta(labels[j], j) -= 1.0;
    for (double& v : delta.data()) v *= inv_b;

    out.weight.assign(depth, DenseMatrix());
    out.bias.assign(depth, {});
    for (std::size_t l = depth; l-- > 0;) {
        out.weight[l] = matmul(delta, transpose(acts[l]));
        out.bias[l].assign(layers_[l].bias.size(), 0.0);
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            const double* di = delta.row_ptr(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < delta.cols(); ++j) acc += di[j];
            out.bias[l][i] = acc;
        }
        if (l > 0) {
            DenseMatrix back = matmul(transpose(layers_[l].weight), delta);
            // tanh' = 1 - a^2 through the hidden activation.
            for (std::size_t i = 0; i < back.size(); ++i) {
                const double a = acts[l].data()[i];
                back.data()[i] *= 1.0 - a * a;
            }
            delta = std::move(back);
        }
    }
    return loss;
}

double Mlp::loss(const DenseMatrix& x, const std::vector<std::size_t>& labels) const {
    if (labels.size() != x.cols()) {
        throw DimensionError("loss: label count does not match batch");
    }
    DenseMatrix logits = forward(x);
    return softmax_columns(logits, &labels);
}

double Mlp::accuracy(const DenseMatrix& x, const std::vector<std::size_t>& labels) const {
    if (labels.size() != x.cols()) {
        throw DimensionError("accuracy: label count does not match batch");
    }
    const DenseMatrix logits = forward(x);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < logits.rows(); ++i) {
            if (logits(i, j) > logits(arg, j)) arg = i;
        }
        if (arg == labels[j]) ++hits;
    }
    return logits.cols() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(logits.cols());
}

Dataset teacher_dataset(const std::vector<std::size_t>& widths, std::size_t samples,
                        RngState& rng) {
    if (widths.size() < 2) {
        throw DimensionError("teacher_dataset: need at least input and output widths");
    }
    Dataset set;
    set.x = gaussian_matrix(widths.front(), samples, rng);
    const Mlp teacher = Mlp::random(widths, rng);
    const DenseMatrix logits = teacher.forward(set.x);
    set.labels.resize(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < logits.rows(); ++i) {
            if (logits(i, j) > logits(arg, j)) arg = i;
        }
        set.labels[j] = arg;
    }
    return set;
}

} // namespace lotus
