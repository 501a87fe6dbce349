#ifndef LOTUS_MLP_HPP
#define LOTUS_MLP_HPP

#include <cstddef>
#include <vector>

#include "lotus/matrix.hpp"
#include "lotus/rng.hpp"

namespace lotus {

/// Fully connected network with tanh hidden activations, a linear output
/// layer and softmax cross-entropy loss. Inputs are column-major batches
/// (features x batch). Small by design; exists so the optimizer can be
/// exercised on a real nonconvex objective with exact reverse-mode
/// gradients.
class Mlp {
public:
    struct Layer {
        DenseMatrix weight;    // out x in
        std::vector<double> bias; // out
    };

    Mlp() = default;

    /// widths = {in, hidden..., out}; weights ~ N(0, 1/sqrt(fan_in)).
    static Mlp random(const std::vector<std::size_t>& widths, RngState& rng);

    std::size_t layer_count() const noexcept { return layers_.size(); }
    Layer& layer(std::size_t i) { return layers_[i]; }
    const Layer& layer(std::size_t i) const { return layers_[i]; }

    std::size_t input_dim() const;
    std::size_t output_dim() const;

    /// Logits for a batch (out x batch).
    DenseMatrix forward(const DenseMatrix& x) const;

    struct Gradients {
        std::vector<DenseMatrix> weight;
        std::vector<std::vector<double>> bias;
    };

    /// Mean softmax cross-entropy over the batch and its gradient w.r.t.
    /// every parameter block.
    double loss_and_gradients(const DenseMatrix& x, const std::vector<std::size_t>& labels,
                              Gradients& out) const;

    double loss(const DenseMatrix& x, const std::vector<std::size_t>& labels) const;

    /// Fraction of argmax predictions matching labels.
    double accuracy(const DenseMatrix& x, const std::vector<std::size_t>& labels) const;

private:
    std::vector<Layer> layers_;
};

struct Dataset {
    DenseMatrix x; // features x samples
    std::vector<std::size_t> labels;
};

/// Synthetic classification set: Gaussian inputs labeled by the argmax
/// output of a random teacher network with the given widths.
Dataset teacher_dataset(const std::vector<std::size_t>& widths, std::size_t samples,
                        RngState& rng);

} // namespace lotus

#endif
