#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "subsel/rng.hpp"

namespace subsel {

using Vec = std::vector<double>;

struct ParamEntry {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return rows * cols; }
};

// Named slices of one flat parameter vector; doubles as the checkpoint
// layout descriptor.
class ParamLayout {
public:
    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);
    const ParamEntry& at(const std::string& name) const;
    const std::vector<ParamEntry>& entries() const { return entries_; }
    std::size_t total() const { return total_; }

private:
    std::vector<ParamEntry> entries_;
    std::size_t total_ = 0;
};

// ---- primitive ops ----------------------------------------------------

// y = W x + b with W row-major [out x in]
void affine_forward(std::span<const double> w, std::span<const double> b,
                    std::span<const double> x, std::span<double> y);
// accumulates dw, db, dx
void affine_backward(std::span<const double> w, std::span<const double> x,
                     std::span<const double> dy, std::span<double> dw, std::span<double> db,
                     std::span<double> dx);

void softmax_inplace(std::span<double> v);

struct LayerNormTape {
    Vec normalized;
    double inv_std = 0.0;
};

// y = gain * (x - mean) / sqrt(var + eps) + bias
void layer_norm_forward(std::span<const double> x, std::span<const double> gain,
                        std::span<const double> bias, std::span<double> y, LayerNormTape& tape);
void layer_norm_backward(std::span<const double> gain, const LayerNormTape& tape,
                         std::span<const double> dy, std::span<double> dgain,
                         std::span<double> dbias, std::span<double> dx);

inline constexpr double kLayerNormEps = 1e-10;

/// Weighted cross-entropy on one row of logits; writes the weighted gradient
/// and returns the weighted loss.
double softmax_cross_entropy(std::span<const double> logits, int label, double weight,
                             std::span<double> dlogits);

// Glorot-style uniform in +-sqrt(6/(fan_in+fan_out))
void init_uniform(std::span<double> w, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---- adaptive-moment optimizer -----------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long warmup_steps = 0;  // linear warmup to lr, then constant
};

class AdamState {
public:
    AdamState(std::size_t n, AdamConfig cfg);
    // Descends: to ascend an objective pass the negated gradient.
    void step(Vec& params, const Vec& grads);
    long steps_taken() const { return step_; }
    double last_lr() const { return last_lr_; }

private:
    AdamConfig cfg_;
    Vec m_, v_;
    long step_ = 0;
    double last_lr_ = 0.0;
};

// ---- reusable blocks over a shared flat parameter vector ----------------

struct DropoutTape {
    Vec mask;  // empty when inactive
};

void dropout_forward(std::span<double> x, double rate, bool train, Rng* rng, DropoutTape& tape);
void dropout_backward(const DropoutTape& tape, std::span<double> dx);

// Per-token salience softmax over learned embeddings; one vector per bag.
struct EmbeddingBagBlock {
    std::size_t vocab = 0, dim = 0;
    std::size_t table = 0, salience = 0;  // offsets

    static EmbeddingBagBlock add_to(ParamLayout& layout, const std::string& prefix,
                                    std::size_t vocab, std::size_t dim);
    void init(Vec& params, Rng& rng) const;

    struct Tape {
        std::vector<int> ids;
        Vec weights;
    };
    void forward(const Vec& params, std::span<const int> token_ids, Tape* tape,
                 std::span<double> out) const;
    void backward(const Vec& params, const Tape& tape, std::span<const double> dout,
                  Vec& grad) const;
};

// Single-head scaled dot-product self-attention with residual + layer norm.
struct AttentionBlock {
    std::size_t dim = 0;
    std::size_t wq = 0, wk = 0, wv = 0, wo = 0, ln_g = 0, ln_b = 0;

    static AttentionBlock add_to(ParamLayout& layout, const std::string& prefix, std::size_t dim);
    void init(Vec& params, Rng& rng) const;

    struct Tape {
        std::vector<Vec> x, q, k, v, ctx;
        std::vector<Vec> attn;  // row i: weights over j
        std::vector<LayerNormTape> ln;
    };
    void forward(const Vec& params, const std::vector<Vec>& items, Tape* tape,
                 std::vector<Vec>& out) const;
    void backward(const Vec& params, const Tape& tape, const std::vector<Vec>& dout, Vec& grad,
                  std::vector<Vec>& dx) const;
};

// Two ReLU hidden layers with dropout, then a linear map.
struct MlpBlock {
    std::size_t in = 0, hidden = 0, out = 0;
    double dropout = 0.0;
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0;

    static MlpBlock add_to(ParamLayout& layout, const std::string& prefix, std::size_t in,
                           std::size_t hidden, std::size_t out, double dropout);
    void init(Vec& params, Rng& rng) const;

    struct Tape {
        Vec x, a1, h1, a2, h2;
        DropoutTape d1, d2;
    };
    void forward(const Vec& params, std::span<const double> x, bool train, Rng* rng, Tape* tape,
                 std::span<double> y) const;
    void backward(const Vec& params, const Tape& tape, std::span<const double> dy, Vec& grad,
                  std::span<double> dx) const;
};

// ---- the relevance scorer ------------------------------------------------

struct ScorerConfig {
    int input_dim = 23;
    int hidden = 250;
    double dropout = 0.0;
    // normalization sits after the second hidden layer by default; this flag
    // moves it between the two hidden layers instead
    bool norm_after_first = false;
};

// Small feed-forward network mapping a feature vector to one relevance score:
// two tanh hidden layers with layer normalization before the final linear map.
class FeedForwardScorer {
public:
    FeedForwardScorer(ScorerConfig cfg, Rng& init_rng);

    const ScorerConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return layout_; }
    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    struct Tape {
        Vec x, a1, h1, n1, a2, h2, n2;
        LayerNormTape ln;
        DropoutTape d1, d2;
        bool consumed = false;
    };

    double forward(std::span<const double> x, bool train, Rng* rng, Tape& tape) const;
    double forward(std::span<const double> x) const;  // eval mode
    // accumulates into grad (sized layout().total()); a tape backs exactly one call
    void backward(Tape& tape, double dscore, Vec& grad) const;

private:
    ScorerConfig cfg_;
    ParamLayout layout_;
    Vec params_;
    std::size_t w1_, b1_, w2_, b2_, ln_g_, ln_b_, w3_, b3_;
};

// ---- finite differences ---------------------------------------------------

/// Max relative error between an analytic gradient and central finite
/// differences of `loss` over the coordinates of `params` (every `stride`-th
/// coordinate). Relative error uses |a - b| / max(1e-6, |a| + |b|).
double finite_diff_max_rel_err(Vec& params, const std::function<double()>& loss,
                               const Vec& analytic_grad, double eps = 1e-5,
                               std::size_t stride = 1);

}  // namespace subsel
