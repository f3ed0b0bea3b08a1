#include "subsel/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subsel {

std::size_t ParamLayout::add(const std::string& name, std::size_t rows, std::size_t cols) {
    for (const auto& e : entries_)
        if (e.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
    ParamEntry e{name, rows, cols, total_};
    total_ += e.size();
    entries_.push_back(std::move(e));
    return entries_.back().offset;
}

const ParamEntry& ParamLayout::at(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw std::out_of_range("unknown parameter name: " + name);
}

void affine_forward(std::span<const double> w, std::span<const double> b,
                    std::span<const double> x, std::span<double> y) {
    const std::size_t out = y.size(), in = x.size();
    for (std::size_t i = 0; i < out; ++i) {
        double acc = b.empty() ? 0.0 : b[i];
        const double* row = w.data() + i * in;
        for (std::size_t j = 0; j < in; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void affine_backward(std::span<const double> w, std::span<const double> x,
                     std::span<const double> dy, std::span<double> dw, std::span<double> db,
                     std::span<double> dx) {
    const std::size_t out = dy.size(), in = x.size();
    for (std::size_t i = 0; i < out; ++i) {
        const double g = dy[i];
        if (!db.empty()) db[i] += g;
        double* drow = dw.data() + i * in;
        const double* row = w.data() + i * in;
        for (std::size_t j = 0; j < in; ++j) {
            drow[j] += g * x[j];
            if (!dx.empty()) dx[j] += g * row[j];
        }
    }
}

void softmax_inplace(std::span<double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    double z = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        z += x;
    }
    for (double& x : v) x /= z;
}

void layer_norm_forward(std::span<const double> x, std::span<const double> gain,
                        std::span<const double> bias, std::span<double> y, LayerNormTape& tape) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    tape.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    tape.normalized.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tape.normalized[i] = (x[i] - mean) * tape.inv_std;
        y[i] = gain[i] * tape.normalized[i] + bias[i];
    }
}

void layer_norm_backward(std::span<const double> gain, const LayerNormTape& tape,
                         std::span<const double> dy, std::span<double> dgain,
                         std::span<double> dbias, std::span<double> dx) {
    const std::size_t n = dy.size();
    double sum_dn = 0.0, sum_dn_xhat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dn = dy[i] * gain[i];
        sum_dn += dn;
        sum_dn_xhat += dn * tape.normalized[i];
        dgain[i] += dy[i] * tape.normalized[i];
        dbias[i] += dy[i];
    }
    const double inv_n = 1.0 / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double dn = dy[i] * gain[i];
        dx[i] += tape.inv_std * (dn - inv_n * sum_dn - tape.normalized[i] * inv_n * sum_dn_xhat);
    }
}

double softmax_cross_entropy(std::span<const double> logits, int label, double weight,
                             std::span<double> dlogits) {
    Vec p(logits.begin(), logits.end());
    softmax_inplace(p);
    for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] += weight * p[i];
    dlogits[label] -= weight;
    return -weight * std::log(std::max(p[label], 1e-300));
}

void init_uniform(std::span<double> w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * a;
}

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::step(Vec& params, const Vec& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("AdamState::step: shape mismatch");
    ++step_;
    double lr = cfg_.lr;
    if (cfg_.warmup_steps > 0 && step_ < cfg_.warmup_steps)
        lr = cfg_.lr * static_cast<double>(step_) / static_cast<double>(cfg_.warmup_steps);
    last_lr_ = lr;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

void dropout_forward(std::span<double> x, double rate, bool train, Rng* rng, DropoutTape& tape) {
    tape.mask.clear();
    if (!train || rate <= 0.0) return;
    if (rng == nullptr) throw std::invalid_argument("dropout: training mode needs an rng");
    tape.mask.resize(x.size());
    const double keep = 1.0 - rate;
    for (std::size_t i = 0; i < x.size(); ++i) {
        tape.mask[i] = rng->uniform() < rate ? 0.0 : 1.0 / keep;
        x[i] *= tape.mask[i];
    }
}

void dropout_backward(const DropoutTape& tape, std::span<double> dx) {
    if (tape.mask.empty()) return;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= tape.mask[i];
}

// ---- embedding bag ---------------------------------------------------------

EmbeddingBagBlock EmbeddingBagBlock::add_to(ParamLayout& layout, const std::string& prefix,
                                            std::size_t vocab, std::size_t dim) {
    EmbeddingBagBlock b;
    b.vocab = vocab;
    b.dim = dim;
    b.table = layout.add(prefix + ".table", vocab, dim);
    b.salience = layout.add(prefix + ".salience", vocab, 1);
    return b;
}

void EmbeddingBagBlock::init(Vec& params, Rng& rng) const {
    init_uniform(std::span(params).subspan(table, vocab * dim), vocab, dim, rng);
    std::fill_n(params.begin() + salience, vocab, 0.0);  // uniform weights at start
}

void EmbeddingBagBlock::forward(const Vec& params, std::span<const int> token_ids, Tape* tape,
                                std::span<double> out) const {
    if (token_ids.empty()) throw std::invalid_argument("embedding bag: empty token list");
    Vec w(token_ids.size());
    for (std::size_t i = 0; i < token_ids.size(); ++i) {
        const int id = token_ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab)
            throw std::out_of_range("embedding bag: token id out of range");
        w[i] = params[salience + id];
    }
    softmax_inplace(w);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < token_ids.size(); ++i) {
        const double* e = params.data() + table + static_cast<std::size_t>(token_ids[i]) * dim;
        for (std::size_t d = 0; d < dim; ++d) out[d] += w[i] * e[d];
    }
    if (tape) {
        tape->ids.assign(token_ids.begin(), token_ids.end());
        tape->weights = std::move(w);
    }
}

void EmbeddingBagBlock::backward(const Vec& params, const Tape& tape,
                                 std::span<const double> dout, Vec& grad) const {
    const std::size_t m = tape.ids.size();
    // per-token contribution e_i . dout drives both table and salience grads
    Vec dot(m);
    double mean_dot = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* e = params.data() + table + static_cast<std::size_t>(tape.ids[i]) * dim;
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) acc += e[d] * dout[d];
        dot[i] = acc;
        mean_dot += tape.weights[i] * acc;
    }
    for (std::size_t i = 0; i < m; ++i) {
        double* ge = grad.data() + table + static_cast<std::size_t>(tape.ids[i]) * dim;
        for (std::size_t d = 0; d < dim; ++d) ge[d] += tape.weights[i] * dout[d];
        grad[salience + tape.ids[i]] += tape.weights[i] * (dot[i] - mean_dot);
    }
}

// ---- self-attention ---------------------------------------------------------

AttentionBlock AttentionBlock::add_to(ParamLayout& layout, const std::string& prefix,
                                      std::size_t dim) {
    AttentionBlock b;
    b.dim = dim;
    b.wq = layout.add(prefix + ".wq", dim, dim);
    b.wk = layout.add(prefix + ".wk", dim, dim);
    b.wv = layout.add(prefix + ".wv", dim, dim);
    b.wo = layout.add(prefix + ".wo", dim, dim);
    b.ln_g = layout.add(prefix + ".ln_gain", dim, 1);
    b.ln_b = layout.add(prefix + ".ln_bias", dim, 1);
    return b;
}

void AttentionBlock::init(Vec& params, Rng& rng) const {
    for (std::size_t off : {wq, wk, wv, wo})
        init_uniform(std::span(params).subspan(off, dim * dim), dim, dim, rng);
    std::fill_n(params.begin() + ln_g, dim, 1.0);
    std::fill_n(params.begin() + ln_b, dim, 0.0);
}

void AttentionBlock::forward(const Vec& params, const std::vector<Vec>& items, Tape* tape,
                             std::vector<Vec>& out) const {
    const std::size_t n = items.size();
    if (n == 0) throw std::invalid_argument("attention: empty input");
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    auto mat = [&](std::size_t off) { return std::span<const double>(params).subspan(off, dim * dim); };

    std::vector<Vec> q(n, Vec(dim)), k(n, Vec(dim)), v(n, Vec(dim)), ctx(n, Vec(dim));
    std::vector<Vec> attn(n, Vec(n));
    for (std::size_t i = 0; i < n; ++i) {
        affine_forward(mat(wq), {}, items[i], q[i]);
        affine_forward(mat(wk), {}, items[i], k[i]);
        affine_forward(mat(wv), {}, items[i], v[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += q[i][d] * k[j][d];
            attn[i][j] = s * scale;
        }
        softmax_inplace(attn[i]);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t d = 0; d < dim; ++d) ctx[i][d] += attn[i][j] * v[j][d];
    }
    out.assign(n, Vec(dim));
    std::vector<LayerNormTape> ln(n);
    const auto gain = std::span<const double>(params).subspan(ln_g, dim);
    const auto bias = std::span<const double>(params).subspan(ln_b, dim);
    Vec resid(dim);
    for (std::size_t i = 0; i < n; ++i) {
        affine_forward(mat(wo), {}, ctx[i], resid);
        for (std::size_t d = 0; d < dim; ++d) resid[d] += items[i][d];
        layer_norm_forward(resid, gain, bias, out[i], ln[i]);
    }
    if (tape) {
        tape->x = items;
        tape->q = std::move(q);
        tape->k = std::move(k);
        tape->v = std::move(v);
        tape->ctx = std::move(ctx);
        tape->attn = std::move(attn);
        tape->ln = std::move(ln);
    }
}

void AttentionBlock::backward(const Vec& params, const Tape& tape, const std::vector<Vec>& dout,
                              Vec& grad, std::vector<Vec>& dx) const {
    const std::size_t n = tape.x.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    auto mat = [&](std::size_t off) { return std::span<const double>(params).subspan(off, dim * dim); };
    auto gmat = [&](std::size_t off) { return std::span<double>(grad).subspan(off, dim * dim); };

    dx.assign(n, Vec(dim, 0.0));
    std::vector<Vec> dq(n, Vec(dim, 0.0)), dk(n, Vec(dim, 0.0)), dv(n, Vec(dim, 0.0));
    const auto gain = std::span<const double>(params).subspan(ln_g, dim);
    Vec dresid(dim), dctx(dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dresid.begin(), dresid.end(), 0.0);
        layer_norm_backward(gain, tape.ln[i], dout[i],
                            std::span<double>(grad).subspan(ln_g, dim),
                            std::span<double>(grad).subspan(ln_b, dim), dresid);
        for (std::size_t d = 0; d < dim; ++d) dx[i][d] += dresid[d];  // residual path
        std::fill(dctx.begin(), dctx.end(), 0.0);
        affine_backward(mat(wo), tape.ctx[i], dresid, gmat(wo), {}, dctx);

        // through the attention average: da_ij = dctx . v_j, dv_j += a_ij dctx
        Vec da(n);
        double dot_ad = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                acc += dctx[d] * tape.v[j][d];
                dv[j][d] += tape.attn[i][j] * dctx[d];
            }
            da[j] = acc;
            dot_ad += tape.attn[i][j] * acc;
        }
        // softmax jacobian, then split the score gradient into q and k parts
        for (std::size_t j = 0; j < n; ++j) {
            const double ds = tape.attn[i][j] * (da[j] - dot_ad) * scale;
            for (std::size_t d = 0; d < dim; ++d) {
                dq[i][d] += ds * tape.k[j][d];
                dk[j][d] += ds * tape.q[i][d];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        affine_backward(mat(wq), tape.x[i], dq[i], gmat(wq), {}, dx[i]);
        affine_backward(mat(wk), tape.x[i], dk[i], gmat(wk), {}, dx[i]);
        affine_backward(mat(wv), tape.x[i], dv[i], gmat(wv), {}, dx[i]);
    }
}

// ---- mlp ---------------------------------------------------------------------

MlpBlock MlpBlock::add_to(ParamLayout& layout, const std::string& prefix, std::size_t in,
                          std::size_t hidden, std::size_t out, double dropout) {
    MlpBlock b;
    b.in = in;
    b.hidden = hidden;
    b.out = out;
    b.dropout = dropout;
    b.w1 = layout.add(prefix + ".w1", hidden, in);
    b.b1 = layout.add(prefix + ".b1", hidden, 1);
    b.w2 = layout.add(prefix + ".w2", hidden, hidden);
    b.b2 = layout.add(prefix + ".b2", hidden, 1);
    b.w3 = layout.add(prefix + ".w3", out, hidden);
    b.b3 = layout.add(prefix + ".b3", out, 1);
    return b;
}

void MlpBlock::init(Vec& params, Rng& rng) const {
    init_uniform(std::span(params).subspan(w1, hidden * in), in, hidden, rng);
    init_uniform(std::span(params).subspan(w2, hidden * hidden), hidden, hidden, rng);
    init_uniform(std::span(params).subspan(w3, out * hidden), hidden, out, rng);
    std::fill_n(params.begin() + b1, hidden, 0.0);
    std::fill_n(params.begin() + b2, hidden, 0.0);
    std::fill_n(params.begin() + b3, out, 0.0);
}

void MlpBlock::forward(const Vec& params, std::span<const double> x, bool train, Rng* rng,
                       Tape* tape, std::span<double> y) const {
    auto piece = [&](std::size_t off, std::size_t n) {
        return std::span<const double>(params).subspan(off, n);
    };
    Vec a1(hidden), h1(hidden), a2(hidden), h2(hidden);
    DropoutTape d1, d2;
    affine_forward(piece(w1, hidden * in), piece(b1, hidden), x, a1);
    for (std::size_t i = 0; i < hidden; ++i) h1[i] = a1[i] > 0.0 ? a1[i] : 0.0;
    dropout_forward(h1, dropout, train, rng, d1);
    affine_forward(piece(w2, hidden * hidden), piece(b2, hidden), h1, a2);
    for (std::size_t i = 0; i < hidden; ++i) h2[i] = a2[i] > 0.0 ? a2[i] : 0.0;
    dropout_forward(h2, dropout, train, rng, d2);
    affine_forward(piece(w3, out * hidden), piece(b3, out), h2, y);
    if (tape) {
        tape->x.assign(x.begin(), x.end());
        tape->a1 = std::move(a1);
        tape->h1 = std::move(h1);
        tape->a2 = std::move(a2);
        tape->h2 = std::move(h2);
        tape->d1 = std::move(d1);
        tape->d2 = std::move(d2);
    }
}

void MlpBlock::backward(const Vec& params, const Tape& tape, std::span<const double> dy,
                        Vec& grad, std::span<double> dx) const {
    auto piece = [&](std::size_t off, std::size_t n) {
        return std::span<const double>(params).subspan(off, n);
    };
    auto gpiece = [&](std::size_t off, std::size_t n) {
        return std::span<double>(grad).subspan(off, n);
    };
    Vec dh2(hidden, 0.0), dh1(hidden, 0.0);
    affine_backward(piece(w3, out * hidden), tape.h2, dy, gpiece(w3, out * hidden),
                    gpiece(b3, out), dh2);
    dropout_backward(tape.d2, dh2);
    for (std::size_t i = 0; i < hidden; ++i)
        if (tape.a2[i] <= 0.0) dh2[i] = 0.0;
    affine_backward(piece(w2, hidden * hidden), tape.h1, dh2, gpiece(w2, hidden * hidden),
                    gpiece(b2, hidden), dh1);
    dropout_backward(tape.d1, dh1);
    for (std::size_t i = 0; i < hidden; ++i)
        if (tape.a1[i] <= 0.0) dh1[i] = 0.0;
    affine_backward(piece(w1, hidden * in), tape.x, dh1, gpiece(w1, hidden * in),
                    gpiece(b1, hidden), dx);
}

// ---- scorer --------------------------------------------------------------------

FeedForwardScorer::FeedForwardScorer(ScorerConfig cfg, Rng& init_rng) : cfg_(cfg) {
    const std::size_t in = cfg.input_dim, h = cfg.hidden;
    w1_ = layout_.add("w1", h, in);
    b1_ = layout_.add("b1", h, 1);
    w2_ = layout_.add("w2", h, h);
    b2_ = layout_.add("b2", h, 1);
    ln_g_ = layout_.add("ln_gain", h, 1);
    ln_b_ = layout_.add("ln_bias", h, 1);
    w3_ = layout_.add("w3", 1, h);
    b3_ = layout_.add("b3", 1, 1);
    params_.assign(layout_.total(), 0.0);
    init_uniform(std::span(params_).subspan(w1_, h * in), in, h, init_rng);
    init_uniform(std::span(params_).subspan(w2_, h * h), h, h, init_rng);
    init_uniform(std::span(params_).subspan(w3_, h), h, 1, init_rng);
    std::fill_n(params_.begin() + ln_g_, h, 1.0);
}

double FeedForwardScorer::forward(std::span<const double> x, bool train, Rng* rng,
                                  Tape& tape) const {
    const std::size_t in = cfg_.input_dim, h = cfg_.hidden;
    if (x.size() != in) throw std::invalid_argument("scorer: bad input size");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("scorer: non-finite input");

    auto piece = [&](std::size_t off, std::size_t n) {
        return std::span<const double>(params_).subspan(off, n);
    };
    tape.x.assign(x.begin(), x.end());
    tape.a1.resize(h);
    tape.h1.resize(h);
    tape.a2.resize(h);
    tape.h2.resize(h);
    tape.consumed = false;

    affine_forward(piece(w1_, h * in), piece(b1_, h), x, tape.a1);
    for (std::size_t i = 0; i < h; ++i) tape.h1[i] = std::tanh(tape.a1[i]);
    tape.n1 = tape.h1;
    if (cfg_.norm_after_first) {
        layer_norm_forward(tape.h1, piece(ln_g_, h), piece(ln_b_, h), tape.n1, tape.ln);
    }
    dropout_forward(tape.n1, cfg_.dropout, train, rng, tape.d1);

    affine_forward(piece(w2_, h * h), piece(b2_, h), tape.n1, tape.a2);
    for (std::size_t i = 0; i < h; ++i) tape.h2[i] = std::tanh(tape.a2[i]);
    tape.n2 = tape.h2;
    if (!cfg_.norm_after_first) {
        layer_norm_forward(tape.h2, piece(ln_g_, h), piece(ln_b_, h), tape.n2, tape.ln);
    }
    dropout_forward(tape.n2, cfg_.dropout, train, rng, tape.d2);

    double score = params_[b3_];
    const double* w3 = params_.data() + w3_;
    for (std::size_t i = 0; i < h; ++i) score += w3[i] * tape.n2[i];
    return score;
}

double FeedForwardScorer::forward(std::span<const double> x) const {
    Tape tape;
    return forward(x, /*train=*/false, nullptr, tape);
}

void FeedForwardScorer::backward(Tape& tape, double dscore, Vec& grad) const {
    if (tape.consumed) throw std::logic_error("scorer tape already consumed");
    tape.consumed = true;
    const std::size_t in = cfg_.input_dim, h = cfg_.hidden;
    auto piece = [&](std::size_t off, std::size_t n) {
        return std::span<const double>(params_).subspan(off, n);
    };
    auto gpiece = [&](std::size_t off, std::size_t n) {
        return std::span<double>(grad).subspan(off, n);
    };

    grad[b3_] += dscore;
    Vec dn2(h);
    const double* w3 = params_.data() + w3_;
    double* gw3 = grad.data() + w3_;
    for (std::size_t i = 0; i < h; ++i) {
        gw3[i] += dscore * tape.n2[i];
        dn2[i] = dscore * w3[i];
    }
    dropout_backward(tape.d2, dn2);

    Vec dh2(h, 0.0);
    if (!cfg_.norm_after_first) {
        layer_norm_backward(piece(ln_g_, h), tape.ln, dn2, gpiece(ln_g_, h), gpiece(ln_b_, h),
                            dh2);
    } else {
        dh2 = dn2;
    }
    for (std::size_t i = 0; i < h; ++i) dh2[i] *= 1.0 - tape.h2[i] * tape.h2[i];

    Vec dn1(h, 0.0);
    affine_backward(piece(w2_, h * h), tape.n1, dh2, gpiece(w2_, h * h), gpiece(b2_, h), dn1);
    dropout_backward(tape.d1, dn1);

    Vec dh1(h, 0.0);
    if (cfg_.norm_after_first) {
        layer_norm_backward(piece(ln_g_, h), tape.ln, dn1, gpiece(ln_g_, h), gpiece(ln_b_, h),
                            dh1);
    } else {
        dh1 = dn1;
    }
    for (std::size_t i = 0; i < h; ++i) dh1[i] *= 1.0 - tape.h1[i] * tape.h1[i];

    affine_backward(piece(w1_, h * in), tape.x, dh1, gpiece(w1_, h * in), gpiece(b1_, h), {});
}

double finite_diff_max_rel_err(Vec& params, const std::function<double()>& loss,
                               const Vec& analytic_grad, double eps, std::size_t stride) {
    double max_err = 0.0;
    for (std::size_t i = 0; i < params.size(); i += stride) {
        const double saved = params[i];
        params[i] = saved + eps;
        const double up = loss();
        params[i] = saved - eps;
        const double down = loss();
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic_grad[i];
        const double err = std::abs(a - numeric) / std::max(1e-6, std::abs(a) + std::abs(numeric));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace subsel
