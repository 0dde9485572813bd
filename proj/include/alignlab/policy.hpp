#pragma once

#include "alignlab/numerics.hpp"
#include "alignlab/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

namespace alignlab::policy {

// Feature layout for one decoding step: one-hot encodings of the last
// `context` prefix tokens (right-aligned, BOS-padded) followed by a
// token-count bag over the prompt. dim = (context + 1) * vocab_size.
struct FeatureSpec {
    int vocab_size = 0;
    int context = 4;
    int bos_id = 0;
    int eos_id = 1;

    int dim() const { return (context + 1) * vocab_size; }

    static FeatureSpec for_vocab(const Vocabulary& v, int context = 4) {
        FeatureSpec s;
        s.vocab_size = v.size();
        s.context = context;
        s.bos_id = v.bos;
        s.eos_id = v.eos;
        return s;
    }
};

template <typename Scalar>
struct Adapter {
    Matrix<Scalar> down;  // rank x dim
    Matrix<Scalar> up;    // vocab x rank
    int rank() const { return static_cast<int>(down.rows()); }
};

// Linear-softmax autoregressive policy: logits = W * features with
// W = base + up * down when a low-rank adapter is attached.
template <typename Scalar>
struct ParametersT {
    FeatureSpec features;
    Matrix<Scalar> base;  // vocab x dim
    std::optional<Adapter<Scalar>> adapter;
    bool frozen_base = false;

    int vocab_size() const { return features.vocab_size; }
    int dim() const { return features.dim(); }
    int rank() const { return adapter ? adapter->rank() : 0; }

    Matrix<Scalar> effective_weights() const {
        if (!adapter) return base;
        return base + adapter->up * adapter->down;
    }
};

using Parameters = ParametersT<double>;

// Gradient blocks, shaped like the parameters. The base block is always
// present and is identically zero when the base is frozen.
template <typename Scalar>
struct PolicyGradT {
    Matrix<Scalar> base;
    std::optional<Adapter<Scalar>> adapter;
};

using PolicyGrad = PolicyGradT<double>;

struct SampleConfig {
    double temperature = 1.0;
    int max_len = 32;
    uint64_t rng_seed = 0;
};

// Temperatures at or below this decode greedily (argmax, lowest id wins ties).
constexpr double kGreedyTemperature = 1e-6;

inline void validate(const SampleConfig& cfg) {
    if (!(cfg.temperature > 0.0) || cfg.temperature > 4.0)
        throw std::invalid_argument("SampleConfig: temperature must lie in (0, 4]");
    if (cfg.max_len < 1 || cfg.max_len > 64)
        throw std::invalid_argument("SampleConfig: max_len must lie in [1, 64]");
}

template <typename Scalar>
struct LogProb {
    Scalar total = 0;
    std::vector<Scalar> per_token;
};

namespace detail {

inline void check_tokens(const FeatureSpec& spec, const TokenSeq& toks) {
    for (int t : toks)
        if (t < 0 || t >= spec.vocab_size)
            throw std::out_of_range("policy: token id " + std::to_string(t) + " outside vocabulary of size " +
                                    std::to_string(spec.vocab_size));
}

template <typename Scalar>
Vector<Scalar> prompt_bag(const FeatureSpec& spec, const TokenSeq& prompt) {
    Vector<Scalar> bag = Vector<Scalar>::Zero(spec.vocab_size);
    for (int t : prompt) bag[t] += Scalar(1);
    return bag;
}

// Fills the feature vector for decoding step `t` (prefix = y[0..t)).
template <typename Scalar>
void fill_features(const FeatureSpec& spec, const Vector<Scalar>& bag, const TokenSeq& prefix, int t,
                   Vector<Scalar>& out) {
    out.setZero();
    const int v = spec.vocab_size;
    for (int j = 0; j < spec.context; ++j) {
        const int idx = t - spec.context + j;
        const int tok = idx >= 0 ? prefix[idx] : spec.bos_id;
        out[j * v + tok] = Scalar(1);
    }
    out.segment(spec.context * v, v) = bag;
}

}  // namespace detail

template <typename Scalar>
Vector<Scalar> featurize_step(const FeatureSpec& spec, const TokenSeq& prompt, const TokenSeq& prefix) {
    detail::check_tokens(spec, prompt);
    detail::check_tokens(spec, prefix);
    const Vector<Scalar> bag = detail::prompt_bag<Scalar>(spec, prompt);
    Vector<Scalar> out(spec.dim());
    detail::fill_features(spec, bag, prefix, static_cast<int>(prefix.size()), out);
    return out;
}

// Exact token-level log probabilities of response y given prompt x.
template <typename Scalar>
LogProb<Scalar> logprob(const ParametersT<Scalar>& params, const TokenSeq& x, const TokenSeq& y) {
    const FeatureSpec& spec = params.features;
    detail::check_tokens(spec, x);
    detail::check_tokens(spec, y);
    const Matrix<Scalar> w = params.effective_weights();
    const Vector<Scalar> bag = detail::prompt_bag<Scalar>(spec, x);

    LogProb<Scalar> result;
    result.per_token.reserve(y.size());
    Vector<Scalar> f(spec.dim());
    Vector<Scalar> logits(spec.vocab_size);
    for (size_t t = 0; t < y.size(); ++t) {
        detail::fill_features(spec, bag, y, static_cast<int>(t), f);
        logits.noalias() = w * f;
        const Scalar lp = logits[y[t]] - logsumexp(logits);
        result.per_token.push_back(lp);
        result.total += lp;
    }
    return result;
}

// Autoregressive draw from softmax(logits / T) until EOS or max_len.
template <typename Scalar>
TokenSeq sample(const ParametersT<Scalar>& params, const TokenSeq& x, const SampleConfig& cfg, Rng& rng) {
    validate(cfg);
    const FeatureSpec& spec = params.features;
    detail::check_tokens(spec, x);
    const Matrix<Scalar> w = params.effective_weights();
    const Vector<Scalar> bag = detail::prompt_bag<Scalar>(spec, x);
    const bool greedy = cfg.temperature <= kGreedyTemperature;

    TokenSeq y;
    Vector<Scalar> f(spec.dim());
    Vector<Scalar> logits(spec.vocab_size);
    while (static_cast<int>(y.size()) < cfg.max_len) {
        detail::fill_features(spec, bag, y, static_cast<int>(y.size()), f);
        logits.noalias() = w * f;
        int tok;
        if (greedy) {
            int best = 0;
            for (int v = 1; v < spec.vocab_size; ++v)
                if (logits[v] > logits[best]) best = v;
            tok = best;
        } else {
            Vector<Scalar> scaled = logits / Scalar(cfg.temperature);
            Vector<Scalar> probs = (scaled.array() - logsumexp(scaled)).exp();
            tok = rng.categorical(probs);
        }
        y.push_back(tok);
        if (tok == spec.eos_id) break;
    }
    return y;
}

template <typename Scalar>
TokenSeq sample(const ParametersT<Scalar>& params, const TokenSeq& x, const SampleConfig& cfg) {
    Rng rng(cfg.rng_seed);
    return sample(params, x, cfg, rng);
}

// Analytic gradient of logprob(params, x, y).total with respect to the
// trainable parameters. With an adapter, gradients flow through
// W = base + up * down; a frozen base receives an exactly zero block.
template <typename Scalar>
PolicyGradT<Scalar> grad_logprob(const ParametersT<Scalar>& params, const TokenSeq& x, const TokenSeq& y) {
    const FeatureSpec& spec = params.features;
    detail::check_tokens(spec, x);
    detail::check_tokens(spec, y);
    const Matrix<Scalar> w = params.effective_weights();
    const Vector<Scalar> bag = detail::prompt_bag<Scalar>(spec, x);

    Matrix<Scalar> dw = Matrix<Scalar>::Zero(spec.vocab_size, spec.dim());
    Vector<Scalar> f(spec.dim());
    Vector<Scalar> logits(spec.vocab_size);
    for (size_t t = 0; t < y.size(); ++t) {
        detail::fill_features(spec, bag, y, static_cast<int>(t), f);
        logits.noalias() = w * f;
        Vector<Scalar> probs = (logits.array() - logsumexp(logits)).exp();
        probs[y[t]] -= Scalar(1);
        dw.noalias() -= probs * f.transpose();  // (e_y - p) f^T
    }

    PolicyGradT<Scalar> g;
    g.base = params.frozen_base ? Matrix<Scalar>::Zero(spec.vocab_size, spec.dim()).eval() : dw;
    if (params.adapter) {
        Adapter<Scalar> ga;
        ga.down = params.adapter->up.transpose() * dw;
        ga.up = dw * params.adapter->down.transpose();
        g.adapter = std::move(ga);
    }
    return g;
}

// Folds the adapter into the base weights; log probabilities are unchanged.
template <typename Scalar>
ParametersT<Scalar> merge_adapter(const ParametersT<Scalar>& params) {
    if (!params.adapter) throw std::logic_error("merge_adapter: no adapter present");
    ParametersT<Scalar> merged;
    merged.features = params.features;
    merged.base = params.base + params.adapter->up * params.adapter->down;
    merged.frozen_base = false;
    return merged;
}

constexpr long long adapter_param_count(int rank, int vocab, int dim) {
    return static_cast<long long>(rank) * (vocab + dim);
}

template <typename Scalar>
ParametersT<Scalar> init_policy(const FeatureSpec& spec, Scalar scale, Rng& rng) {
    ParametersT<Scalar> p;
    p.features = spec;
    p.base.resize(spec.vocab_size, spec.dim());
    for (int i = 0; i < p.base.rows(); ++i)
        for (int j = 0; j < p.base.cols(); ++j) p.base(i, j) = scale * Scalar(rng.normal());
    return p;
}

// Attaches a rank-r adapter with Gaussian down-projection and zero
// up-projection, so the effective weights are initially unchanged.
template <typename Scalar>
ParametersT<Scalar> add_adapter(ParametersT<Scalar> params, int rank, Scalar scale, Rng& rng,
                                bool freeze_base = true) {
    if (rank < 1) throw std::invalid_argument("add_adapter: rank must be >= 1");
    if (adapter_param_count(rank, params.vocab_size(), params.dim()) >=
        static_cast<long long>(params.vocab_size()) * params.dim())
        throw std::invalid_argument("add_adapter: rank does not reduce the parameter count");
    Adapter<Scalar> a;
    a.down.resize(rank, params.dim());
    for (int i = 0; i < a.down.rows(); ++i)
        for (int j = 0; j < a.down.cols(); ++j) a.down(i, j) = scale * Scalar(rng.normal());
    a.up = Matrix<Scalar>::Zero(params.vocab_size(), rank);
    params.adapter = std::move(a);
    params.frozen_base = freeze_base;
    return params;
}

// --- gradient/parameter block algebra -------------------------------------

template <typename Scalar>
PolicyGradT<Scalar> zero_grad_like(const ParametersT<Scalar>& params) {
    PolicyGradT<Scalar> g;
    g.base = Matrix<Scalar>::Zero(params.vocab_size(), params.dim());
    if (params.adapter) {
        Adapter<Scalar> a;
        a.down = Matrix<Scalar>::Zero(params.rank(), params.dim());
        a.up = Matrix<Scalar>::Zero(params.vocab_size(), params.rank());
        g.adapter = std::move(a);
    }
    return g;
}

template <typename Scalar>
void axpy(Scalar alpha, const PolicyGradT<Scalar>& g, PolicyGradT<Scalar>& acc) {
    acc.base += alpha * g.base;
    if (acc.adapter.has_value() != g.adapter.has_value())
        throw std::invalid_argument("policy gradient blocks do not match");
    if (acc.adapter) {
        acc.adapter->down += alpha * g.adapter->down;
        acc.adapter->up += alpha * g.adapter->up;
    }
}

template <typename Scalar>
void scale(PolicyGradT<Scalar>& g, Scalar alpha) {
    g.base *= alpha;
    if (g.adapter) {
        g.adapter->down *= alpha;
        g.adapter->up *= alpha;
    }
}

// Trainable flattening order: base (unless frozen), then adapter down, then
// adapter up, each in Eigen's column-major storage order.
template <typename Scalar>
Vector<Scalar> flatten_trainable(const ParametersT<Scalar>& params) {
    std::vector<const Matrix<Scalar>*> blocks;
    if (!params.frozen_base) blocks.push_back(&params.base);
    if (params.adapter) {
        blocks.push_back(&params.adapter->down);
        blocks.push_back(&params.adapter->up);
    }
    Eigen::Index n = 0;
    for (auto* b : blocks) n += b->size();
    Vector<Scalar> out(n);
    Eigen::Index at = 0;
    for (auto* b : blocks) {
        out.segment(at, b->size()) = Eigen::Map<const Vector<Scalar>>(b->data(), b->size());
        at += b->size();
    }
    return out;
}

template <typename Scalar>
Vector<Scalar> flatten_grad(const ParametersT<Scalar>& params, const PolicyGradT<Scalar>& g) {
    std::vector<const Matrix<Scalar>*> blocks;
    if (!params.frozen_base) blocks.push_back(&g.base);
    if (params.adapter) {
        if (!g.adapter) throw std::invalid_argument("flatten_grad: gradient lacks adapter blocks");
        blocks.push_back(&g.adapter->down);
        blocks.push_back(&g.adapter->up);
    }
    Eigen::Index n = 0;
    for (auto* b : blocks) n += b->size();
    Vector<Scalar> out(n);
    Eigen::Index at = 0;
    for (auto* b : blocks) {
        out.segment(at, b->size()) = Eigen::Map<const Vector<Scalar>>(b->data(), b->size());
        at += b->size();
    }
    return out;
}

template <typename Scalar>
void assign_trainable(ParametersT<Scalar>& params, const Vector<Scalar>& flat) {
    std::vector<Matrix<Scalar>*> blocks;
    if (!params.frozen_base) blocks.push_back(&params.base);
    if (params.adapter) {
        blocks.push_back(&params.adapter->down);
        blocks.push_back(&params.adapter->up);
    }
    Eigen::Index n = 0;
    for (auto* b : blocks) n += b->size();
    if (flat.size() != n) throw std::invalid_argument("assign_trainable: size mismatch");
    Eigen::Index at = 0;
    for (auto* b : blocks) {
        Eigen::Map<Vector<Scalar>>(b->data(), b->size()) = flat.segment(at, b->size());
        at += b->size();
    }
}

// --- checkpointing ---------------------------------------------------------

// Binary little-endian layout, documented in the README:
//   "ALPC" | u32 version | u32 vocab | u32 dim | u32 context | u32 rank |
//   u8 frozen_base | u64 vocab_hash | f64 base[] | f64 down[] | f64 up[]
// Matrices are stored column-major. load(save(p)) == p bit for bit.
void save_checkpoint(const Parameters& params, const std::filesystem::path& path, uint64_t vocab_hash);
Parameters load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace alignlab::policy
