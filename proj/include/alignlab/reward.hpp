#pragma once

#include "alignlab/numerics.hpp"
#include "alignlab/objectives.hpp"
#include "alignlab/vocab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace alignlab::reward {

enum class Kind { pointwise, siamese };

std::string_view kind_name(Kind k);

// Order-augmented bag-of-tokens encoder. Feature layout (dim = 4V + 5):
//   [0,V)    token counts of the prompt
//   [V,2V)   token counts of the response
//   [2V,3V)  one-hot first response token
//   [3V,4V)  one-hot last response token
//   [4V]     response length
//   [4V+1]   L1 digit-count mismatch between the prompt's NUMS section and
//            the response
//   [4V+2]   response parentheses balanced (1/0)
//   [4V+3]   response is one well-formed expression at the token level (1/0)
//   [4V+4]   constant bias 1
struct EncoderSpec {
    int vocab_size = 0;
    int bos = -1, eos = -1, sep = -1, space = -1, nums = -1, tgt = -1;
    int lparen = -1, rparen = -1;
    std::array<int, 10> digits{};
    std::array<int, 4> ops{};
    uint64_t vocab_hash = 0;

    static constexpr uint32_t kLayoutVersion = 1;

    int dim() const { return 4 * vocab_size + 5; }

    uint64_t hash() const {
        uint64_t h = splitmix64(vocab_hash ^ kLayoutVersion);
        return splitmix64(h ^ static_cast<uint64_t>(vocab_size));
    }

    static EncoderSpec for_vocab(const Vocabulary& v) {
        EncoderSpec s;
        s.vocab_size = v.size();
        s.bos = v.bos;
        s.eos = v.eos;
        s.sep = v.sep;
        s.space = v.space;
        s.nums = v.nums;
        s.tgt = v.tgt;
        s.lparen = v.id_of("(");
        s.rparen = v.id_of(")");
        for (int d = 0; d < 10; ++d) s.digits[d] = v.digit_id(d);
        s.ops = {v.id_of("+"), v.id_of("-"), v.id_of("*"), v.id_of("/")};
        s.vocab_hash = v.hash();
        return s;
    }
};

// Linear scorer over encoder features; pointwise and siamese parameters
// share the same score() contract, so either kind can drive RLOO rewards or
// best-of-N selection.
template <typename Scalar>
struct ParametersT {
    Kind kind = Kind::pointwise;
    EncoderSpec encoder;
    Vector<Scalar> weights;
};

using Parameters = ParametersT<double>;

namespace detail {

inline bool is_digit_id(const EncoderSpec& s, int t) {
    for (int d : s.digits)
        if (t == d) return true;
    return false;
}

inline bool is_op_id(const EncoderSpec& s, int t) {
    for (int o : s.ops)
        if (t == o) return true;
    return false;
}

// Token-level grammar check mirroring the expression grammar, treating
// SPACE as whitespace. Used purely as a syntax feature.
inline bool token_parse_ok(const EncoderSpec& s, const TokenSeq& y) {
    std::vector<int> toks;
    for (int t : y) {
        if (t == s.eos) break;
        if (t == s.space || t == s.bos) continue;
        toks.push_back(t);
    }
    size_t pos = 0;
    // factor := digit+ | '(' expr ')' ; term := factor ((*|/) factor)* ;
    // expr := term ((+|-) term)*
    std::function<bool()> expr, term, factor;
    factor = [&]() -> bool {
        if (pos >= toks.size()) return false;
        if (toks[pos] == s.lparen) {
            ++pos;
            if (!expr()) return false;
            if (pos >= toks.size() || toks[pos] != s.rparen) return false;
            ++pos;
            return true;
        }
        if (!is_digit_id(s, toks[pos])) return false;
        while (pos < toks.size() && is_digit_id(s, toks[pos])) ++pos;
        return true;
    };
    term = [&]() -> bool {
        if (!factor()) return false;
        while (pos < toks.size() && (toks[pos] == s.ops[2] || toks[pos] == s.ops[3])) {
            ++pos;
            if (!factor()) return false;
        }
        return true;
    };
    expr = [&]() -> bool {
        if (!term()) return false;
        while (pos < toks.size() && (toks[pos] == s.ops[0] || toks[pos] == s.ops[1])) {
            ++pos;
            if (!term()) return false;
        }
        return true;
    };
    return !toks.empty() && expr() && pos == toks.size();
}

inline void check_tokens(const EncoderSpec& s, const TokenSeq& toks) {
    for (int t : toks)
        if (t < 0 || t >= s.vocab_size)
            throw std::out_of_range("reward encoder: token id " + std::to_string(t) +
                                    " outside vocabulary of size " + std::to_string(s.vocab_size));
}

}  // namespace detail

template <typename Scalar>
Vector<Scalar> encode(const EncoderSpec& spec, const TokenSeq& x, const TokenSeq& y) {
    detail::check_tokens(spec, x);
    detail::check_tokens(spec, y);
    const int v = spec.vocab_size;
    Vector<Scalar> f = Vector<Scalar>::Zero(spec.dim());
    for (int t : x) f[t] += Scalar(1);
    for (int t : y) f[v + t] += Scalar(1);
    if (!y.empty()) {
        f[2 * v + y.front()] = Scalar(1);
        f[3 * v + y.back()] = Scalar(1);
    }
    f[4 * v] = Scalar(y.size());

    // Digit-count mismatch against the prompt's NUMS section (between the
    // NUMS and TGT markers; the whole prompt when no NUMS marker exists).
    std::array<int, 10> cx{}, cy{};
    bool in_nums = spec.nums < 0 || std::find(x.begin(), x.end(), spec.nums) == x.end();
    for (int t : x) {
        if (t == spec.nums) {
            in_nums = true;
            continue;
        }
        if (t == spec.tgt) in_nums = false;
        if (!in_nums) continue;
        for (int d = 0; d < 10; ++d)
            if (t == spec.digits[d]) ++cx[d];
    }
    for (int t : y)
        for (int d = 0; d < 10; ++d)
            if (t == spec.digits[d]) ++cy[d];
    int mismatch = 0;
    for (int d = 0; d < 10; ++d) mismatch += std::abs(cx[d] - cy[d]);
    f[4 * v + 1] = Scalar(mismatch);

    int depth = 0;
    bool balanced = true;
    for (int t : y) {
        if (t == spec.lparen) ++depth;
        if (t == spec.rparen && --depth < 0) balanced = false;
    }
    balanced = balanced && depth == 0;
    f[4 * v + 2] = Scalar(balanced ? 1 : 0);
    f[4 * v + 3] = Scalar(detail::token_parse_ok(spec, y) ? 1 : 0);
    f[4 * v + 4] = Scalar(1);
    return f;
}

template <typename Scalar>
Scalar score(const ParametersT<Scalar>& rp, const TokenSeq& x, const TokenSeq& y) {
    return rp.weights.dot(encode<Scalar>(rp.encoder, x, y));
}

template <typename Scalar>
struct LossGrad {
    Scalar loss = 0;
    Vector<Scalar> grad;
};

// Bradley-Terry pairwise loss: -log sigma(score(y+) - score(y-)), evaluated
// as softplus(-gap).
template <typename Scalar>
LossGrad<Scalar> bt_loss(const ParametersT<Scalar>& rp, const PreferencePair& pair) {
    if (pair.preferred == pair.rejected)
        throw std::invalid_argument("bt_loss: preferred and rejected responses are identical");
    const Vector<Scalar> f_pos = encode<Scalar>(rp.encoder, pair.prompt, pair.preferred);
    const Vector<Scalar> f_neg = encode<Scalar>(rp.encoder, pair.prompt, pair.rejected);
    const Scalar gap = rp.weights.dot(f_pos - f_neg);
    LossGrad<Scalar> out;
    out.loss = Scalar(softplus(static_cast<double>(-gap)));
    out.grad = -Scalar(sigmoid(static_cast<double>(-gap))) * (f_pos - f_neg);
    return out;
}

struct PointwiseExample {
    TokenSeq prompt;
    TokenSeq response;
    double gold = 0.0;
};

// Squared-error regression of the scalar score onto a gold value.
template <typename Scalar>
LossGrad<Scalar> pointwise_loss(const ParametersT<Scalar>& rp, const PointwiseExample& example) {
    if (!std::isfinite(example.gold)) throw std::invalid_argument("pointwise_loss: gold must be finite");
    const Vector<Scalar> f = encode<Scalar>(rp.encoder, example.prompt, example.response);
    const Scalar err = rp.weights.dot(f) - Scalar(example.gold);
    LossGrad<Scalar> out;
    out.loss = err * err;
    out.grad = Scalar(2) * err * f;
    return out;
}

struct RewardDataset {
    std::vector<PreferencePair> pairs;
    std::vector<PointwiseExample> pointwise;
};

struct TrainConfig {
    objectives::OptimizerConfig opt;
    int epochs = 20;
    int batch_size = 0;  // 0 = full batch
    double holdout_fraction = 0.2;
    bool shuffle = true;
    uint64_t seed = 0;
};

struct TrainReport {
    double train_loss = 0;
    double holdout_loss = 0;
    double train_accuracy = 0;    // pair ranking accuracy (siamese) or
    double holdout_accuracy = 0;  // 0.5-thresholded accuracy (pointwise)
    int train_count = 0;
    int holdout_count = 0;
};

std::pair<Parameters, TrainReport> train_reward(const RewardDataset& dataset, Kind kind,
                                                const EncoderSpec& spec, const TrainConfig& cfg);

// Binary checkpoint: "ALRC" | u32 version | u8 kind | u64 feature spec hash |
// u64 vocab hash | u32 dim | f64 weights[]. Bit-exact round trip.
void save_checkpoint(const Parameters& rp, const std::filesystem::path& path);
Parameters load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace alignlab::reward
