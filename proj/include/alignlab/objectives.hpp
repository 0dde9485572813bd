#pragma once

#include "alignlab/numerics.hpp"
#include "alignlab/policy.hpp"

#include <functional>
#include <string>
#include <vector>

namespace alignlab::objectives {

struct SftExample {
    TokenSeq prompt;
    TokenSeq response;
};

template <typename Scalar>
struct LossGrad {
    Scalar loss = 0;
    policy::PolicyGradT<Scalar> grad;
};

// Mean negative log-likelihood over the batch with its analytic gradient.
template <typename Scalar>
LossGrad<Scalar> sft_loss(const policy::ParametersT<Scalar>& params, const std::vector<SftExample>& batch) {
    if (batch.empty()) throw std::invalid_argument("sft_loss: empty batch");
    LossGrad<Scalar> out;
    out.grad = policy::zero_grad_like(params);
    const Scalar inv = Scalar(1) / Scalar(batch.size());
    for (const auto& ex : batch) {
        out.loss -= inv * policy::logprob(params, ex.prompt, ex.response).total;
        auto g = policy::grad_logprob(params, ex.prompt, ex.response);
        policy::axpy(-inv, g, out.grad);
    }
    return out;
}

template <typename Scalar>
struct DpoConfigT {
    Scalar beta = Scalar(0.1);             // preference sharpness
    policy::ParametersT<Scalar> reference;  // frozen; never updated
};

using DpoConfig = DpoConfigT<double>;

// Contrastive preference loss on the policy/reference log-ratios:
//   loss = -log sigma(beta * (delta_plus - delta_minus))
// evaluated as softplus(-beta * gap) for stability. Gradients flow only
// through the trained policy's log-probabilities.
template <typename Scalar>
LossGrad<Scalar> dpo_loss(const policy::ParametersT<Scalar>& params, const DpoConfigT<Scalar>& cfg,
                          const PreferencePair& pair) {
    if (pair.preferred == pair.rejected)
        throw std::invalid_argument("dpo_loss: preferred and rejected responses are identical");
    if (!(cfg.beta > Scalar(0))) throw std::invalid_argument("dpo_loss: beta must be positive");

    const Scalar lp_pos = policy::logprob(params, pair.prompt, pair.preferred).total;
    const Scalar lp_neg = policy::logprob(params, pair.prompt, pair.rejected).total;
    const Scalar ref_pos = policy::logprob(cfg.reference, pair.prompt, pair.preferred).total;
    const Scalar ref_neg = policy::logprob(cfg.reference, pair.prompt, pair.rejected).total;

    const Scalar delta_pos = lp_pos - ref_pos;
    const Scalar delta_neg = lp_neg - ref_neg;
    const Scalar z = cfg.beta * (delta_pos - delta_neg);

    LossGrad<Scalar> out;
    out.loss = Scalar(softplus(static_cast<double>(-z)));

    // d loss / d z = -sigma(-z); d z / d theta = beta * (grad_lp_pos - grad_lp_neg)
    const Scalar coeff = -Scalar(sigmoid(static_cast<double>(-z))) * cfg.beta;
    out.grad = policy::grad_logprob(params, pair.prompt, pair.preferred);
    policy::scale(out.grad, coeff);
    auto g_neg = policy::grad_logprob(params, pair.prompt, pair.rejected);
    policy::axpy(-coeff, g_neg, out.grad);
    return out;
}

// Whether gradient outputs follow the loss-minimization convention (the
// optimizer subtracts them) or the reward-ascent convention (caller adds).
enum class GradConvention { loss_descent, reward_ascent };

struct RlooConfig {
    int num_samples = 4;  // N >= 2; the leave-one-out baseline needs a peer
    policy::SampleConfig sample;
    GradConvention convention = GradConvention::loss_descent;
};

template <typename Scalar>
using RewardFn = std::function<Scalar(const TokenSeq& prompt, const TokenSeq& response)>;

template <typename Scalar>
struct RlooResult {
    policy::PolicyGradT<Scalar> grad;
    std::vector<Scalar> rewards;
    std::vector<Scalar> baselines;  // mean reward of the other N-1 samples
    std::vector<TokenSeq> samples;
};

// Estimator core on an explicit sample set. Advantages are accumulated as
// pairwise reward differences, so a constant shift applied exactly to every
// reward cancels term by term and the estimate is bit-identical; all-equal
// rewards produce an exactly zero gradient.
template <typename Scalar>
policy::PolicyGradT<Scalar> rloo_estimate_from_samples(const policy::ParametersT<Scalar>& params,
                                                       const TokenSeq& x,
                                                       const std::vector<TokenSeq>& samples,
                                                       const std::vector<Scalar>& rewards,
                                                       GradConvention convention) {
    const size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("rloo: need at least 2 samples");
    if (rewards.size() != n) throw std::invalid_argument("rloo: rewards/samples size mismatch");

    auto grad = policy::zero_grad_like(params);
    const Scalar denom = Scalar(1) / (Scalar(n) * Scalar(n - 1));
    for (size_t i = 0; i < n; ++i) {
        Scalar advantage_sum = 0;  // sum_{j != i} (r_i - r_j)
        for (size_t j = 0; j < n; ++j)
            if (j != i) advantage_sum += rewards[i] - rewards[j];
        if (advantage_sum == Scalar(0)) continue;
        auto g = policy::grad_logprob(params, x, samples[i]);
        policy::axpy(advantage_sum * denom, g, grad);
    }
    if (convention == GradConvention::loss_descent) policy::scale(grad, Scalar(-1));
    return grad;
}

// Draws N responses for the prompt, scores each, and returns the
// leave-one-out policy-gradient estimate with full diagnostics.
template <typename Scalar>
RlooResult<Scalar> rloo_gradient(const policy::ParametersT<Scalar>& params, const RewardFn<Scalar>& reward_fn,
                                 const TokenSeq& x, const RlooConfig& cfg, Rng& rng) {
    if (cfg.num_samples < 2) throw std::invalid_argument("rloo: num_samples must be >= 2");
    RlooResult<Scalar> out;
    out.samples.reserve(cfg.num_samples);
    out.rewards.reserve(cfg.num_samples);
    for (int i = 0; i < cfg.num_samples; ++i) {
        TokenSeq y = policy::sample(params, x, cfg.sample, rng);
        Scalar r;
        try {
            r = reward_fn(x, y);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("rloo: reward evaluation failed for sample ") +
                                     std::to_string(i) + ": " + e.what());
        }
        out.samples.push_back(std::move(y));
        out.rewards.push_back(r);
    }

    Scalar total = 0;
    for (Scalar r : out.rewards) total += r;
    out.baselines.reserve(cfg.num_samples);
    for (Scalar r : out.rewards) out.baselines.push_back((total - r) / Scalar(cfg.num_samples - 1));

    out.grad = rloo_estimate_from_samples(params, x, out.samples, out.rewards, cfg.convention);
    return out;
}

template <typename Scalar>
RlooResult<Scalar> rloo_gradient(const policy::ParametersT<Scalar>& params, const RewardFn<Scalar>& reward_fn,
                                 const TokenSeq& x, const RlooConfig& cfg) {
    Rng rng(cfg.sample.rng_seed);
    return rloo_gradient(params, reward_fn, x, cfg, rng);
}

// --- optimizer --------------------------------------------------------------

enum class OptKind { sgd, adam };

struct OptimizerConfig {
    OptKind kind = OptKind::sgd;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    OptimizerConfig config;
    Vecd first_moment;   // sized on first step
    Vecd second_moment;
    long long step = 0;
};

inline OptimizerState make_optimizer(const OptimizerConfig& cfg) { return OptimizerState{cfg, {}, {}, 0}; }

struct StepResult {
    OptimizerState state;
    Vecd params;
    bool stepped = true;
    std::string note;
};

// One deterministic update on flat parameters. SGD: theta' = theta - lr * g;
// Adam uses the standard bias-corrected moments. Gradients with non-finite
// entries skip the update and report it in `note`.
inline StepResult optimizer_step(const OptimizerState& state, const Vecd& params, const Vecd& grad) {
    if (params.size() != grad.size()) throw std::invalid_argument("optimizer_step: shape mismatch");
    if (state.first_moment.size() != 0 && state.first_moment.size() != params.size())
        throw std::invalid_argument("optimizer_step: moment shape mismatch");

    if (!grad.allFinite()) return StepResult{state, params, false, "non-finite gradient; step skipped"};

    StepResult out{state, params, true, {}};
    out.state.step += 1;
    const auto& cfg = state.config;
    if (cfg.kind == OptKind::sgd) {
        out.params = params - cfg.learning_rate * grad;
        return out;
    }
    Vecd m = state.first_moment.size() ? state.first_moment : Vecd::Zero(params.size()).eval();
    Vecd v = state.second_moment.size() ? state.second_moment : Vecd::Zero(params.size()).eval();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(out.state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(out.state.step));
    out.params = params.array() - cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
    out.state.first_moment = std::move(m);
    out.state.second_moment = std::move(v);
    return out;
}

}  // namespace alignlab::objectives
