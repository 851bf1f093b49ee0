#pragma once

// Proximal policy optimization, built from scratch: a diagonal-Gaussian
// actor-critic over the 7-feature microgrid observation, generalized
// advantage estimation, the clipped surrogate objective, and the training
// and evaluation loops. Gradients are computed by analytic backpropagation
// through the tanh networks; no autodiff framework is involved.
//
// Determinism: every random draw flows from one root seed through named
// streams (one per rollout environment plus one for minibatch shuffling),
// and rollout results are merged in environment index order, so training is
// reproducible for a fixed seed regardless of the worker thread count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mgrid/environment.hpp"
#include "mgrid/nn.hpp"
#include "mgrid/rng.hpp"

namespace mgrid {

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_eps = 0.2;
    double learning_rate = 3e-4;
    int epochs_per_update = 10;
    int minibatch_size = 64;
    int rollout_length = 2048;
    long total_steps = 300000;
    double entropy_coef = 0.001;
    double value_coef = 0.5;
    double max_grad_norm = 0.5;
    int hidden_width = 64;
    int num_envs = 8;
    int window_steps = 168;  // training episodes are windows of this many steps
    double log_std_init = -0.5;
    int checkpoint_every = 50;  // iterations between checkpoint callbacks
    int workers = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("train: gamma must be in [0, 1]");
        if (gae_lambda < 0.0 || gae_lambda > 1.0) throw std::invalid_argument("train: gae_lambda must be in [0, 1]");
        if (clip_eps <= 0.0) throw std::invalid_argument("train: clip_eps must be > 0");
        if (learning_rate < 0.0) throw std::invalid_argument("train: learning_rate must be >= 0");
        if (epochs_per_update < 1 || minibatch_size < 1 || rollout_length < 1 || total_steps < 1)
            throw std::invalid_argument("train: sizes must be positive");
        if (minibatch_size > rollout_length) throw std::invalid_argument("train: minibatch_size exceeds rollout_length");
        if (hidden_width < 1 || num_envs < 1 || window_steps < 1) throw std::invalid_argument("train: sizes must be positive");
        if (rollout_length % num_envs != 0)
            throw std::invalid_argument("train: rollout_length must be divisible by num_envs");
        if (entropy_coef < 0.0 || value_coef < 0.0) throw std::invalid_argument("train: loss coefficients must be >= 0");
        if (workers < 1) throw std::invalid_argument("train: workers must be >= 1");
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"gamma", c.gamma},
                       {"gae_lambda", c.gae_lambda},
                       {"clip_eps", c.clip_eps},
                       {"learning_rate", c.learning_rate},
                       {"epochs_per_update", c.epochs_per_update},
                       {"minibatch_size", c.minibatch_size},
                       {"rollout_length", c.rollout_length},
                       {"total_steps", c.total_steps},
                       {"entropy_coef", c.entropy_coef},
                       {"value_coef", c.value_coef},
                       {"max_grad_norm", c.max_grad_norm},
                       {"hidden_width", c.hidden_width},
                       {"num_envs", c.num_envs},
                       {"window_steps", c.window_steps},
                       {"log_std_init", c.log_std_init},
                       {"checkpoint_every", c.checkpoint_every},
                       {"workers", c.workers},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    j.at("gamma").get_to(c.gamma);
    j.at("gae_lambda").get_to(c.gae_lambda);
    j.at("clip_eps").get_to(c.clip_eps);
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("epochs_per_update").get_to(c.epochs_per_update);
    j.at("minibatch_size").get_to(c.minibatch_size);
    j.at("rollout_length").get_to(c.rollout_length);
    j.at("total_steps").get_to(c.total_steps);
    j.at("entropy_coef").get_to(c.entropy_coef);
    j.at("value_coef").get_to(c.value_coef);
    j.at("max_grad_norm").get_to(c.max_grad_norm);
    j.at("hidden_width").get_to(c.hidden_width);
    j.at("num_envs").get_to(c.num_envs);
    j.at("window_steps").get_to(c.window_steps);
    j.at("log_std_init").get_to(c.log_std_init);
    j.at("checkpoint_every").get_to(c.checkpoint_every);
    j.at("workers").get_to(c.workers);
    j.at("seed").get_to(c.seed);
}

inline constexpr int kObsDim = 7;
inline constexpr int kActionDim = 2;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Actor-critic with a state-independent log standard deviation per action
// dimension. Action scaling limits and the observation normalizer are part
// of the policy so a checkpoint is self-contained.
struct PolicyNet {
    Mlp actor;
    Mlp critic;
    std::array<double, kActionDim> log_std{};
    RunningStat obs_norm{kObsDim};
    double p_load_scale = 1.0;
    double bat_max_kw = 0.0;
    double dg_max_kw = 0.0;

    static PolicyNet make(int hidden_width, double log_std_init, Rng& rng) {
        PolicyNet net;
        net.actor = Mlp::make({kObsDim, hidden_width, hidden_width, kActionDim}, rng, 0.0);
        net.critic = Mlp::make({kObsDim, hidden_width, hidden_width, 1}, rng, 0.0);
        net.log_std.fill(log_std_init);
        return net;
    }
};

inline std::array<double, kObsDim> obs_encode(const MgState& s, double p_load_scale) {
    const double scale = std::max(1e-9, p_load_scale);
    return {s.soc,
            std::sin(2.0 * M_PI * s.hour / 24.0),
            std::cos(2.0 * M_PI * s.hour / 24.0),
            s.p_pv_avail_kw / scale,
            s.p_w_avail_kw / scale,
            s.p_load_kw / scale,
            s.grid_up ? 1.0 : 0.0};
}

// Affine map from the unsquashed policy output to physical setpoints, with
// clipping to the device ranges. Zero network output means "do nothing".
inline MgAction scale_action(std::span<const double> u, double bat_max_kw, double dg_max_kw) {
    MgAction a;
    a.p_bat_kw = std::clamp(u[0], -1.0, 1.0) * bat_max_kw;
    a.p_dg_kw = std::clamp(u[1], 0.0, 1.0) * dg_max_kw;
    return a;
}

inline double gaussian_log_prob(std::span<const double> u, std::span<const double> mean,
                                std::span<const double> log_std) {
    double lp = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        const double sigma = std::exp(log_std[d]);
        const double z = (u[d] - mean[d]) / sigma;
        lp += -0.5 * z * z - log_std[d] - 0.5 * std::log(2.0 * M_PI);
    }
    return lp;
}

struct ActionSample {
    MgAction action;
    std::array<double, kActionDim> u{};  // unsquashed draw; log_prob is taken here
    double log_prob = 0.0;
};

inline ActionSample policy_sample(const PolicyNet& net, std::span<const double> obs_normalized, Rng& rng) {
    const auto mean = net.actor.forward(obs_normalized);
    std::array<double, kActionDim> u{};
    for (int d = 0; d < kActionDim; ++d) {
        if (!std::isfinite(mean[d])) throw TrainingDivergence("policy_sample: non-finite action mean");
        u[d] = mean[d] + std::exp(net.log_std[d]) * rng.normal();
    }
    ActionSample s;
    s.u = u;
    s.log_prob = gaussian_log_prob(u, mean, net.log_std);
    s.action = scale_action(u, net.bat_max_kw, net.dg_max_kw);
    return s;
}

inline MgAction policy_greedy(const PolicyNet& net, std::span<const double> obs_normalized) {
    const auto mean = net.actor.forward(obs_normalized);
    for (const double m : mean)
        if (!std::isfinite(m)) throw TrainingDivergence("policy_greedy: non-finite action mean");
    return scale_action(mean, net.bat_max_kw, net.dg_max_kw);
}

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// delta_t = r_t + gamma * V_{t+1} - V_t, accumulated with weight (gamma *
// lambda); `dones` (optional) cuts the recursion at terminal steps, and
// `bootstrap_value` stands in for V at a non-terminal rollout cut.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             double bootstrap_value, double gamma, double lambda,
                             std::span<const std::uint8_t> dones = {}) {
    if (rewards.size() != values.size()) throw std::invalid_argument("gae: rewards/values length mismatch");
    if (!dones.empty() && dones.size() != rewards.size())
        throw std::invalid_argument("gae: dones length mismatch");
    const std::size_t n = rewards.size();
    GaeResult out;
    out.advantages.resize(n);
    out.returns.resize(n);
    double acc = 0.0;
    double next_value = bootstrap_value;
    for (std::size_t t = n; t-- > 0;) {
        const double nonterminal = dones.empty() ? 1.0 : (dones[t] ? 0.0 : 1.0);
        const double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        acc = delta + gamma * lambda * nonterminal * acc;
        out.advantages[t] = acc;
        out.returns[t] = acc + values[t];
        next_value = values[t];
    }
    return out;
}

// exp(lp_new - lp_old) with the exponent clamped to +-20 against overflow.
inline double prob_ratio(double log_prob_new, double log_prob_old) {
    return std::exp(std::clamp(log_prob_new - log_prob_old, -20.0, 20.0));
}

// min(r*A, clip(r, 1-eps, 1+eps)*A): the pessimistic surrogate term.
inline double clipped_objective(double ratio, double advantage, double clip_eps) {
    const double unclipped = ratio * advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    return std::min(unclipped, clipped);
}

struct RolloutBatch {
    std::vector<std::array<double, kObsDim>> obs;  // normalized
    std::vector<std::array<double, kActionDim>> u;
    std::vector<double> log_prob_old;
    std::vector<double> advantages;  // raw; normalized inside the update
    std::vector<double> returns;
    std::size_t size() const { return obs.size(); }
};

struct LossStats {
    double total = 0.0;
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
    double approx_kl = 0.0;
    double clip_frac = 0.0;
};

struct GradBuffers {
    std::vector<double> actor;
    std::vector<double> critic;
    std::array<double, kActionDim> log_std{};

    explicit GradBuffers(const PolicyNet& net)
        : actor(net.actor.params().size(), 0.0), critic(net.critic.params().size(), 0.0) {}

    void zero() {
        std::fill(actor.begin(), actor.end(), 0.0);
        std::fill(critic.begin(), critic.end(), 0.0);
        log_std.fill(0.0);
    }
};

// Full PPO loss over the given sample indices, with optional analytic
// gradients. Advantages are taken as supplied (already normalized by the
// caller). Shared by the optimizer and by the finite-difference checks.
inline LossStats ppo_loss(const PolicyNet& net, const RolloutBatch& batch, std::span<const int> idx,
                          std::span<const double> advantages, const TrainConfig& cfg, GradBuffers* grads) {
    const double n = static_cast<double>(idx.size());
    LossStats st;
    Mlp::Cache actor_cache, critic_cache;
    for (const int i : idx) {
        const auto& obs = batch.obs[i];
        const auto mean = net.actor.forward(obs, grads ? &actor_cache : nullptr);
        const auto v = net.critic.forward(obs, grads ? &critic_cache : nullptr);
        const double lp = gaussian_log_prob(batch.u[i], mean, net.log_std);
        const double adv = advantages[i];

        const double diff = lp - batch.log_prob_old[i];
        const bool exp_clamped = diff < -20.0 || diff > 20.0;
        const double ratio = prob_ratio(lp, batch.log_prob_old[i]);
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
        const double surr = std::min(unclipped, clipped);
        const double verr = v[0] - batch.returns[i];

        st.policy += -surr / n;
        st.value += verr * verr / n;
        st.approx_kl += (batch.log_prob_old[i] - lp) / n;
        if (std::fabs(ratio - 1.0) > cfg.clip_eps) st.clip_frac += 1.0 / n;

        if (grads) {
            // d(-surr)/d(ratio): active only when the unclipped branch is the minimum
            const double dsurr_dratio = unclipped <= clipped ? adv : 0.0;
            const double dloss_dlp = exp_clamped ? 0.0 : -dsurr_dratio * ratio / n;
            std::array<double, kActionDim> dmean{};
            for (int d = 0; d < kActionDim; ++d) {
                const double sigma = std::exp(net.log_std[d]);
                const double z = (batch.u[i][d] - mean[d]) / sigma;
                dmean[d] = dloss_dlp * (z / sigma);
                grads->log_std[d] += dloss_dlp * (z * z - 1.0);
            }
            net.actor.backward(actor_cache, dmean, grads->actor);
            const std::array<double, 1> dv{cfg.value_coef * 2.0 * verr / n};
            net.critic.backward(critic_cache, dv, grads->critic);
        }
    }
    for (int d = 0; d < kActionDim; ++d) st.entropy += net.log_std[d] + 0.5 * std::log(2.0 * M_PI * M_E);
    if (grads)
        for (int d = 0; d < kActionDim; ++d) grads->log_std[d] -= cfg.entropy_coef;
    st.total = st.policy + cfg.value_coef * st.value - cfg.entropy_coef * st.entropy;
    return st;
}

struct PpoOptimizer {
    Adam actor;
    Adam critic;
    Adam log_std;

    explicit PpoOptimizer(const PolicyNet& net)
        : actor(net.actor.params().size()), critic(net.critic.params().size()), log_std(kActionDim) {}
};

namespace detail {
inline void clip_global_norm(GradBuffers& g, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const double x : g.actor) sq += x * x;
    for (const double x : g.critic) sq += x * x;
    for (const double x : g.log_std) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (double& x : g.actor) x *= scale;
    for (double& x : g.critic) x *= scale;
    for (double& x : g.log_std) x *= scale;
}
}  // namespace detail

// One PPO update: epochs of shuffled minibatch Adam steps against the frozen
// behaviour log-probs stored in the batch. Advantages are normalized to zero
// mean and unit variance across the whole batch first.
inline LossStats update(PolicyNet& net, const RolloutBatch& batch, const TrainConfig& cfg, PpoOptimizer& opt,
                        Rng& shuffle_rng) {
    if (batch.size() < static_cast<std::size_t>(cfg.minibatch_size))
        throw std::invalid_argument("update: batch smaller than minibatch_size");

    std::vector<double> advantages = batch.advantages;
    double mean = 0.0, sq = 0.0;
    for (const double a : advantages) mean += a;
    mean /= advantages.size();
    for (const double a : advantages) sq += (a - mean) * (a - mean);
    const double std_dev = std::sqrt(sq / advantages.size());
    for (double& a : advantages) a = (a - mean) / (std_dev + 1e-8);

    std::vector<int> order(batch.size());
    std::iota(order.begin(), order.end(), 0);

    GradBuffers grads(net);
    LossStats avg;
    int n_minibatches = 0;

    for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.minibatch_size);
            const std::span<const int> idx(order.data() + start, end - start);
            grads.zero();
            const LossStats st = ppo_loss(net, batch, idx, advantages, cfg, &grads);
            if (!std::isfinite(st.total))
                throw TrainingDivergence("update: non-finite loss (policy=" + std::to_string(st.policy) +
                                         ", value=" + std::to_string(st.value) + ")");
            detail::clip_global_norm(grads, cfg.max_grad_norm);

            opt.actor.step(net.actor.params(), grads.actor, cfg.learning_rate);
            opt.critic.step(net.critic.params(), grads.critic, cfg.learning_rate);
            std::vector<double> ls(net.log_std.begin(), net.log_std.end());
            std::vector<double> lg(grads.log_std.begin(), grads.log_std.end());
            opt.log_std.step(ls, lg, cfg.learning_rate);
            for (int d = 0; d < kActionDim; ++d) net.log_std[d] = std::clamp(ls[d], kLogStdMin, kLogStdMax);

            avg.total += st.total;
            avg.policy += st.policy;
            avg.value += st.value;
            avg.entropy += st.entropy;
            avg.approx_kl += st.approx_kl;
            avg.clip_frac += st.clip_frac;
            ++n_minibatches;
        }
    }
    avg.total /= n_minibatches;
    avg.policy /= n_minibatches;
    avg.value /= n_minibatches;
    avg.entropy /= n_minibatches;
    avg.approx_kl /= n_minibatches;
    avg.clip_frac /= n_minibatches;
    return avg;
}

struct TrainLogRow {
    int iter = 0;
    long steps = 0;
    double mean_episode_reward = 0.0;  // raw rewards over completed windows
    int episodes_completed = 0;
    LossStats loss;
};

struct TrainState {
    PolicyNet net;
    TrainConfig cfg;
    long steps_done = 0;
    int iter = 0;
    RunningStat return_stat{1};  // discounted-return scale for reward normalization
    std::string trainer_rng_state;
    std::vector<std::string> env_rng_states;
};

using CheckpointSink = std::function<void(const TrainState&, bool final)>;

namespace detail {

// One rollout environment: draws window offsets and outage seeds from its own
// stream, so collection order across environments never matters.
struct EnvRunner {
    Rng rng{0};
    std::unique_ptr<Environment> env;
    MgState state;
    double ep_return_raw = 0.0;
    double disc_return = 0.0;

    // per-rollout storage
    std::vector<std::array<double, kObsDim>> obs;
    std::vector<std::array<double, kActionDim>> u;
    std::vector<double> log_prob, value, reward, raw_disc_returns;
    std::vector<std::uint8_t> done;
    std::vector<double> completed_returns;
    double bootstrap = 0.0;

    void clear_storage() {
        obs.clear();
        u.clear();
        log_prob.clear();
        value.clear();
        reward.clear();
        raw_disc_returns.clear();
        done.clear();
        completed_returns.clear();
    }
};

inline EnvConfig window_config(const EnvConfig& base, std::size_t offset, std::size_t horizon, std::uint64_t seed) {
    EnvConfig cfg = base;
    cfg.scenario_offset = offset;
    cfg.horizon = horizon;
    cfg.seed = seed;
    return cfg;
}

inline void start_window(EnvRunner& r, const EnvConfig& base, int window_steps) {
    const std::size_t len = base.scenario->size();
    const std::size_t window = std::min<std::size_t>(window_steps, len);
    const std::size_t max_offset = len - window;
    const std::size_t offset = max_offset == 0 ? 0 : static_cast<std::size_t>(r.rng.integer(max_offset + 1));
    const std::uint64_t seed = r.rng.engine()();
    r.env = std::make_unique<Environment>(window_config(base, offset, window, seed));
    r.state = r.env->reset();
    r.ep_return_raw = 0.0;
    r.disc_return = 0.0;
}

inline void collect_one(EnvRunner& r, const PolicyNet& net, const EnvConfig& base, const TrainConfig& cfg,
                        int steps, double reward_scale) {
    for (int i = 0; i < steps; ++i) {
        const auto raw = obs_encode(r.state, net.p_load_scale);
        std::array<double, kObsDim> normed{};
        net.obs_norm.normalize(raw, normed);
        const auto sample = policy_sample(net, normed, r.rng);
        const auto v = net.critic.forward(normed);
        auto [next, rec] = r.env->step(sample.action);

        r.ep_return_raw += rec.reward;
        r.disc_return = cfg.gamma * r.disc_return + rec.reward;
        r.raw_disc_returns.push_back(r.disc_return);

        r.obs.push_back(normed);
        r.u.push_back(sample.u);
        r.log_prob.push_back(sample.log_prob);
        r.value.push_back(v[0]);
        r.reward.push_back(rec.reward * reward_scale);
        const bool terminal = r.env->done();
        r.done.push_back(terminal ? 1 : 0);

        if (terminal) {
            r.completed_returns.push_back(r.ep_return_raw);
            start_window(r, base, cfg.window_steps);
        } else {
            r.state = next;
        }
    }
    if (r.done.back()) {
        r.bootstrap = 0.0;
    } else {
        const auto raw = obs_encode(r.state, net.p_load_scale);
        std::array<double, kObsDim> normed{};
        net.obs_norm.normalize(raw, normed);
        r.bootstrap = net.critic.forward(normed)[0];
    }
}

}  // namespace detail

// Runs the training loop from the given state (fresh or restored from a
// checkpoint) until cfg.total_steps environment steps have been consumed.
inline std::vector<TrainLogRow> train_loop(TrainState& state, const EnvConfig& env_cfg, const CheckpointSink& sink) {
    state.cfg.validate();
    env_cfg.validate();
    const TrainConfig& cfg = state.cfg;

    Rng trainer_rng = Rng::derive(cfg.seed, 0x7261696e);
    if (!state.trainer_rng_state.empty()) trainer_rng.deserialize(state.trainer_rng_state);

    std::vector<detail::EnvRunner> runners(cfg.num_envs);
    for (int e = 0; e < cfg.num_envs; ++e) {
        runners[e].rng = Rng::derive(cfg.seed, 0x656e7600 + e);
        if (!state.env_rng_states.empty()) runners[e].rng.deserialize(state.env_rng_states[e]);
        detail::start_window(runners[e], env_cfg, cfg.window_steps);
    }

    PpoOptimizer opt(state.net);
    const int steps_per_env = cfg.rollout_length / cfg.num_envs;
    std::vector<TrainLogRow> log;

    while (state.steps_done < cfg.total_steps) {
        const double ret_var = state.return_stat.count() > 1.0 ? state.return_stat.variance(0) : 1.0;
        const double reward_scale = 1.0 / std::sqrt(ret_var + 1e-8);

        // ---- collection (optionally fanned out over worker threads) ----
        auto run_chunk = [&](int begin, int end) {
            for (int e = begin; e < end; ++e) {
                runners[e].clear_storage();
                detail::collect_one(runners[e], state.net, env_cfg, cfg, steps_per_env, reward_scale);
            }
        };
        const int workers = std::min(cfg.workers, cfg.num_envs);
        if (workers <= 1) {
            run_chunk(0, cfg.num_envs);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(workers);
            const int per = (cfg.num_envs + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        run_chunk(w * per, std::min(cfg.num_envs, (w + 1) * per));
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& err : errors)
                if (err) std::rethrow_exception(err);
        }

        // ---- deterministic merges in environment index order ----
        RolloutBatch batch;
        batch.obs.reserve(cfg.rollout_length);
        double ep_reward_sum = 0.0;
        int ep_count = 0;
        for (auto& r : runners) {
            const auto gae = compute_gae(r.reward, r.value, r.bootstrap, cfg.gamma, cfg.gae_lambda, r.done);
            batch.obs.insert(batch.obs.end(), r.obs.begin(), r.obs.end());
            batch.u.insert(batch.u.end(), r.u.begin(), r.u.end());
            batch.log_prob_old.insert(batch.log_prob_old.end(), r.log_prob.begin(), r.log_prob.end());
            batch.advantages.insert(batch.advantages.end(), gae.advantages.begin(), gae.advantages.end());
            batch.returns.insert(batch.returns.end(), gae.returns.begin(), gae.returns.end());
            for (const double g : r.raw_disc_returns) state.return_stat.update(std::span(&g, 1));
            for (const double er : r.completed_returns) {
                ep_reward_sum += er;
                ++ep_count;
            }
        }

        const LossStats loss = update(state.net, batch, cfg, opt, trainer_rng);

        state.steps_done += cfg.rollout_length;
        state.iter += 1;

        TrainLogRow row;
        row.iter = state.iter;
        row.steps = state.steps_done;
        row.episodes_completed = ep_count;
        row.mean_episode_reward = ep_count > 0 ? ep_reward_sum / ep_count : std::numeric_limits<double>::quiet_NaN();
        row.loss = loss;
        log.push_back(row);

        if (sink && (state.iter % cfg.checkpoint_every == 0 || state.steps_done >= cfg.total_steps)) {
            state.trainer_rng_state = trainer_rng.serialize();
            state.env_rng_states.clear();
            for (auto& r : runners) state.env_rng_states.push_back(r.rng.serialize());
            sink(state, state.steps_done >= cfg.total_steps);
        }
    }
    state.trainer_rng_state = trainer_rng.serialize();
    state.env_rng_states.clear();
    for (auto& r : runners) state.env_rng_states.push_back(r.rng.serialize());
    return log;
}

// Fresh training run: builds the policy, sizes the action scaling from the
// fleet, pre-seeds the observation normalizer, then runs the loop.
inline std::pair<TrainState, std::vector<TrainLogRow>> train(const EnvConfig& env_cfg, const TrainConfig& cfg,
                                                             const CheckpointSink& sink = nullptr) {
    cfg.validate();
    env_cfg.validate();

    TrainState state;
    state.cfg = cfg;
    Rng init_rng = Rng::derive(cfg.seed, 0x696e6974);
    state.net = PolicyNet::make(cfg.hidden_width, cfg.log_std_init, init_rng);
    state.net.bat_max_kw = env_cfg.fleet.battery.p_max_kw;
    state.net.dg_max_kw = env_cfg.fleet.diesel.max_kw;

    double max_load = 0.0;
    for (const double l : env_cfg.scenario->load_kw) max_load = std::max(max_load, l);
    state.net.p_load_scale = std::max(1.0, max_load);

    // The observation normalizer is populated once from a sweep over every
    // scenario row crossed with both grid states and the SOC window, then
    // kept frozen. The encoding is already O(1) per feature, so fixed
    // statistics are sufficient and keep stored log-probs exactly consistent
    // across updates.
    const auto& b = env_cfg.fleet.battery;
    for (std::size_t row = 0; row < env_cfg.scenario->size(); ++row) {
        MgState s;
        s.hour = static_cast<int>(row % 24);
        s.p_pv_avail_kw = pv_power(env_cfg.fleet.pv, env_cfg.scenario->irradiance[row]);
        s.p_w_avail_kw = wind_power(env_cfg.fleet.wind, env_cfg.scenario->wind_ms[row]);
        s.p_load_kw = env_cfg.scenario->load_kw[row];
        for (const double soc : {b.soc_min, 0.5 * (b.soc_min + b.soc_max), b.soc_max}) {
            for (const bool up : {false, true}) {
                s.soc = soc;
                s.grid_up = up;
                state.net.obs_norm.update(obs_encode(s, state.net.p_load_scale));
            }
        }
    }

    auto log = train_loop(state, env_cfg, sink);
    return {std::move(state), std::move(log)};
}

// Greedy rollout of the trained policy over the configured horizon; the
// observation normalizer is frozen.
inline std::vector<StepRecord> evaluate(const PolicyNet& net, const EnvConfig& env_cfg) {
    env_cfg.validate();
    Environment env(env_cfg);
    MgState s = env.reset();
    std::vector<StepRecord> records;
    records.reserve(env_cfg.horizon);
    while (!env.done()) {
        const auto raw = obs_encode(s, net.p_load_scale);
        std::array<double, kObsDim> normed{};
        net.obs_norm.normalize(raw, normed);
        auto [next, rec] = env.step(policy_greedy(net, normed));
        records.push_back(rec);
        s = next;
    }
    return records;
}

// ---- checkpoint io ----

inline nlohmann::json mlp_to_json(const Mlp& m) {
    return nlohmann::json{{"sizes", m.sizes()}, {"params", m.params()}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
    Rng dummy(0);
    Mlp m = Mlp::make(j.at("sizes").get<std::vector<int>>(), dummy, 0.0);
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != m.params().size()) throw std::runtime_error("checkpoint: parameter count mismatch");
    m.params() = std::move(params);
    return m;
}

inline nlohmann::json stat_to_json(const RunningStat& s) {
    return nlohmann::json{{"count", s.count()}, {"mean", s.mean()}, {"m2", s.m2()}};
}

inline RunningStat stat_from_json(const nlohmann::json& j) {
    RunningStat s(j.at("mean").size());
    s.set_state(j.at("count").get<double>(), j.at("mean").get<std::vector<double>>(),
                j.at("m2").get<std::vector<double>>());
    return s;
}

inline nlohmann::json checkpoint_to_json(const TrainState& state) {
    return nlohmann::json{{"format", "mgrid-ppo-checkpoint"},
                          {"version", 1},
                          {"train_config", state.cfg},
                          {"steps_done", state.steps_done},
                          {"iter", state.iter},
                          {"actor", mlp_to_json(state.net.actor)},
                          {"critic", mlp_to_json(state.net.critic)},
                          {"log_std", state.net.log_std},
                          {"obs_norm", stat_to_json(state.net.obs_norm)},
                          {"return_stat", stat_to_json(state.return_stat)},
                          {"p_load_scale", state.net.p_load_scale},
                          {"bat_max_kw", state.net.bat_max_kw},
                          {"dg_max_kw", state.net.dg_max_kw},
                          {"trainer_rng", state.trainer_rng_state},
                          {"env_rngs", state.env_rng_states}};
}

inline TrainState checkpoint_from_json(const nlohmann::json& j) {
    if (j.at("format") != "mgrid-ppo-checkpoint") throw std::runtime_error("checkpoint: unrecognized format");
    if (j.at("version") != 1) throw std::runtime_error("checkpoint: unsupported version");
    TrainState state;
    state.cfg = j.at("train_config").get<TrainConfig>();
    state.steps_done = j.at("steps_done").get<long>();
    state.iter = j.at("iter").get<int>();
    state.net.actor = mlp_from_json(j.at("actor"));
    state.net.critic = mlp_from_json(j.at("critic"));
    const auto ls = j.at("log_std").get<std::vector<double>>();
    if (ls.size() != kActionDim) throw std::runtime_error("checkpoint: log_std size mismatch");
    std::copy(ls.begin(), ls.end(), state.net.log_std.begin());
    state.net.obs_norm = stat_from_json(j.at("obs_norm"));
    state.return_stat = stat_from_json(j.at("return_stat"));
    state.net.p_load_scale = j.at("p_load_scale").get<double>();
    state.net.bat_max_kw = j.at("bat_max_kw").get<double>();
    state.net.dg_max_kw = j.at("dg_max_kw").get<double>();
    state.trainer_rng_state = j.at("trainer_rng").get<std::string>();
    state.env_rng_states = j.at("env_rngs").get<std::vector<std::string>>();
    return state;
}

}  // namespace mgrid
