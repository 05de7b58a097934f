#pragma once

#include "delaymarket/common.hpp"
#include "delaymarket/market_env.hpp"
#include "delaymarket/nn.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace delaymarket {

// Welford accumulator per feature; population variance.
class RunningStats {
public:
    RunningStats() = default;
    explicit RunningStats(std::size_t n) { resize(n); }

    void resize(std::size_t n) {
        count_.assign(n, 0);
        mean_.assign(n, 0.0);
        m2_.assign(n, 0.0);
    }

    std::size_t size() const { return mean_.size(); }

    void update_one(std::size_t i, double x) {
        count_[i] += 1;
        const double d = x - mean_[i];
        mean_[i] += d / static_cast<double>(count_[i]);
        m2_[i] += d * (x - mean_[i]);
    }

    double mean(std::size_t i) const { return mean_[i]; }
    double variance(std::size_t i) const {
        return count_[i] > 0 ? m2_[i] / static_cast<double>(count_[i]) : 0.0;
    }
    std::int64_t count(std::size_t i) const { return count_[i]; }

    double mean_raw(std::size_t i) const { return mean_[i]; }
    double m2_raw(std::size_t i) const { return m2_[i]; }
    void set_raw(std::size_t i, std::int64_t count, double mean, double m2) {
        count_[i] = count;
        mean_[i] = mean;
        m2_[i] = m2;
    }

private:
    std::vector<std::int64_t> count_;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

// Feature-wise observation standardization. The delayed block keeps separate
// statistics: sentinel steps neither update those features nor read them —
// a sentinel normalizes to zeros, the population mean in normalized space.
class ObservationNormalizer {
public:
    ObservationNormalizer() = default;
    ObservationNormalizer(int size, int immediate_size)
        : stats_(static_cast<std::size_t>(size)), immediate_size_(immediate_size) {}

    void update(const Observation& obs) {
        const std::size_t n = stats_.size();
        const std::size_t lim = obs.delayed_sentinel ? static_cast<std::size_t>(immediate_size_) : n;
        for (std::size_t i = 0; i < lim; ++i) stats_.update_one(i, obs.values[i]);
    }

    std::vector<double> normalize(const Observation& obs) const {
        std::vector<double> out(stats_.size());
        for (std::size_t i = 0; i < stats_.size(); ++i) {
            if (obs.delayed_sentinel && i >= static_cast<std::size_t>(immediate_size_)) {
                out[i] = 0.0;
            } else {
                out[i] = (obs.values[i] - stats_.mean(i)) / sigma(i);
            }
        }
        return out;
    }

    std::vector<double> inverse(std::span<const double> normalized) const {
        std::vector<double> out(stats_.size());
        for (std::size_t i = 0; i < stats_.size(); ++i)
            out[i] = normalized[i] * sigma(i) + stats_.mean(i);
        return out;
    }

    RunningStats& stats() { return stats_; }
    const RunningStats& stats() const { return stats_; }
    int immediate_size() const { return immediate_size_; }

private:
    double sigma(std::size_t i) const { return std::sqrt(stats_.variance(i) + 1e-8); }

    RunningStats stats_;
    int immediate_size_ = 0;
};

// Scales rewards by the running standard deviation of the discounted return.
// Unscaled until two returns have been observed.
class RewardScaler {
public:
    RewardScaler() : stats_(1) {}
    explicit RewardScaler(double gamma) : stats_(1), gamma_(gamma) {}

    void reset_episode() { running_return_ = 0.0; }

    double update_and_scale(double reward) {
        running_return_ = gamma_ * running_return_ + reward;
        stats_.update_one(0, running_return_);
        if (stats_.count(0) < 2) return reward;
        const double sd = std::sqrt(stats_.variance(0) + 1e-8);
        return sd > 0.0 ? reward / sd : reward;
    }

    double gamma() const { return gamma_; }
    double running_return() const { return running_return_; }
    RunningStats& stats() { return stats_; }
    const RunningStats& stats() const { return stats_; }

private:
    RunningStats stats_;
    double gamma_ = 0.99;
    double running_return_ = 0.0;
};

struct LearnerConfig {
    double clip = 0.2;
    double learning_rate = 3e-4;
    int epochs = 10;
    int minibatch = 128;
    double gae_lambda = 0.95;
    double gamma = 0.9999;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    int episodes_per_iteration = 10;
    int total_iterations = 40;
    std::vector<int> hidden = {64, 64};

    void validate() const {
        if (clip <= 0.0) throw ConfigError("clip must be positive");
        if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
        if (epochs < 1 || minibatch < 1) throw ConfigError("epochs and minibatch must be >= 1");
        if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("gae_lambda must be in [0,1]");
        if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0,1]");
        if (entropy_coef < 0.0 || value_coef < 0.0) throw ConfigError("coefficients must be >= 0");
        if (episodes_per_iteration < 1) throw ConfigError("episodes_per_iteration must be >= 1");
        if (total_iterations < 0) throw ConfigError("total_iterations must be >= 0");
        for (int h : hidden)
            if (h < 1) throw ConfigError("hidden sizes must be >= 1");
    }
};

struct Transition {
    std::vector<double> obs;  // normalized
    std::vector<int> actions; // one index per head
    double logp = 0.0;        // summed over heads at storage time
    double reward = 0.0;      // normalized
    double value = 0.0;
    bool done = false;
    int t = 0;
    int player = -1;
};

struct TrajectoryBatch {
    std::vector<Transition> steps;
    std::vector<double> advantages;
    std::vector<double> returns;

    void append(TrajectoryBatch&& other) {
        steps.insert(steps.end(), std::make_move_iterator(other.steps.begin()),
                     std::make_move_iterator(other.steps.end()));
        advantages.insert(advantages.end(), other.advantages.begin(), other.advantages.end());
        returns.insert(returns.end(), other.returns.begin(), other.returns.end());
    }
};

// GAE over one complete episode, with V(s_H) = 0:
//   delta_t = r_t + gamma V(s_{t+1}) - V(s_t)
//   advantage_t = sum_k (gamma lambda)^k delta_{t+k}
// return targets are advantage + value.
inline void compute_gae(TrajectoryBatch& episode, double gamma, double lambda) {
    const std::size_t n = episode.steps.size();
    if (n == 0) return;
    if (!episode.steps.back().done)
        throw ContractViolation("compute_gae: episode must end with done");
    episode.advantages.assign(n, 0.0);
    episode.returns.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t idx = n; idx-- > 0;) {
        const Transition& tr = episode.steps[idx];
        const double next_value = (idx + 1 < n) ? episode.steps[idx + 1].value : 0.0;
        const double delta = tr.reward + gamma * next_value - tr.value;
        acc = delta + gamma * lambda * acc;
        episode.advantages[idx] = acc;
        episode.returns[idx] = acc + tr.value;
    }
}

inline void standardize_advantages(TrajectoryBatch& batch) {
    const std::size_t n = batch.advantages.size();
    if (n == 0) return;
    double mean = 0.0;
    for (double a : batch.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var) + 1e-8;
    for (double& a : batch.advantages) a = (a - mean) / sd;
}

// surrogate term min(ratio*A, clip(ratio)*A)
inline double clipped_surrogate(double ratio, double advantage, double clip) {
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    return std::min(ratio * advantage, clipped * advantage);
}

struct UpdateDiagnostics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

struct LossGrad {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    std::size_t clipped = 0;
    std::vector<double> grad;
};

// Total PPO loss and its exact gradient over the given batch indices:
//   L = -mean min(rho A, clip(rho) A) + c_v mean (V - ret)^2 - c_e mean H
// Ratios are formed in log space with the exponent clamped so extreme
// policies cannot overflow.
inline LossGrad ppo_loss_and_grad(const Mlp& net, const TrajectoryBatch& batch,
                                  std::span<const int> indices, const LearnerConfig& cfg) {
    if (indices.empty()) throw ContractViolation("ppo_loss_and_grad: empty index set");
    LossGrad out;
    out.grad.assign(net.param_count(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(indices.size());
    const std::size_t head_count = net.spec().heads.size();
    std::vector<std::vector<double>> dlogits(head_count);

    for (int idx : indices) {
        const Transition& tr = batch.steps[static_cast<std::size_t>(idx)];
        const double adv = batch.advantages[static_cast<std::size_t>(idx)];
        const double ret = batch.returns[static_cast<std::size_t>(idx)];
        const Mlp::Forward f = net.forward(tr.obs);

        double logp = 0.0;
        for (std::size_t k = 0; k < head_count; ++k)
            logp += Mlp::log_prob(f.head_logits[k], tr.actions[k]);
        const double ratio = std::exp(std::min(logp - tr.logp, 30.0));
        const double surr1 = ratio * adv;
        const double surr2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        const bool unclipped = surr1 <= surr2;
        if (!unclipped) ++out.clipped;

        double entropy = 0.0;
        for (std::size_t k = 0; k < head_count; ++k) entropy += Mlp::entropy(f.head_probs[k]);

        const double vdiff = f.value - ret;
        out.policy_loss += -std::min(surr1, surr2) * inv_b;
        out.value_loss += vdiff * vdiff * inv_b;
        out.entropy += entropy * inv_b;

        // dLoss/dlogp: only the unclipped branch carries gradient
        const double dlogp = unclipped ? -inv_b * adv * ratio : 0.0;
        for (std::size_t k = 0; k < head_count; ++k) {
            const std::vector<double>& p = f.head_probs[k];
            std::vector<double>& dz = dlogits[k];
            dz.assign(p.size(), 0.0);
            const double head_h = Mlp::entropy(p);
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double onehot = (static_cast<int>(j) == tr.actions[k]) ? 1.0 : 0.0;
                dz[j] = dlogp * (onehot - p[j]);
                // entropy bonus: dH/dz_j = -p_j (log p_j + H)
                if (p[j] > 0.0)
                    dz[j] += cfg.entropy_coef * inv_b * p[j] * (std::log(p[j]) + head_h);
            }
        }
        const double dvalue = cfg.value_coef * inv_b * 2.0 * vdiff;
        net.backward(f, dlogits, dvalue, out.grad);
    }
    out.loss = out.policy_loss + cfg.value_coef * out.value_loss - cfg.entropy_coef * out.entropy;
    return out;
}

// One PPO update: `epochs` passes of minibatch Adam descent on the clipped
// surrogate loss. Advantages must already be standardized.
inline UpdateDiagnostics ppo_update(Mlp& net, Adam& adam, const TrajectoryBatch& batch,
                                    const LearnerConfig& cfg, RandomStream& rng) {
    const std::size_t n = batch.steps.size();
    if (n == 0) throw ContractViolation("ppo_update: empty batch");
    UpdateDiagnostics diag;
    std::size_t diag_samples = 0, clipped_samples = 0;

    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.minibatch));
            const LossGrad lg = ppo_loss_and_grad(
                net, batch, std::span<const int>(order.data() + start, stop - start), cfg);
            for (double g : lg.grad)
                if (!std::isfinite(g)) throw TrainingDiverged("non-finite gradient in ppo_update");
            adam.step(net.params(), lg.grad, cfg.learning_rate);
            diag.policy_loss += lg.policy_loss;
            diag.value_loss += lg.value_loss;
            diag.entropy += lg.entropy;
            diag_samples += stop - start;
            clipped_samples += lg.clipped;
        }
    }
    const double passes = static_cast<double>(cfg.epochs) *
                          std::ceil(static_cast<double>(n) / cfg.minibatch);
    diag.policy_loss /= passes;
    diag.value_loss /= passes;
    diag.entropy /= passes;
    diag.clip_fraction =
        diag_samples > 0 ? static_cast<double>(clipped_samples) / static_cast<double>(diag_samples) : 0.0;
    for (double v : {diag.policy_loss, diag.value_loss, diag.entropy})
        if (!std::isfinite(v)) throw TrainingDiverged("non-finite loss in ppo_update");
    return diag;
}

// Everything one player carries between training and evaluation.
struct PolicyBundle {
    Mlp net;
    ObservationNormalizer obs_norm;
    RewardScaler reward_scaler;
};

struct CurveRow {
    int iteration = 0;
    int player = 0; // 0 = mm, 1 = pt
    double mean_discounted_return = 0.0;
    double entropy = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
};

struct TrainResult {
    std::array<PolicyBundle, 2> players;
    std::vector<CurveRow> curves;
};

using EnvFactory = std::function<MarketEnv()>;

inline MlpSpec mm_policy_spec(const MarketEnv& env, const LearnerConfig& cfg) {
    return MlpSpec{env.layout().size(), cfg.hidden, {env.mm_action_count()}};
}

inline MlpSpec pt_policy_spec(const MarketEnv& env, const LearnerConfig& cfg) {
    return MlpSpec{env.layout().size(), cfg.hidden, {env.mm_action_count(), 3}};
}

inline PTSide pt_side_from_index(int idx) {
    switch (idx) {
        case 0: return PTSide::Buy;
        case 1: return PTSide::Sell;
        default: return PTSide::Hold;
    }
}

// Independent PPO for both players in shared episodes: each learner sees only
// its own observations, actions and rewards.
inline TrainResult train(const EnvFactory& env_factory, const LearnerConfig& mm_cfg,
                         const LearnerConfig& pt_cfg, std::uint64_t seed) {
    mm_cfg.validate();
    pt_cfg.validate();
    if (mm_cfg.episodes_per_iteration != pt_cfg.episodes_per_iteration ||
        mm_cfg.total_iterations != pt_cfg.total_iterations)
        throw ConfigError("train: players must agree on episodes_per_iteration and total_iterations");

    MarketEnv env = env_factory();
    const std::array<LearnerConfig, 2> cfgs = {mm_cfg, pt_cfg};

    TrainResult result;
    for (int p = 0; p < 2; ++p) {
        const MlpSpec spec = p == MarketEnv::kMM ? mm_policy_spec(env, cfgs[0])
                                                 : pt_policy_spec(env, cfgs[1]);
        PolicyBundle& b = result.players[static_cast<std::size_t>(p)];
        b.net = Mlp(spec);
        RandomStream init_rng(combine_seed(seed, 7000 + static_cast<std::uint64_t>(p)));
        b.net.init_random(init_rng);
        b.obs_norm = ObservationNormalizer(env.layout().size(), env.layout().immediate_size);
        b.reward_scaler = RewardScaler(cfgs[static_cast<std::size_t>(p)].gamma);
    }

    std::array<Adam, 2> adams = {Adam(result.players[0].net.param_count()),
                                 Adam(result.players[1].net.param_count())};
    std::array<RandomStream, 2> act_rng = {RandomStream(combine_seed(seed, 100)),
                                           RandomStream(combine_seed(seed, 101))};
    std::array<RandomStream, 2> update_rng = {RandomStream(combine_seed(seed, 200)),
                                              RandomStream(combine_seed(seed, 201))};

    for (int iter = 0; iter < mm_cfg.total_iterations; ++iter) {
        std::array<TrajectoryBatch, 2> batches;
        std::array<double, 2> return_sum = {0.0, 0.0};
        std::array<double, 2> entropy_sum = {0.0, 0.0};
        std::size_t entropy_count = 0;

        for (int ep = 0; ep < mm_cfg.episodes_per_iteration; ++ep) {
            const std::uint64_t ep_seed =
                combine_seed(combine_seed(seed, static_cast<std::uint64_t>(iter)),
                             static_cast<std::uint64_t>(ep) + 1);
            std::array<Observation, 2> obs = env.reset(ep_seed);
            std::array<TrajectoryBatch, 2> episode;
            std::array<double, 2> gamma_pow = {1.0, 1.0};
            for (int p = 0; p < 2; ++p) result.players[static_cast<std::size_t>(p)].reward_scaler.reset_episode();

            bool done = false;
            int t = 0;
            while (!done) {
                std::array<Transition, 2> pending;
                MMAction mm_action{};
                PTAction pt_action{};
                for (int p = 0; p < 2; ++p) {
                    PolicyBundle& b = result.players[static_cast<std::size_t>(p)];
                    b.obs_norm.update(obs[static_cast<std::size_t>(p)]);
                    std::vector<double> x = b.obs_norm.normalize(obs[static_cast<std::size_t>(p)]);
                    const Mlp::Forward f = b.net.forward(x);
                    if (!std::isfinite(f.value)) throw TrainingDiverged("non-finite value estimate");
                    Transition tr;
                    tr.obs = std::move(x);
                    tr.player = p;
                    tr.t = t;
                    tr.value = f.value;
                    double logp = 0.0;
                    double ent = 0.0;
                    for (std::size_t k = 0; k < f.head_probs.size(); ++k) {
                        const int a = Mlp::sample(f.head_probs[k], act_rng[static_cast<std::size_t>(p)]);
                        tr.actions.push_back(a);
                        logp += Mlp::log_prob(f.head_logits[k], a);
                        ent += Mlp::entropy(f.head_probs[k]);
                    }
                    tr.logp = logp;
                    entropy_sum[static_cast<std::size_t>(p)] += ent;
                    pending[static_cast<std::size_t>(p)] = std::move(tr);
                    if (p == MarketEnv::kMM) {
                        mm_action.halfspread_index = pending[0].actions[0];
                    } else {
                        pt_action.halfspread_index = pending[1].actions[0];
                        pt_action.side = pt_side_from_index(pending[1].actions[1]);
                    }
                }
                ++entropy_count;

                const StepResult sr = env.step(mm_action, pt_action);
                for (int p = 0; p < 2; ++p) {
                    PolicyBundle& b = result.players[static_cast<std::size_t>(p)];
                    const double raw = sr.reward[static_cast<std::size_t>(p)];
                    return_sum[static_cast<std::size_t>(p)] += gamma_pow[static_cast<std::size_t>(p)] * raw;
                    gamma_pow[static_cast<std::size_t>(p)] *= cfgs[static_cast<std::size_t>(p)].gamma;
                    Transition& tr = pending[static_cast<std::size_t>(p)];
                    tr.reward = b.reward_scaler.update_and_scale(raw);
                    tr.done = sr.done;
                    episode[static_cast<std::size_t>(p)].steps.push_back(std::move(tr));
                }
                obs = sr.obs;
                done = sr.done;
                ++t;
            }
            for (int p = 0; p < 2; ++p) {
                compute_gae(episode[static_cast<std::size_t>(p)], cfgs[static_cast<std::size_t>(p)].gamma,
                            cfgs[static_cast<std::size_t>(p)].gae_lambda);
                batches[static_cast<std::size_t>(p)].append(std::move(episode[static_cast<std::size_t>(p)]));
            }
        }

        for (int p = 0; p < 2; ++p) {
            TrajectoryBatch& batch = batches[static_cast<std::size_t>(p)];
            // independent learners: a player's update must only ever see its
            // own transitions
            for (const Transition& tr : batch.steps)
                if (tr.player != p)
                    throw ContractViolation("train: foreign transition in player batch");
            standardize_advantages(batch);
            UpdateDiagnostics diag;
            try {
                diag = ppo_update(result.players[static_cast<std::size_t>(p)].net,
                                  adams[static_cast<std::size_t>(p)], batch,
                                  cfgs[static_cast<std::size_t>(p)], update_rng[static_cast<std::size_t>(p)]);
            } catch (const TrainingDiverged& e) {
                throw TrainingDiverged(std::string(e.what()) + " (player " + std::to_string(p) +
                                       ", iteration " + std::to_string(iter) + ")");
            }
            CurveRow row;
            row.iteration = iter;
            row.player = p;
            row.mean_discounted_return =
                return_sum[static_cast<std::size_t>(p)] / mm_cfg.episodes_per_iteration;
            row.entropy = entropy_count > 0
                              ? entropy_sum[static_cast<std::size_t>(p)] / static_cast<double>(entropy_count)
                              : 0.0;
            row.policy_loss = diag.policy_loss;
            row.value_loss = diag.value_loss;
            result.curves.push_back(row);
        }
    }
    return result;
}

struct EvalResult {
    std::array<std::vector<double>, 2> outcomes_cents; // per episode, exact
    std::array<double, 2> mean_halfspread_cents = {0.0, 0.0};
    double pt_pct_hold = 0.0;
    // stride-sampled normalized observations for feature-importance analysis
    std::array<std::vector<std::vector<double>>, 2> obs_dataset;
};

struct GreedyActions {
    MMAction mm;
    PTAction pt;
};

inline GreedyActions greedy_actions(const std::array<PolicyBundle, 2>& players,
                                    const std::array<Observation, 2>& obs) {
    GreedyActions out;
    const Mlp::Forward fm = players[0].net.forward(players[0].obs_norm.normalize(obs[0]));
    out.mm.halfspread_index = Mlp::argmax(fm.head_probs[0]);
    const Mlp::Forward fp = players[1].net.forward(players[1].obs_norm.normalize(obs[1]));
    out.pt.halfspread_index = Mlp::argmax(fp.head_probs[0]);
    out.pt.side = pt_side_from_index(Mlp::argmax(fp.head_probs[1]));
    return out;
}

inline std::uint64_t eval_episode_seed(std::uint64_t seed, int ep) {
    return combine_seed(combine_seed(seed, 0x9e3779b9u), static_cast<std::uint64_t>(ep));
}

// Greedy rollouts with frozen normalizers. Outcomes are the exact telescoped
// episode profits in cents.
inline EvalResult evaluate(const std::array<PolicyBundle, 2>& players, const EnvFactory& env_factory,
                           int episode_count, std::uint64_t seed, int obs_dataset_cap = 4000) {
    MarketEnv env = env_factory();
    EvalResult result;
    if (episode_count <= 0) return result;

    const long total_steps = static_cast<long>(episode_count) * env.config().horizon;
    const long stride = std::max(1L, total_steps / std::max(1, obs_dataset_cap));

    std::array<double, 2> halfspread_sum = {0.0, 0.0};
    std::array<long, 2> halfspread_count = {0, 0};
    long hold_count = 0;
    long step_count = 0;

    for (int ep = 0; ep < episode_count; ++ep) {
        std::array<Observation, 2> obs = env.reset(eval_episode_seed(seed, ep));
        std::array<HalfCents, 2> outcome_x2 = {0, 0};
        bool done = false;
        while (!done) {
            if (step_count % stride == 0) {
                for (int p = 0; p < 2; ++p)
                    result.obs_dataset[static_cast<std::size_t>(p)].push_back(
                        players[static_cast<std::size_t>(p)].obs_norm.normalize(obs[static_cast<std::size_t>(p)]));
            }
            const GreedyActions act = greedy_actions(players, obs);
            const auto& spreads = env.config().halfspreads_x2;
            halfspread_sum[0] +=
                static_cast<double>(spreads[static_cast<std::size_t>(act.mm.halfspread_index)]) / 2.0;
            ++halfspread_count[0];
            if (act.pt.side == PTSide::Hold) {
                ++hold_count;
            } else {
                halfspread_sum[1] +=
                    static_cast<double>(spreads[static_cast<std::size_t>(act.pt.halfspread_index)]) / 2.0;
                ++halfspread_count[1];
            }
            const StepResult sr = env.step(act.mm, act.pt);
            for (int p = 0; p < 2; ++p) outcome_x2[static_cast<std::size_t>(p)] += sr.reward_x2[static_cast<std::size_t>(p)];
            obs = sr.obs;
            done = sr.done;
            ++step_count;
        }
        for (int p = 0; p < 2; ++p)
            result.outcomes_cents[static_cast<std::size_t>(p)].push_back(
                static_cast<double>(outcome_x2[static_cast<std::size_t>(p)]) / 2.0);
    }
    for (int p = 0; p < 2; ++p)
        result.mean_halfspread_cents[static_cast<std::size_t>(p)] =
            halfspread_count[static_cast<std::size_t>(p)] > 0
                ? halfspread_sum[static_cast<std::size_t>(p)] /
                      static_cast<double>(halfspread_count[static_cast<std::size_t>(p)])
                : 0.0;
    result.pt_pct_hold = step_count > 0 ? 100.0 * static_cast<double>(hold_count) /
                                              static_cast<double>(step_count)
                                        : 0.0;
    return result;
}

// ---- checkpoint io (versioned text; %.17g round-trips doubles exactly) ----

inline void save_checkpoint(const std::string& path, const PolicyBundle& bundle) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    const MlpSpec& spec = bundle.net.spec();
    out << "delaymarket-policy v1\n";
    out << "input " << spec.input << "\n";
    out << "hidden " << spec.hidden.size();
    for (int h : spec.hidden) out << " " << h;
    out << "\nheads " << spec.heads.size();
    for (int h : spec.heads) out << " " << h;
    out << "\nparams " << bundle.net.param_count() << "\n";
    for (double v : bundle.net.params()) out << fmt_double17(v) << "\n";
    const RunningStats& st = bundle.obs_norm.stats();
    out << "obs_norm " << st.size() << " " << bundle.obs_norm.immediate_size() << "\n";
    for (std::size_t i = 0; i < st.size(); ++i)
        out << st.count(i) << " " << fmt_double17(st.mean_raw(i)) << " "
            << fmt_double17(st.m2_raw(i)) << "\n";
    const RunningStats& rs = bundle.reward_scaler.stats();
    out << "reward_scaler " << rs.count(0) << " " << fmt_double17(rs.mean_raw(0)) << " "
        << fmt_double17(rs.m2_raw(0)) << " " << fmt_double17(bundle.reward_scaler.gamma()) << "\n";
    out << "end\n";
}

inline PolicyBundle load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "delaymarket-policy v1")
        throw std::runtime_error("bad checkpoint header: " + path);
    std::string tag;
    MlpSpec spec;
    in >> tag >> spec.input;
    if (tag != "input") throw std::runtime_error("bad checkpoint (input): " + path);
    std::size_t nh = 0;
    in >> tag >> nh;
    if (tag != "hidden") throw std::runtime_error("bad checkpoint (hidden): " + path);
    spec.hidden.resize(nh);
    for (auto& h : spec.hidden) in >> h;
    in >> tag >> nh;
    if (tag != "heads") throw std::runtime_error("bad checkpoint (heads): " + path);
    spec.heads.resize(nh);
    for (auto& h : spec.heads) in >> h;
    std::size_t np = 0;
    in >> tag >> np;
    if (tag != "params") throw std::runtime_error("bad checkpoint (params): " + path);
    PolicyBundle bundle;
    bundle.net = Mlp(spec);
    if (np != bundle.net.param_count()) throw std::runtime_error("checkpoint param count mismatch");
    for (auto& v : bundle.net.params()) in >> v;
    std::size_t n = 0;
    int immediate = 0;
    in >> tag >> n >> immediate;
    if (tag != "obs_norm") throw std::runtime_error("bad checkpoint (obs_norm): " + path);
    bundle.obs_norm = ObservationNormalizer(static_cast<int>(n), immediate);
    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t count;
        double mean, m2;
        in >> count >> mean >> m2;
        bundle.obs_norm.stats().set_raw(i, count, mean, m2);
    }
    std::int64_t rcount;
    double rmean, rm2, rgamma;
    in >> tag >> rcount >> rmean >> rm2 >> rgamma;
    if (tag != "reward_scaler") throw std::runtime_error("bad checkpoint (reward_scaler): " + path);
    bundle.reward_scaler = RewardScaler(rgamma);
    bundle.reward_scaler.stats().set_raw(0, rcount, rmean, rm2);
    in >> tag;
    if (tag != "end" || !in) throw std::runtime_error("truncated checkpoint: " + path);
    return bundle;
}

} // namespace delaymarket
