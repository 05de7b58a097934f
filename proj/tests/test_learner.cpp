#include "doctest.h"

#include "delaymarket/learner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace delaymarket;

namespace {

// random batch over a given spec; logp_old is jittered so ratios sit near 1
// but clear of the clip kinks
TrajectoryBatch random_batch(const MlpSpec& spec, int n, RandomStream& rng, const Mlp& net,
                             double logp_jitter = 0.05) {
    TrajectoryBatch batch;
    for (int i = 0; i < n; ++i) {
        Transition tr;
        for (int f = 0; f < spec.input; ++f) tr.obs.push_back(rng.normal());
        const Mlp::Forward fw = net.forward(tr.obs);
        double logp = 0.0;
        for (std::size_t k = 0; k < spec.heads.size(); ++k) {
            const int a = Mlp::sample(fw.head_probs[k], rng);
            tr.actions.push_back(a);
            logp += Mlp::log_prob(fw.head_logits[k], a);
        }
        tr.logp = logp + logp_jitter * rng.normal();
        tr.value = fw.value;
        tr.done = true;
        batch.steps.push_back(std::move(tr));
        batch.advantages.push_back(rng.normal());
        batch.returns.push_back(rng.normal());
    }
    return batch;
}

double fd_loss(Mlp& net, const TrajectoryBatch& batch, const std::vector<int>& idx,
               const LearnerConfig& cfg, std::size_t param, double h) {
    const double saved = net.params()[param];
    net.params()[param] = saved + h;
    const double up = ppo_loss_and_grad(net, batch, idx, cfg).loss;
    net.params()[param] = saved - h;
    const double down = ppo_loss_and_grad(net, batch, idx, cfg).loss;
    net.params()[param] = saved;
    return (up - down) / (2.0 * h);
}

} // namespace

TEST_CASE("policy forward: zero weights give uniform heads, probabilities sum to 1") {
    Mlp net(MlpSpec{4, {8}, {3, 5}});
    const std::vector<double> x = {0.3, -1.0, 2.0, 0.1};
    const Mlp::Forward f = net.forward(x);
    for (double p : f.head_probs[0]) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    for (double p : f.head_probs[1]) CHECK(p == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
    CHECK(f.value == 0.0);

    RandomStream rng(2);
    net.init_random(rng);
    const Mlp::Forward g1 = net.forward(x);
    const Mlp::Forward g2 = net.forward(x);
    CHECK(g1.head_probs == g2.head_probs); // deterministic
    CHECK(g1.value == g2.value);
    for (const auto& head : g1.head_probs) {
        double sum = 0.0;
        for (double p : head) sum += p;
        CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("entropy of each head is within [0, log(size)]") {
    RandomStream rng(3);
    for (int i = 0; i < 200; ++i) {
        const int m = static_cast<int>(rng.uniform_int(2, 7));
        std::vector<double> logits;
        for (int j = 0; j < m; ++j) logits.push_back(4.0 * rng.normal());
        const double h = Mlp::entropy(Mlp::softmax(logits));
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(m)) + 1e-12);
    }
}

TEST_CASE("gae: hand cases") {
    // single step, gamma = lambda = 1: advantage = r - V(s0)
    TrajectoryBatch one;
    Transition tr;
    tr.reward = 2.0;
    tr.value = 0.5;
    tr.done = true;
    one.steps.push_back(tr);
    compute_gae(one, 1.0, 1.0);
    CHECK(one.advantages[0] == doctest::Approx(1.5));
    CHECK(one.returns[0] == doctest::Approx(2.0));

    // all rewards zero with a zero value head
    TrajectoryBatch zeros;
    for (int i = 0; i < 4; ++i) {
        Transition z;
        z.done = i == 3;
        zeros.steps.push_back(z);
    }
    compute_gae(zeros, 0.9, 0.8);
    for (double a : zeros.advantages) CHECK(a == 0.0);

    // r = [1,1,1], V = 0, gamma = 0.5, lambda = 1 -> [1.75, 1.5, 1]
    TrajectoryBatch three;
    for (int i = 0; i < 3; ++i) {
        Transition t3;
        t3.reward = 1.0;
        t3.done = i == 2;
        three.steps.push_back(t3);
    }
    compute_gae(three, 0.5, 1.0);
    CHECK(three.advantages[0] == doctest::Approx(1.75));
    CHECK(three.advantages[1] == doctest::Approx(1.5));
    CHECK(three.advantages[2] == doctest::Approx(1.0));
}

TEST_CASE("gae matches the brute-force discounted-sum oracle") {
    RandomStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 12));
        const double gamma = rng.uniform01();
        const double lambda = rng.uniform01();
        TrajectoryBatch ep;
        for (int i = 0; i < n; ++i) {
            Transition tr;
            tr.reward = rng.normal();
            tr.value = rng.normal();
            tr.done = i == n - 1;
            ep.steps.push_back(tr);
        }
        compute_gae(ep, gamma, lambda);
        // oracle: advantage_t = sum_k (gamma lambda)^k delta_{t+k}, O(T^2)
        for (int t = 0; t < n; ++t) {
            double adv = 0.0;
            double w = 1.0;
            for (int k = t; k < n; ++k) {
                const double next_v = k + 1 < n ? ep.steps[static_cast<std::size_t>(k + 1)].value : 0.0;
                const double delta = ep.steps[static_cast<std::size_t>(k)].reward + gamma * next_v -
                                     ep.steps[static_cast<std::size_t>(k)].value;
                adv += w * delta;
                w *= gamma * lambda;
            }
            CHECK(ep.advantages[static_cast<std::size_t>(t)] == doctest::Approx(adv).epsilon(1e-10));
            CHECK(ep.returns[static_cast<std::size_t>(t)] ==
                  doctest::Approx(adv + ep.steps[static_cast<std::size_t>(t)].value).epsilon(1e-10));
        }
    }
}

TEST_CASE("gae requires a complete episode") {
    TrajectoryBatch ep;
    Transition tr;
    tr.done = false;
    ep.steps.push_back(tr);
    CHECK_THROWS_AS(compute_gae(ep, 0.9, 0.9), ContractViolation);
}

TEST_CASE("clipped surrogate: direct clip formula") {
    CHECK(clipped_surrogate(1.5, 1.0, 0.2) == doctest::Approx(1.2));
    CHECK(clipped_surrogate(0.5, 1.0, 0.2) == doctest::Approx(0.5));  // min picks unclipped
    CHECK(clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8)); // clipped from below
    CHECK(clipped_surrogate(1.0, 3.5, 0.2) == doctest::Approx(3.5));   // inactive at rho=1
}

TEST_CASE("backprop matches central finite differences on random small networks") {
    RandomStream rng(2024);
    LearnerConfig cfg;
    cfg.clip = 0.2;
    cfg.entropy_coef = 0.013;
    cfg.value_coef = 0.47;
    for (int trial = 0; trial < 10; ++trial) {
        MlpSpec spec;
        spec.input = static_cast<int>(rng.uniform_int(2, 5));
        spec.hidden = {static_cast<int>(rng.uniform_int(3, 6))};
        spec.heads = {static_cast<int>(rng.uniform_int(2, 4))};
        if (trial % 2 == 0) spec.heads.push_back(3);
        Mlp net(spec);
        net.init_random(rng);
        TrajectoryBatch batch = random_batch(spec, 8, rng, net);
        std::vector<int> idx;
        for (int i = 0; i < 8; ++i) idx.push_back(i);

        const LossGrad lg = ppo_loss_and_grad(net, batch, idx, cfg);
        double max_rel = 0.0;
        for (std::size_t pidx = 0; pidx < net.param_count(); ++pidx) {
            const double fd = fd_loss(net, batch, idx, cfg, pidx, 1e-5);
            const double bp = lg.grad[pidx];
            const double rel = std::fabs(fd - bp) / std::max({1.0, std::fabs(fd), std::fabs(bp)});
            max_rel = std::max(max_rel, rel);
        }
        CHECK(max_rel <= 1e-4);
    }
}

TEST_CASE("with a huge clip the update direction is the vanilla policy gradient") {
    RandomStream rng(55);
    MlpSpec spec{3, {6}, {3}};
    Mlp net(spec);
    net.init_random(rng);
    TrajectoryBatch batch = random_batch(spec, 16, rng, net, 0.0);
    // ratios exactly 1: store logp from the current network
    for (auto& tr : batch.steps) {
        const Mlp::Forward f = net.forward(tr.obs);
        tr.logp = Mlp::log_prob(f.head_logits[0], tr.actions[0]);
    }
    std::vector<int> idx;
    for (int i = 0; i < 16; ++i) idx.push_back(i);
    LearnerConfig cfg;
    cfg.clip = 1e9;
    cfg.entropy_coef = 0.0;
    cfg.value_coef = 0.0;
    const LossGrad lg = ppo_loss_and_grad(net, batch, idx, cfg);

    // finite differences of the plain policy-gradient loss -mean(A log pi)
    auto pg_loss = [&]() {
        double loss = 0.0;
        for (std::size_t i = 0; i < batch.steps.size(); ++i) {
            const Mlp::Forward f = net.forward(batch.steps[i].obs);
            loss -= batch.advantages[i] * Mlp::log_prob(f.head_logits[0], batch.steps[i].actions[0]);
        }
        return loss / static_cast<double>(batch.steps.size());
    };
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t p = 0; p < net.param_count(); ++p) {
        const double saved = net.params()[p];
        net.params()[p] = saved + 1e-5;
        const double up = pg_loss();
        net.params()[p] = saved - 1e-5;
        const double down = pg_loss();
        net.params()[p] = saved;
        const double fd = (up - down) / 2e-5;
        dot += fd * lg.grad[p];
        na += fd * fd;
        nb += lg.grad[p] * lg.grad[p];
    }
    const double cosine = dot / std::sqrt(na * nb);
    CHECK(cosine > 0.999);
}

TEST_CASE("running stats match a two-pass oracle and the transform inverts") {
    RandomStream rng(7);
    const int n_features = 6;
    const int n_samples = 500;
    std::vector<std::vector<double>> data;
    for (int i = 0; i < n_samples; ++i) {
        std::vector<double> row;
        for (int f = 0; f < n_features; ++f) row.push_back(100.0 * rng.normal() + 10.0 * f);
        data.push_back(row);
    }
    ObservationNormalizer norm(n_features, n_features);
    for (const auto& row : data) {
        Observation obs;
        obs.values = row;
        norm.update(obs);
    }
    for (int f = 0; f < n_features; ++f) {
        double mean = 0.0;
        for (const auto& row : data) mean += row[static_cast<std::size_t>(f)];
        mean /= n_samples;
        double var = 0.0;
        for (const auto& row : data)
            var += (row[static_cast<std::size_t>(f)] - mean) * (row[static_cast<std::size_t>(f)] - mean);
        var /= n_samples;
        CHECK(norm.stats().mean(static_cast<std::size_t>(f)) ==
              doctest::Approx(mean).epsilon(1e-9));
        CHECK(norm.stats().variance(static_cast<std::size_t>(f)) ==
              doctest::Approx(var).epsilon(1e-9));
    }
    Observation probe;
    probe.values = data[17];
    const std::vector<double> z = norm.normalize(probe);
    const std::vector<double> back = norm.inverse(z);
    for (int f = 0; f < n_features; ++f)
        CHECK(back[static_cast<std::size_t>(f)] ==
              doctest::Approx(probe.values[static_cast<std::size_t>(f)]).epsilon(1e-9));
}

TEST_CASE("sentinel observations: delayed features skip updates and normalize to zero") {
    ObservationNormalizer norm(4, 2);
    Observation live;
    live.values = {1.0, 2.0, 3.0, 4.0};
    norm.update(live);
    Observation sent;
    sent.values = {5.0, 6.0, 0.0, 0.0};
    sent.delayed_sentinel = true;
    norm.update(sent);
    CHECK(norm.stats().count(0) == 2);
    CHECK(norm.stats().count(2) == 1); // sentinel did not update delayed stats
    const std::vector<double> z = norm.normalize(sent);
    CHECK(z[2] == 0.0);
    CHECK(z[3] == 0.0);
}

TEST_CASE("reward scaler: raw until two samples, then scaled by return sd") {
    RewardScaler rs(0.9);
    CHECK(rs.update_and_scale(1.0) == doctest::Approx(1.0));
    const double second = rs.update_and_scale(2.0);
    // returns seen: 1.0, 2.9 -> population sd of (1, 2.9)
    const double sd = std::sqrt(((1.0 - 1.95) * (1.0 - 1.95) + (2.9 - 1.95) * (2.9 - 1.95)) / 2.0 + 1e-8);
    CHECK(second == doctest::Approx(2.0 / sd));
}

TEST_CASE("ppo on a two-armed bandit finds the rewarding arm") {
    // arm 0 pays 1, arm 1 pays 0; single-step episodes
    int wins = 0;
    const int seeds = 5;
    for (int seed = 0; seed < seeds; ++seed) {
        MlpSpec spec{1, {8}, {2}};
        Mlp net(spec);
        RandomStream rng(combine_seed(900, static_cast<std::uint64_t>(seed)));
        net.init_random(rng);
        Adam adam(net.param_count());
        LearnerConfig cfg;
        cfg.learning_rate = 0.01;
        cfg.epochs = 4;
        cfg.minibatch = 32;
        cfg.gamma = 1.0;
        cfg.gae_lambda = 1.0;
        cfg.entropy_coef = 0.01;
        cfg.value_coef = 0.5;
        for (int iter = 0; iter < 40; ++iter) {
            TrajectoryBatch batch;
            for (int ep = 0; ep < 32; ++ep) {
                TrajectoryBatch episode;
                Transition tr;
                tr.obs = {1.0};
                const Mlp::Forward f = net.forward(tr.obs);
                const int a = Mlp::sample(f.head_probs[0], rng);
                tr.actions = {a};
                tr.logp = Mlp::log_prob(f.head_logits[0], a);
                tr.value = f.value;
                tr.reward = a == 0 ? 1.0 : 0.0;
                tr.done = true;
                episode.steps.push_back(std::move(tr));
                compute_gae(episode, cfg.gamma, cfg.gae_lambda);
                batch.append(std::move(episode));
            }
            standardize_advantages(batch);
            ppo_update(net, adam, batch, cfg, rng);
        }
        const Mlp::Forward f = net.forward(std::vector<double>{1.0});
        if (Mlp::argmax(f.head_probs[0]) == 0) ++wins;
    }
    CHECK(wins == seeds);
}

TEST_CASE("checkpoint round-trips the policy and normalizer state exactly") {
    RandomStream rng(31);
    MlpSpec spec{5, {6, 4}, {3, 2}};
    PolicyBundle bundle;
    bundle.net = Mlp(spec);
    bundle.net.init_random(rng);
    bundle.obs_norm = ObservationNormalizer(5, 3);
    bundle.reward_scaler = RewardScaler(0.98);
    for (int i = 0; i < 50; ++i) {
        Observation obs;
        for (int f = 0; f < 5; ++f) obs.values.push_back(rng.normal() * 20.0);
        bundle.obs_norm.update(obs);
        bundle.reward_scaler.update_and_scale(rng.normal());
    }
    const std::string path =
        (std::filesystem::temp_directory_path() / "dm_ckpt_test.txt").string();
    save_checkpoint(path, bundle);
    const PolicyBundle loaded = load_checkpoint(path);
    CHECK(loaded.net.spec() == spec);
    CHECK(loaded.net.params() == bundle.net.params()); // %.17g round-trip is exact
    std::vector<double> x = {0.1, -2.0, 3.0, 0.5, 9.0};
    Observation obs;
    obs.values = x;
    CHECK(loaded.obs_norm.normalize(obs) == bundle.obs_norm.normalize(obs));
    const Mlp::Forward fa = bundle.net.forward(x);
    const Mlp::Forward fb = loaded.net.forward(x);
    CHECK(fa.value == fb.value);
    CHECK(fa.head_probs == fb.head_probs);
    std::remove(path.c_str());
}

TEST_CASE("train: smoke run is deterministic and respects learner isolation") {
    EnvConfig env_cfg;
    env_cfg.horizon = 12;
    env_cfg.quote_history = 2;
    env_cfg.trade_history = 2;
    env_cfg.snapshot_levels = 2;
    env_cfg.background.consumer_count = 3;
    env_cfg.background.momentum_count = 0;
    env_cfg.background.value_count = 1;
    auto factory = [env_cfg] { return MarketEnv(env_cfg); };
    LearnerConfig cfg;
    cfg.total_iterations = 2;
    cfg.episodes_per_iteration = 2;
    cfg.epochs = 2;
    cfg.minibatch = 16;
    cfg.hidden = {8};

    const TrainResult a = train(factory, cfg, cfg, 99);
    const TrainResult b = train(factory, cfg, cfg, 99);
    REQUIRE(a.curves.size() == b.curves.size());
    for (std::size_t i = 0; i < a.curves.size(); ++i) {
        CHECK(a.curves[i].mean_discounted_return == b.curves[i].mean_discounted_return);
        CHECK(a.curves[i].entropy == b.curves[i].entropy);
        CHECK(a.curves[i].policy_loss == b.curves[i].policy_loss);
    }
    CHECK(a.curves.size() == 4); // 2 iterations x 2 players

    // the two players hold independent parameter vectors
    TrainResult c = train(factory, cfg, cfg, 99);
    const std::vector<double> pt_params = c.players[1].net.params();
    c.players[0].net.params()[0] += 1.0;
    CHECK(c.players[1].net.params() == pt_params);
}

TEST_CASE("train: zero iterations returns freshly initialized params") {
    EnvConfig env_cfg;
    env_cfg.horizon = 4;
    env_cfg.background.consumer_count = 1;
    env_cfg.background.momentum_count = 0;
    env_cfg.background.value_count = 0;
    auto factory = [env_cfg] { return MarketEnv(env_cfg); };
    LearnerConfig cfg;
    cfg.total_iterations = 0;
    const TrainResult r = train(factory, cfg, cfg, 5);
    CHECK(r.curves.empty());
    CHECK(r.players[0].net.param_count() > 0);
    // a zero-count normalizer normalizes everything to zero; params match a
    // fresh net seeded the same way
    MarketEnv env = factory();
    Mlp fresh(mm_policy_spec(env, cfg));
    RandomStream rng(combine_seed(5, 7000));
    fresh.init_random(rng);
    CHECK(r.players[0].net.params() == fresh.params());
}

TEST_CASE("evaluate: zero episodes yields empty outcomes") {
    EnvConfig env_cfg;
    env_cfg.horizon = 4;
    env_cfg.background.consumer_count = 1;
    env_cfg.background.momentum_count = 0;
    env_cfg.background.value_count = 0;
    auto factory = [env_cfg] { return MarketEnv(env_cfg); };
    LearnerConfig cfg;
    cfg.total_iterations = 0;
    const TrainResult r = train(factory, cfg, cfg, 5);
    const EvalResult ev = evaluate(r.players, factory, 0, 1);
    CHECK(ev.outcomes_cents[0].empty());
    CHECK(ev.outcomes_cents[1].empty());
}

TEST_CASE("evaluate: a hold-always pt has exactly zero outcome and 100% holds") {
    EnvConfig env_cfg;
    env_cfg.horizon = 10;
    env_cfg.quote_history = 2;
    env_cfg.trade_history = 2;
    env_cfg.snapshot_levels = 2;
    env_cfg.background.consumer_count = 4;
    env_cfg.background.momentum_count = 0;
    env_cfg.background.value_count = 1;
    auto factory = [env_cfg] { return MarketEnv(env_cfg); };
    LearnerConfig cfg;
    cfg.total_iterations = 0;
    cfg.hidden = {4};
    TrainResult r = train(factory, cfg, cfg, 5);
    // zero the pt network and push the side head's hold bias up
    std::fill(r.players[1].net.params().begin(), r.players[1].net.params().end(), 0.0);
    // side head biases sit right before the value head parameters
    MarketEnv env = factory();
    const int top = 4;
    const std::size_t value_params = static_cast<std::size_t>(top) + 1;
    const std::size_t side_bias_hold =
        r.players[1].net.param_count() - value_params - 1; // last of 3 side biases
    r.players[1].net.params()[side_bias_hold] = 25.0;
    const EvalResult ev = evaluate(r.players, factory, 5, 42);
    CHECK(ev.pt_pct_hold == 100.0);
    for (double y : ev.outcomes_cents[1]) CHECK(y == 0.0);
    CHECK(ev.mean_halfspread_cents[1] == 0.0);
}
