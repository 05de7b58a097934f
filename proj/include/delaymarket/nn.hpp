#pragma once

#include "delaymarket/common.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace delaymarket {

class TrainingDiverged : public std::runtime_error {
public:
    explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

struct MlpSpec {
    int input = 0;
    std::vector<int> hidden = {64, 64};
    std::vector<int> heads; // categorical head sizes

    bool operator==(const MlpSpec&) const = default;
};

// Small feed-forward policy/value network on a flat parameter vector:
// tanh trunk, one linear logit head per action component, one linear value
// head. Forward and backward are exact; no autodiff framework involved.
class Mlp {
public:
    Mlp() = default;

    explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
        if (spec_.input <= 0 || spec_.heads.empty()) throw ConfigError("Mlp: bad spec");
        for (int h : spec_.hidden)
            if (h <= 0) throw ConfigError("Mlp: bad hidden size");
        for (int h : spec_.heads)
            if (h <= 0) throw ConfigError("Mlp: bad head size");
        std::size_t count = 0;
        int in = spec_.input;
        for (int out : spec_.hidden) {
            count += static_cast<std::size_t>(out) * static_cast<std::size_t>(in) +
                     static_cast<std::size_t>(out);
            in = out;
        }
        trunk_out_ = in;
        for (int m : spec_.heads)
            count += static_cast<std::size_t>(m) * static_cast<std::size_t>(in) +
                     static_cast<std::size_t>(m);
        count += static_cast<std::size_t>(in) + 1; // value head
        theta_.assign(count, 0.0);
    }

    const MlpSpec& spec() const { return spec_; }
    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }
    std::size_t param_count() const { return theta_.size(); }

    // Orthogonal rows scaled by a per-block gain: sqrt(2) in the trunk, 0.01
    // on policy heads (near-uniform initial policy), 1 on the value head.
    void init_random(RandomStream& rng) {
        std::size_t off = 0;
        int in = spec_.input;
        for (int out : spec_.hidden) {
            init_orthogonal(&theta_[off], out, in, std::sqrt(2.0), rng);
            off += static_cast<std::size_t>(out) * static_cast<std::size_t>(in);
            off += static_cast<std::size_t>(out); // biases stay zero
            in = out;
        }
        for (int m : spec_.heads) {
            init_orthogonal(&theta_[off], m, in, 0.01, rng);
            off += static_cast<std::size_t>(m) * static_cast<std::size_t>(in);
            off += static_cast<std::size_t>(m);
        }
        init_orthogonal(&theta_[off], 1, in, 1.0, rng);
    }

    struct Forward {
        std::vector<std::vector<double>> activations; // [input, hidden...]
        std::vector<std::vector<double>> head_logits;
        std::vector<std::vector<double>> head_probs;
        double value = 0.0;
    };

    Forward forward(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != spec_.input)
            throw ContractViolation("Mlp::forward: input size mismatch");
        Forward f;
        f.activations.emplace_back(x.begin(), x.end());
        std::size_t off = 0;
        int in = spec_.input;
        for (int out : spec_.hidden) {
            std::vector<double> a(static_cast<std::size_t>(out));
            const std::vector<double>& prev = f.activations.back();
            for (int r = 0; r < out; ++r) {
                double z = 0.0;
                const double* w = &theta_[off + static_cast<std::size_t>(r) * in];
                for (int c = 0; c < in; ++c) z += w[c] * prev[static_cast<std::size_t>(c)];
                z += theta_[off + static_cast<std::size_t>(out) * in + static_cast<std::size_t>(r)];
                a[static_cast<std::size_t>(r)] = std::tanh(z);
            }
            f.activations.push_back(std::move(a));
            off += static_cast<std::size_t>(out) * in + static_cast<std::size_t>(out);
            in = out;
        }
        const std::vector<double>& top = f.activations.back();
        for (int m : spec_.heads) {
            std::vector<double> logits(static_cast<std::size_t>(m));
            for (int r = 0; r < m; ++r) {
                double z = 0.0;
                const double* w = &theta_[off + static_cast<std::size_t>(r) * in];
                for (int c = 0; c < in; ++c) z += w[c] * top[static_cast<std::size_t>(c)];
                z += theta_[off + static_cast<std::size_t>(m) * in + static_cast<std::size_t>(r)];
                logits[static_cast<std::size_t>(r)] = z;
            }
            f.head_probs.push_back(softmax(logits));
            f.head_logits.push_back(std::move(logits));
            off += static_cast<std::size_t>(m) * in + static_cast<std::size_t>(m);
        }
        double v = 0.0;
        for (int c = 0; c < in; ++c) v += theta_[off + static_cast<std::size_t>(c)] * top[static_cast<std::size_t>(c)];
        v += theta_[off + static_cast<std::size_t>(in)];
        f.value = v;
        return f;
    }

    // Accumulates dLoss/dtheta into grad given dLoss/dlogits per head and
    // dLoss/dvalue for one sample.
    void backward(const Forward& f, const std::vector<std::vector<double>>& dlogits,
                  double dvalue, std::vector<double>& grad) const {
        if (grad.size() != theta_.size())
            throw ContractViolation("Mlp::backward: grad size mismatch");
        const int top_n = trunk_out_;
        const std::vector<double>& top = f.activations.back();
        std::vector<double> dtop(static_cast<std::size_t>(top_n), 0.0);

        std::size_t off = trunk_param_count();
        for (std::size_t k = 0; k < spec_.heads.size(); ++k) {
            const int m = spec_.heads[k];
            const std::vector<double>& dz = dlogits[k];
            for (int r = 0; r < m; ++r) {
                const double d = dz[static_cast<std::size_t>(r)];
                double* gw = &grad[off + static_cast<std::size_t>(r) * top_n];
                const double* w = &theta_[off + static_cast<std::size_t>(r) * top_n];
                for (int c = 0; c < top_n; ++c) {
                    gw[c] += d * top[static_cast<std::size_t>(c)];
                    dtop[static_cast<std::size_t>(c)] += d * w[c];
                }
                grad[off + static_cast<std::size_t>(m) * top_n + static_cast<std::size_t>(r)] += d;
            }
            off += static_cast<std::size_t>(m) * top_n + static_cast<std::size_t>(m);
        }
        {
            const double* w = &theta_[off];
            double* gw = &grad[off];
            for (int c = 0; c < top_n; ++c) {
                gw[c] += dvalue * top[static_cast<std::size_t>(c)];
                dtop[static_cast<std::size_t>(c)] += dvalue * w[c];
            }
            grad[off + static_cast<std::size_t>(top_n)] += dvalue;
        }

        // back through the tanh trunk
        std::vector<double> dnext = std::move(dtop);
        for (int layer = static_cast<int>(spec_.hidden.size()) - 1; layer >= 0; --layer) {
            const int out = spec_.hidden[static_cast<std::size_t>(layer)];
            const int in = layer == 0 ? spec_.input : spec_.hidden[static_cast<std::size_t>(layer - 1)];
            const std::size_t loff = layer_offset(layer);
            const std::vector<double>& a = f.activations[static_cast<std::size_t>(layer + 1)];
            const std::vector<double>& prev = f.activations[static_cast<std::size_t>(layer)];
            std::vector<double> dprev(static_cast<std::size_t>(in), 0.0);
            for (int r = 0; r < out; ++r) {
                const double ar = a[static_cast<std::size_t>(r)];
                const double dz = dnext[static_cast<std::size_t>(r)] * (1.0 - ar * ar);
                double* gw = &grad[loff + static_cast<std::size_t>(r) * in];
                const double* w = &theta_[loff + static_cast<std::size_t>(r) * in];
                for (int c = 0; c < in; ++c) {
                    gw[c] += dz * prev[static_cast<std::size_t>(c)];
                    dprev[static_cast<std::size_t>(c)] += dz * w[c];
                }
                grad[loff + static_cast<std::size_t>(out) * in + static_cast<std::size_t>(r)] += dz;
            }
            dnext = std::move(dprev);
        }
    }

    static std::vector<double> softmax(const std::vector<double>& logits) {
        const double mx = *std::max_element(logits.begin(), logits.end());
        std::vector<double> p(logits.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            p[i] = std::exp(logits[i] - mx);
            sum += p[i];
        }
        for (double& v : p) v /= sum;
        return p;
    }

    static double log_prob(const std::vector<double>& logits, int action) {
        const double mx = *std::max_element(logits.begin(), logits.end());
        double lse = 0.0;
        for (double z : logits) lse += std::exp(z - mx);
        return logits[static_cast<std::size_t>(action)] - mx - std::log(lse);
    }

    static double entropy(const std::vector<double>& probs) {
        double h = 0.0;
        for (double p : probs)
            if (p > 0.0) h -= p * std::log(p);
        return h;
    }

    static int sample(const std::vector<double>& probs, RandomStream& rng) {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    static int argmax(const std::vector<double>& probs) {
        return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }

private:
    std::size_t trunk_param_count() const {
        std::size_t count = 0;
        int in = spec_.input;
        for (int out : spec_.hidden) {
            count += static_cast<std::size_t>(out) * in + static_cast<std::size_t>(out);
            in = out;
        }
        return count;
    }

    std::size_t layer_offset(int layer) const {
        std::size_t off = 0;
        int in = spec_.input;
        for (int l = 0; l < layer; ++l) {
            const int out = spec_.hidden[static_cast<std::size_t>(l)];
            off += static_cast<std::size_t>(out) * in + static_cast<std::size_t>(out);
            in = out;
        }
        return off;
    }

    static void init_orthogonal(double* w, int rows, int cols, double gain, RandomStream& rng) {
        // Gaussian rows made orthonormal by modified Gram-Schmidt; when there
        // are more rows than columns only the leading block can be orthogonal
        // and the rest are normalized.
        std::vector<std::vector<double>> r(static_cast<std::size_t>(rows),
                                           std::vector<double>(static_cast<std::size_t>(cols)));
        for (auto& row : r)
            for (double& v : row) v = rng.normal();
        for (int i = 0; i < rows; ++i) {
            auto& ri = r[static_cast<std::size_t>(i)];
            for (int j = 0; j < std::min(i, cols); ++j) {
                const auto& rj = r[static_cast<std::size_t>(j)]; // already unit length
                double dot = 0.0;
                for (int c = 0; c < cols; ++c) dot += ri[static_cast<std::size_t>(c)] * rj[static_cast<std::size_t>(c)];
                for (int c = 0; c < cols; ++c) ri[static_cast<std::size_t>(c)] -= dot * rj[static_cast<std::size_t>(c)];
            }
            double norm = 0.0;
            for (int c = 0; c < cols; ++c) norm += ri[static_cast<std::size_t>(c)] * ri[static_cast<std::size_t>(c)];
            norm = std::sqrt(norm);
            if (norm < 1e-12) norm = 1.0;
            for (int c = 0; c < cols; ++c) ri[static_cast<std::size_t>(c)] /= norm;
            for (int c = 0; c < cols; ++c)
                w[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(c)] =
                    gain * ri[static_cast<std::size_t>(c)];
        }
    }

    MlpSpec spec_;
    std::vector<double> theta_;
    int trunk_out_ = 0;
};

class Adam {
public:
    Adam() = default;
    explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw ContractViolation("Adam: size mismatch");
        ++t_;
        const double b1c = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double b2c = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double mhat = m_[i] / b1c;
            const double vhat = v_[i] / b2c;
            params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }

private:
    std::vector<double> m_, v_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
};

} // namespace delaymarket
