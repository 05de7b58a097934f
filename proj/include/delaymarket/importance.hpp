#pragma once

#include "delaymarket/common.hpp"
#include "delaymarket/market_env.hpp"
#include "delaymarket/nn.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace delaymarket {

struct ImportanceScore {
    FeatureGroup group;
    double score = 0.0; // fraction of rows whose greedy action changed
    bool delayed = false;
};

// Permutation feature importance for one categorical head: how often the
// head's greedy action changes when a feature group's values are shuffled
// across the dataset. Rows are canonicalized by lexicographic sort before
// the shuffle so scores do not depend on the dataset's row order.
inline std::vector<ImportanceScore> permutation_importance(
    const Mlp& net, const std::vector<std::vector<double>>& dataset, int head,
    const FeatureLayout& layout, RandomStream& rng) {
    if (dataset.empty()) throw std::invalid_argument("permutation_importance: empty dataset");
    if (head < 0 || head >= static_cast<int>(net.spec().heads.size()))
        throw std::invalid_argument("permutation_importance: head out of range");

    const std::size_t n = dataset.size();
    std::vector<int> canon(n);
    std::iota(canon.begin(), canon.end(), 0);
    std::sort(canon.begin(), canon.end(), [&](int a, int b) {
        return dataset[static_cast<std::size_t>(a)] < dataset[static_cast<std::size_t>(b)];
    });

    std::vector<int> baseline(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mlp::Forward f = net.forward(dataset[static_cast<std::size_t>(canon[i])]);
        baseline[i] = Mlp::argmax(f.head_probs[static_cast<std::size_t>(head)]);
    }

    std::vector<ImportanceScore> scores;
    std::vector<double> probe;
    for (FeatureGroup group : kAllFeatureGroups) {
        std::vector<std::size_t> features;
        for (std::size_t i = 0; i < layout.groups.size(); ++i)
            if (layout.groups[i] == group) features.push_back(i);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);

        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            probe = dataset[static_cast<std::size_t>(canon[i])];
            const std::vector<double>& donor =
                dataset[static_cast<std::size_t>(canon[static_cast<std::size_t>(perm[i])])];
            for (std::size_t f : features) probe[f] = donor[f];
            const Mlp::Forward fw = net.forward(probe);
            if (Mlp::argmax(fw.head_probs[static_cast<std::size_t>(head)]) != baseline[i]) ++changed;
        }
        scores.push_back({group, static_cast<double>(changed) / static_cast<double>(n),
                          feature_group_delayed(group)});
    }
    std::stable_sort(scores.begin(), scores.end(),
                     [](const ImportanceScore& a, const ImportanceScore& b) { return a.score > b.score; });
    return scores;
}

} // namespace delaymarket
