#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace iwocf::testing {

namespace {

double half_star(double x) { return std::clamp(std::round(x * 2.0) / 2.0, 0.5, 4.0); }

}  // namespace

RatingMatrix random_small_matrix(std::mt19937_64& rng, int max_users, int max_items) {
    std::uniform_int_distribution<int> users_dist(2, max_users);
    std::uniform_int_distribution<int> items_dist(1, max_items);
    std::uniform_int_distribution<int> star(1, 8);
    std::bernoulli_distribution present(0.6);
    const int n_users = users_dist(rng);
    const int n_items = items_dist(rng);
    std::vector<RatingTriple> triples;
    for (int u = 0; u < n_users; ++u) {
        for (int i = 0; i < n_items; ++i) {
            if (present(rng)) triples.push_back({UserId{u + 1}, ItemId{i + 1}, star(rng) * 0.5});
        }
    }
    if (triples.empty()) triples.push_back({UserId{1}, ItemId{1}, 2.0});
    return RatingMatrix::from_triples(triples, RatingScale{0.5, 4.0});
}

RatingMatrix constructed_oracle_matrix() {
    std::vector<RatingTriple> t;
    for (int i = 1; i <= 20; ++i) {
        const double r = 0.5 + 0.5 * ((i * 7) % 6);  // 0.5 .. 3.0
        t.push_back({UserId{1}, ItemId{i}, r});
        t.push_back({UserId{2}, ItemId{i}, r});
        t.push_back({UserId{3}, ItemId{i}, r + 0.5});
        t.push_back({UserId{4}, ItemId{i}, r + 1.0});
        t.push_back({UserId{5}, ItemId{i}, std::min(4.0, r + 0.5 + 0.5 * (i % 2))});
        t.push_back({UserId{6}, ItemId{i}, std::min(4.0, r + 1.0)});
        // Anti-correlated users never pass the threshold.
        t.push_back({UserId{7}, ItemId{i}, 3.5 - r});
        t.push_back({UserId{8}, ItemId{i}, 4.0 - r});
    }
    return RatingMatrix::from_triples(t, RatingScale{0.5, 4.0});
}

RatingMatrix twin_population(std::uint64_t seed, int groups, int group_size, int items) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> star(1, 8);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::bernoulli_distribution rated(0.5);
    std::vector<RatingTriple> t;
    std::int64_t next_user = 1;
    for (int g = 0; g < groups; ++g) {
        std::vector<double> base(items);
        for (auto& b : base) b = star(rng) * 0.5;
        for (int pair = 0; pair < group_size / 2; ++pair) {
            std::vector<std::pair<int, double>> profile;
            for (int i = 0; i < items; ++i) {
                if (!rated(rng)) continue;
                const double r = pair == 0 ? base[i] : half_star(base[i] + noise(rng));
                profile.emplace_back(i, r);
            }
            for (int twin = 0; twin < 2; ++twin) {
                const UserId u{next_user++};
                for (auto [i, r] : profile) t.push_back({u, ItemId{g * items + i + 1}, r});
            }
        }
    }
    return RatingMatrix::from_triples(t, RatingScale{0.5, 4.0});
}

namespace {

struct LatentModel {
    int clusters;
    std::vector<double> item_quality;
    std::vector<std::vector<double>> affinity;  // [cluster][item]
    std::vector<double> popularity;
};

LatentModel make_latent(std::mt19937_64& rng, int items, int clusters, double quality_sd,
                        double affinity_sd) {
    LatentModel m{clusters, {}, {}, {}};
    std::normal_distribution<double> q(0.0, quality_sd);
    std::normal_distribution<double> a(0.0, affinity_sd);
    m.item_quality.resize(items);
    for (auto& x : m.item_quality) x = q(rng);
    m.affinity.assign(clusters, std::vector<double>(items));
    for (auto& row : m.affinity) {
        for (auto& x : row) x = a(rng);
    }
    m.popularity.resize(items);
    for (int i = 0; i < items; ++i) m.popularity[i] = 1.0 / std::pow(i + 10.0, 1.1);
    std::shuffle(m.popularity.begin(), m.popularity.end(), rng);
    return m;
}

template <typename Quantise>
std::vector<RatingTriple> sample_ratings(std::mt19937_64& rng, const LatentModel& model, int users,
                                         double activity_log_mean, double center,
                                         double bias_sd, double noise_sd, Quantise quantise) {
    std::lognormal_distribution<double> activity(activity_log_mean, 0.9);
    std::normal_distribution<double> bias(0.0, bias_sd);
    std::normal_distribution<double> noise(0.0, noise_sd);
    std::uniform_int_distribution<int> cluster(0, model.clusters - 1);
    std::discrete_distribution<int> pick(model.popularity.begin(), model.popularity.end());
    const int items = static_cast<int>(model.popularity.size());

    std::vector<RatingTriple> t;
    for (int u = 0; u < users; ++u) {
        const int c = cluster(rng);
        const double b = bias(rng);
        const int n = std::clamp(static_cast<int>(std::lround(activity(rng))), 1, items / 8);
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < n) chosen.insert(pick(rng));
        for (int i : chosen) {
            const double x = center + b + model.item_quality[i] + model.affinity[c][i] + noise(rng);
            t.push_back({UserId{u + 1}, ItemId{i + 1}, quantise(x)});
        }
    }
    return t;
}

}  // namespace

RatingMatrix filmtrust_like(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto model = make_latent(rng, 2071, 8, 0.35, 0.6);
    const auto t = sample_ratings(rng, model, 1508, 2.75, 3.0, 0.3, 0.35, half_star);
    return RatingMatrix::from_triples(t, RatingScale{0.5, 4.0});
}

RatingMatrix epinions_like(std::uint64_t seed, int users) {
    std::mt19937_64 rng(seed);
    const auto model = make_latent(rng, users * 3, 8, 0.4, 0.7);
    auto quantise = [](double x) { return std::clamp(std::round(x), 1.0, 5.0); };
    const auto t = sample_ratings(rng, model, users, 2.4, 3.9, 0.35, 0.45, quantise);
    return RatingMatrix::from_triples(t, RatingScale{1.0, 5.0});
}

}  // namespace iwocf::testing
