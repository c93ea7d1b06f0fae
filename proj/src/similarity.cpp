#include "iwocf/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "iwocf/error.hpp"

namespace iwocf {

void SimilarityParams::validate() const {
    if (!(k > 0.0 && k < 1.0)) throw InvalidArgument("k must lie in (0, 1)");
    if (!(theta >= 0.0 && theta < 1.0)) throw InvalidArgument("theta must lie in [0, 1)");
}

namespace {

// Calls fn(a_rating, b_rating) for every co-rated item; returns the count.
template <typename Fn>
std::size_t for_each_common(std::span<const Entry> a, std::span<const Entry> b, Fn&& fn) {
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->index < ib->index) {
            ++ia;
        } else if (ib->index < ia->index) {
            ++ib;
        } else {
            fn(ia->rating, ib->rating);
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

}  // namespace

double pearson(std::span<const Entry> u_row, std::span<const Entry> v_row) {
    if (u_row.empty() || v_row.empty()) return 0.0;
    const double mu = mean_of(u_row);
    const double mv = mean_of(v_row);

    double num = 0.0;
    double su = 0.0;
    double sv = 0.0;
    double first_u = 0.0;
    double first_v = 0.0;
    bool seen = false;
    bool u_varies = false;
    bool v_varies = false;
    const std::size_t n = for_each_common(u_row, v_row, [&](double ru, double rv) {
        if (!seen) {
            first_u = ru;
            first_v = rv;
            seen = true;
        }
        u_varies = u_varies || ru != first_u;
        v_varies = v_varies || rv != first_v;
        const double du = ru - mu;
        const double dv = rv - mv;
        num += du * dv;
        su += du * du;
        sv += dv * dv;
    });
    if (n < 2 || !u_varies || !v_varies) return 0.0;
    const double den = std::sqrt(su) * std::sqrt(sv);
    if (den == 0.0) return 0.0;
    const double p = num / den;
    return p > 0.0 ? std::min(p, 1.0) : 0.0;
}

double confidence(std::span<const Entry> u_row, std::span<const Entry> v_row) {
    const std::size_t shared = for_each_common(u_row, v_row, [](double, double) {});
    return (static_cast<double>(shared) + 1.0) / (static_cast<double>(u_row.size()) + 2.0);
}

double pearson_sim(const RatingMatrix& train, UserId u, UserId v) {
    const Index ui = train.require_user(u);
    const Index vi = train.require_user(v);
    if (ui == vi) throw InvalidArgument("self-similarity is undefined");
    return pearson(train.user_row(ui), train.user_row(vi));
}

double confidence(const RatingMatrix& train, UserId u, UserId v) {
    const Index ui = train.require_user(u);
    const Index vi = train.require_user(v);
    return confidence(train.user_row(ui), train.user_row(vi));
}

WeightBranch weight_branch(double sim, double conf) noexcept {
    if (sim != 0.0) return conf != 0.0 ? WeightBranch::harmonic : WeightBranch::inconsistent;
    return conf != 0.0 ? WeightBranch::confidence_only : WeightBranch::zero;
}

double combined_weight(double sim, double conf, const SimilarityParams& params) {
    if (!(sim >= 0.0 && sim <= 1.0)) throw InvalidArgument("sim must lie in [0, 1]");
    if (!(conf >= 0.0 && conf <= 1.0)) throw InvalidArgument("conf must lie in [0, 1]");
    switch (weight_branch(sim, conf)) {
        case WeightBranch::harmonic: return 2.0 * sim * conf / (sim + conf);
        case WeightBranch::confidence_only: return params.k * conf;
        case WeightBranch::zero:
        case WeightBranch::inconsistent: return 0.0;
    }
    return 0.0;
}

namespace {

NeighborSet select_from_profile(const RatingMatrix& train, Index target,
                                std::span<const Entry> profile, const SimilarityParams& params) {
    params.validate();
    NeighborSet set;
    set.target = train.user_id(target);
    set.theta_used = params.theta;
    for (Index v = 0; v < train.n_users(); ++v) {
        if (v == target) continue;
        const auto row = train.user_row(v);
        const double sim = pearson(profile, row);
        const double conf = confidence(profile, row);
        const double w = combined_weight(sim, conf, params);
        if (w > params.theta) set.neighbors.push_back({train.user_id(v), sim, conf, w});
    }
    std::sort(set.neighbors.begin(), set.neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return raw(a.user) < raw(b.user);
    });
    return set;
}

}  // namespace

NeighborSet select_important_users(const RatingMatrix& train, UserId u,
                                   const SimilarityParams& params) {
    const Index target = train.require_user(u);
    return select_from_profile(train, target, train.user_row(target), params);
}

NeighborSet select_important_users(const RatingMatrix& train, UserId u,
                                   const SimilarityParams& params,
                                   std::span<const ItemId> masked_items) {
    const Index target = train.require_user(u);
    std::vector<Index> masked;
    for (ItemId item : masked_items) {
        if (auto i = train.item_index(item)) masked.push_back(*i);
    }
    std::sort(masked.begin(), masked.end());
    std::vector<Entry> profile;
    for (const auto& e : train.user_row(target)) {
        if (!std::binary_search(masked.begin(), masked.end(), e.index)) profile.push_back(e);
    }
    return select_from_profile(train, target, profile, params);
}

void write_neighbor_csv(std::ostream& out, const NeighborSet& set) {
    const auto precision = out.precision(17);
    out << "neighbor,sim,conf,weight_w\n";
    for (const auto& n : set.neighbors) {
        out << raw(n.user) << ',' << n.sim << ',' << n.conf << ',' << n.weight << '\n';
    }
    out.precision(precision);
}

}  // namespace iwocf
