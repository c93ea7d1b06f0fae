#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "iwocf/ratings.hpp"

namespace iwocf {

struct SimilarityParams {
    double k = 0.2;      ///< scale of the confidence-only branch
    double theta = 0.6;  ///< strict selection threshold on the combined weight

    /// Throws InvalidArgument unless 0 < k < 1 and 0 <= theta < 1.
    void validate() const;
};

struct Neighbor {
    UserId user;
    double sim = 0.0;
    double conf = 0.0;
    double weight = 0.0;  ///< combined weight W(u, v)
};

/// Important users of one target. Ordered by descending weight, then
/// ascending user id; every entry has weight > theta_used.
struct NeighborSet {
    UserId target{};
    std::vector<Neighbor> neighbors;
    double theta_used = 0.0;

    std::size_t size() const noexcept { return neighbors.size(); }
    bool empty() const noexcept { return neighbors.empty(); }
};

/// Pearson correlation of two profiles over their co-rated items, centred on
/// each profile's full mean and clamped below at 0. Returns 0 when fewer than
/// two items are shared or either side is constant on the shared items.
double pearson(std::span<const Entry> u_row, std::span<const Entry> v_row);

/// (|shared items| + 1) / (|u_row| + 2).
double confidence(std::span<const Entry> u_row, std::span<const Entry> v_row);

double pearson_sim(const RatingMatrix& train, UserId u, UserId v);

/// Confidence of v as a neighbour of u; asymmetric in general.
double confidence(const RatingMatrix& train, UserId u, UserId v);

enum class WeightBranch {
    harmonic,         ///< sim != 0 and conf != 0
    confidence_only,  ///< sim == 0 and conf != 0
    zero,             ///< sim == 0 and conf == 0
    inconsistent,     ///< sim != 0 and conf == 0; unreachable with `confidence`
};

WeightBranch weight_branch(double sim, double conf) noexcept;

/// Fuses similarity and confidence. Both inputs must lie in [0, 1].
double combined_weight(double sim, double conf, const SimilarityParams& params);

NeighborSet select_important_users(const RatingMatrix& train, UserId u,
                                   const SimilarityParams& params);

/// Variant that hides `masked_items` from the target's own profile. Used while
/// fitting weights so the held-out items never inform neighbour selection.
NeighborSet select_important_users(const RatingMatrix& train, UserId u,
                                   const SimilarityParams& params,
                                   std::span<const ItemId> masked_items);

/// CSV `neighbor,sim,conf,weight_w`.
void write_neighbor_csv(std::ostream& out, const NeighborSet& set);

}  // namespace iwocf
