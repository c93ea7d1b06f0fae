#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iwocf/iwo.hpp"
#include "iwocf/ratings.hpp"
#include "iwocf/similarity.hpp"

namespace iwocf {

/// Items of the target's train profile held out to score candidate weights.
struct FitnessItemSet {
    UserId target{};
    std::vector<ItemId> items;  ///< ascending
};

/// Fitted importance weights for one target user, aligned with
/// `neighbor_set.neighbors`.
struct UserModel {
    UserId target{};
    NeighborSet neighbor_set;
    std::vector<double> weights;
    double fitness_achieved = 0.0;
    /// No important users were found; every prediction comes from the fallback.
    bool fallback_only = false;
};

struct FittedUser {
    UserModel model;
    FitnessItemSet fitness_set;
    IwoTrace trace;
};

enum class FallbackTier { user_mean, item_mean, global_mean };

std::string_view to_string(FallbackTier tier);

struct FallbackPrediction {
    double value = 0.0;
    FallbackTier tier = FallbackTier::global_mean;
};

/// Weighted mean of the neighbours' ratings of `item`, counting only
/// neighbours who rated it. Empty when nobody rated it or their weights sum
/// to zero. Throws InvalidArgument on a weight/neighbour length mismatch.
std::optional<double> predict_rating(const RatingMatrix& train, const UserModel& model,
                                     ItemId item);

/// User mean, else item mean, else global mean; clamped to the scale.
FallbackPrediction fallback_prediction(const RatingMatrix& train, UserId u, ItemId i);

/// Seeded subset of max(1, floor(n * holdout_fraction)) of u's train items.
/// Requires at least two train ratings so one remains for fitting.
FitnessItemSet build_fitness_set(const RatingMatrix& train, UserId u, double holdout_fraction,
                                 std::uint64_t seed);

/// Mean absolute error over the fitness items. Items the neighbours cannot
/// predict are scored with the target's mean over its non-held-out ratings.
double fitness_mae(const RatingMatrix& train, const NeighborSet& neighbor_set,
                   std::span<const double> weights, const FitnessItemSet& fitness_set);

/// Selects important users on the masked profile, then learns their weights
/// by minimising fitness_mae. The all-ones vector is always part of the
/// initial population.
FittedUser fit_user(const RatingMatrix& train, UserId u, const SimilarityParams& sim_params,
                    const IwoParams& iwo_params, std::uint64_t seed,
                    double holdout_fraction = 0.25);

UserModel fit_user_weights(const RatingMatrix& train, UserId u,
                           const SimilarityParams& sim_params, const IwoParams& iwo_params,
                           std::uint64_t seed, double holdout_fraction = 0.25);

/// Model with the full-train neighbour set and every weight set to 1.
UserModel uniform_model(const RatingMatrix& train, UserId u, const SimilarityParams& sim_params);

/// Per-user seed derived from a global seed, independent of scheduling order.
std::uint64_t user_seed(std::uint64_t global_seed, UserId u);

/// Text record `user, neighbor:weight, ..., fitness`.
std::string format_user_model(const UserModel& model);
UserModel parse_user_model(std::string_view line);

}  // namespace iwocf
