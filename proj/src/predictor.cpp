#include "iwocf/predictor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "iwocf/error.hpp"

namespace iwocf {

std::string_view to_string(FallbackTier tier) {
    switch (tier) {
        case FallbackTier::user_mean: return "user-mean";
        case FallbackTier::item_mean: return "item-mean";
        case FallbackTier::global_mean: return "global-mean";
    }
    return "global-mean";
}

namespace {

void check_aligned(const NeighborSet& set, std::span<const double> weights) {
    if (weights.size() != set.neighbors.size()) {
        throw InvalidArgument("weight vector has " + std::to_string(weights.size()) +
                              " entries for " + std::to_string(set.neighbors.size()) +
                              " neighbours");
    }
}

std::optional<double> weighted_rating(const RatingMatrix& train, const NeighborSet& set,
                                      std::span<const double> weights, ItemId item) {
    const auto i = train.item_index(item);
    if (!i) return std::nullopt;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < set.neighbors.size(); ++j) {
        const auto v = train.user_index(set.neighbors[j].user);
        if (!v) continue;
        if (auto r = train.rating_at(*v, *i)) {
            num += weights[j] * *r;
            den += weights[j];
        }
    }
    if (!(den > 0.0)) return std::nullopt;
    return train.scale().clamp(num / den);
}

// Fitness items with their neighbour raters resolved once, so each objective
// call is a tight loop over (neighbour position, rating) pairs.
class FitnessProblem {
public:
    FitnessProblem(const RatingMatrix& train, const NeighborSet& set,
                   const FitnessItemSet& fitness_set) {
        if (fitness_set.items.empty()) throw InvalidArgument("empty fitness item set");
        const Index target = train.require_user(fitness_set.target);
        const auto row = train.user_row(target);

        double kept_sum = 0.0;
        std::size_t kept = 0;
        std::vector<Index> held;
        for (ItemId item : fitness_set.items) {
            auto i = train.item_index(item);
            if (!i || !train.rating_at(target, *i)) {
                throw InvalidArgument("fitness item " + std::to_string(raw(item)) +
                                      " is not rated by the target in train");
            }
            held.push_back(*i);
        }
        std::sort(held.begin(), held.end());
        for (const auto& e : row) {
            if (!std::binary_search(held.begin(), held.end(), e.index)) {
                kept_sum += e.rating;
                ++kept;
            }
        }
        const double fallback = kept > 0 ? train.scale().clamp(kept_sum / static_cast<double>(kept))
                                         : train.scale().clamp(train.global_mean());

        std::vector<std::optional<Index>> neighbour_rows;
        for (const auto& n : set.neighbors) neighbour_rows.push_back(train.user_index(n.user));

        for (Index i : held) {
            Term term;
            term.truth = *train.rating_at(target, i);
            term.fallback = fallback;
            for (std::size_t j = 0; j < neighbour_rows.size(); ++j) {
                if (!neighbour_rows[j]) continue;
                if (auto r = train.rating_at(*neighbour_rows[j], i)) term.raters.push_back({j, *r});
            }
            terms_.push_back(std::move(term));
        }
        scale_ = train.scale();
    }

    double operator()(std::span<const double> weights) const {
        double total = 0.0;
        for (const auto& term : terms_) {
            double num = 0.0;
            double den = 0.0;
            for (const auto& [j, r] : term.raters) {
                num += weights[j] * r;
                den += weights[j];
            }
            const double predicted = den > 0.0 ? scale_.clamp(num / den) : term.fallback;
            total += std::abs(predicted - term.truth);
        }
        return total / static_cast<double>(terms_.size());
    }

private:
    struct Term {
        double truth = 0.0;
        double fallback = 0.0;
        std::vector<std::pair<std::size_t, double>> raters;
    };

    std::vector<Term> terms_;
    RatingScale scale_;
};

}  // namespace

std::optional<double> predict_rating(const RatingMatrix& train, const UserModel& model,
                                     ItemId item) {
    check_aligned(model.neighbor_set, model.weights);
    if (model.fallback_only) return std::nullopt;
    return weighted_rating(train, model.neighbor_set, model.weights, item);
}

FallbackPrediction fallback_prediction(const RatingMatrix& train, UserId u, ItemId i) {
    if (train.empty()) throw ValidationError("cannot fall back on an empty train matrix");
    if (auto ui = train.user_index(u); ui && !train.user_row(*ui).empty()) {
        return {train.scale().clamp(mean_of(train.user_row(*ui))), FallbackTier::user_mean};
    }
    if (auto ii = train.item_index(i); ii && !train.item_column(*ii).empty()) {
        return {train.scale().clamp(mean_of(train.item_column(*ii))), FallbackTier::item_mean};
    }
    return {train.scale().clamp(train.global_mean()), FallbackTier::global_mean};
}

FitnessItemSet build_fitness_set(const RatingMatrix& train, UserId u, double holdout_fraction,
                                 std::uint64_t seed) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw InvalidArgument("holdout_fraction must lie in (0, 1)");
    }
    const auto row = train.user_row(train.require_user(u));
    if (row.size() < 2) {
        throw InvalidArgument("user " + std::to_string(raw(u)) +
                              " needs at least two train ratings to fit weights");
    }
    const auto n = row.size();
    const auto wanted = static_cast<std::size_t>(std::floor(static_cast<double>(n) * holdout_fraction));
    const std::size_t count = std::clamp<std::size_t>(wanted, 1, n - 1);

    std::vector<ItemId> items;
    items.reserve(n);
    for (const auto& e : row) items.push_back(train.item_id(e.index));
    Rng rng(seed);
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(count);
    std::sort(items.begin(), items.end(), [](ItemId a, ItemId b) { return raw(a) < raw(b); });
    return {u, std::move(items)};
}

double fitness_mae(const RatingMatrix& train, const NeighborSet& neighbor_set,
                   std::span<const double> weights, const FitnessItemSet& fitness_set) {
    check_aligned(neighbor_set, weights);
    return FitnessProblem(train, neighbor_set, fitness_set)(weights);
}

std::uint64_t user_seed(std::uint64_t global_seed, UserId u) {
    const auto id = static_cast<std::uint64_t>(raw(u));
    std::seed_seq seq{static_cast<std::uint32_t>(global_seed),
                      static_cast<std::uint32_t>(global_seed >> 32),
                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

FittedUser fit_user(const RatingMatrix& train, UserId u, const SimilarityParams& sim_params,
                    const IwoParams& iwo_params, std::uint64_t seed, double holdout_fraction) {
    sim_params.validate();
    iwo_params.validate();

    FittedUser fitted;
    fitted.fitness_set = build_fitness_set(train, u, holdout_fraction, seed);
    auto& model = fitted.model;
    model.target = u;
    model.neighbor_set = select_important_users(train, u, sim_params, fitted.fitness_set.items);

    const FitnessProblem problem(train, model.neighbor_set, fitted.fitness_set);
    if (model.neighbor_set.empty()) {
        model.fallback_only = true;
        model.fitness_achieved = problem(std::span<const double>{});
        return fitted;
    }

    const std::size_t dim = model.neighbor_set.size();
    const std::vector<std::vector<double>> start{std::vector<double>(dim, 1.0)};
    auto result = optimize([&](std::span<const double> w) { return problem(w); }, dim, iwo_params,
                           seed ^ 0x9e3779b97f4a7c15ULL, start);
    model.weights = std::move(result.best.position);
    model.fitness_achieved = result.best.fitness;
    fitted.trace = std::move(result.trace);
    return fitted;
}

UserModel fit_user_weights(const RatingMatrix& train, UserId u,
                           const SimilarityParams& sim_params, const IwoParams& iwo_params,
                           std::uint64_t seed, double holdout_fraction) {
    return fit_user(train, u, sim_params, iwo_params, seed, holdout_fraction).model;
}

UserModel uniform_model(const RatingMatrix& train, UserId u, const SimilarityParams& sim_params) {
    UserModel model;
    model.target = u;
    model.neighbor_set = select_important_users(train, u, sim_params);
    model.weights.assign(model.neighbor_set.size(), 1.0);
    model.fallback_only = model.neighbor_set.empty();
    return model;
}

namespace {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::int64_t parse_id(std::string_view text) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("bad id '" + std::string(text) + "' in model record", 0);
    }
    return value;
}

double parse_real(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("bad number '" + std::string(text) + "' in model record", 0);
    }
    return value;
}

}  // namespace

std::string format_user_model(const UserModel& model) {
    check_aligned(model.neighbor_set, model.weights);
    std::string out = std::to_string(raw(model.target));
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
        out += ", " + std::to_string(raw(model.neighbor_set.neighbors[j].user)) + ':' +
               format_double(model.weights[j]);
    }
    out += ", " + format_double(model.fitness_achieved);
    return out;
}

UserModel parse_user_model(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        fields.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (fields.size() < 2) throw ParseError("model record needs a user and a fitness", 0);

    UserModel model;
    model.target = UserId{parse_id(fields.front())};
    model.neighbor_set.target = model.target;
    model.fitness_achieved = parse_real(fields.back());
    for (std::size_t k = 1; k + 1 < fields.size(); ++k) {
        const auto colon = fields[k].find(':');
        if (colon == std::string_view::npos) throw ParseError("expected neighbor:weight", 0);
        const double w = parse_real(trim(fields[k].substr(colon + 1)));
        if (!(w >= 0.0 && w <= 1.0)) throw ParseError("weight outside [0, 1]", 0);
        model.neighbor_set.neighbors.push_back({UserId{parse_id(trim(fields[k].substr(0, colon)))}});
        model.weights.push_back(w);
    }
    model.fallback_only = model.weights.empty();
    return model;
}

}  // namespace iwocf
