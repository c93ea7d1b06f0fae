#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iwocf {

/// Opaque external identifiers as they appear in rating files.
enum class UserId : std::int64_t {};
enum class ItemId : std::int64_t {};

constexpr std::int64_t raw(UserId id) noexcept { return static_cast<std::int64_t>(id); }
constexpr std::int64_t raw(ItemId id) noexcept { return static_cast<std::int64_t>(id); }

/// Dense 0-based index into a particular RatingMatrix. Indices follow
/// ascending external-id order, so comparing indices compares ids.
using Index = std::uint32_t;

struct RatingScale {
    double min = 0.0;
    double max = 0.0;

    bool contains(double r) const noexcept { return r >= min && r <= max; }
    double clamp(double r) const noexcept { return r < min ? min : (r > max ? max : r); }
};

enum class DatasetFormat { filmtrust, epinions, generic };

std::string_view to_string(DatasetFormat format);
DatasetFormat parse_dataset_format(std::string_view name);

/// Declared scale for a format; empty for `generic`, whose scale is inferred.
std::optional<RatingScale> declared_scale(DatasetFormat format);

struct RatingTriple {
    UserId user;
    ItemId item;
    double rating;
};

/// One stored rating, keyed by the dense index of the other axis.
struct Entry {
    Index index;
    double rating;
};

/// Immutable sparse user x item rating store with a transposed item index.
///
/// Rows and columns are sorted by dense index. The matrix is read-only after
/// construction and may be shared across threads.
class RatingMatrix {
public:
    RatingMatrix() = default;

    /// Builds a matrix from triples. Duplicate (user, item) pairs keep the
    /// last occurrence. Throws ValidationError if any rating lies outside
    /// `scale` or if `triples` is empty.
    static RatingMatrix from_triples(std::span<const RatingTriple> triples, RatingScale scale);

    /// Same as above with the scale inferred as [min rating, max rating].
    static RatingMatrix from_triples(std::span<const RatingTriple> triples);

    std::size_t n_users() const noexcept { return user_ids_.size(); }
    std::size_t n_items() const noexcept { return item_ids_.size(); }
    std::size_t n_ratings() const noexcept { return n_ratings_; }
    const RatingScale& scale() const noexcept { return scale_; }
    bool empty() const noexcept { return n_ratings_ == 0; }

    std::optional<Index> user_index(UserId id) const;
    std::optional<Index> item_index(ItemId id) const;
    bool has_user(UserId id) const { return user_index(id).has_value(); }
    bool has_item(ItemId id) const { return item_index(id).has_value(); }

    /// Like user_index but throws UnknownIdError.
    Index require_user(UserId id) const;

    UserId user_id(Index u) const { return user_ids_.at(u); }
    ItemId item_id(Index i) const { return item_ids_.at(i); }
    std::span<const UserId> user_ids() const noexcept { return user_ids_; }
    std::span<const ItemId> item_ids() const noexcept { return item_ids_; }

    /// Ratings of user `u`, keyed by item index.
    std::span<const Entry> user_row(Index u) const { return by_user_.at(u); }
    /// Raters of item `i`, keyed by user index.
    std::span<const Entry> item_column(Index i) const { return by_item_.at(i); }

    std::optional<double> rating(UserId user, ItemId item) const;
    std::optional<double> rating_at(Index u, Index i) const;

    /// All ratings, sorted by (user id, item id).
    std::vector<RatingTriple> triples() const;

    double global_mean() const;

private:
    std::vector<UserId> user_ids_;
    std::vector<ItemId> item_ids_;
    std::unordered_map<std::int64_t, Index> user_lookup_;
    std::unordered_map<std::int64_t, Index> item_lookup_;
    std::vector<std::vector<Entry>> by_user_;
    std::vector<std::vector<Entry>> by_item_;
    std::size_t n_ratings_ = 0;
    RatingScale scale_;
};

/// Reads `user item rating` lines separated by whitespace or commas. Blank
/// lines and lines starting with `#` are skipped.
RatingMatrix parse_ratings(std::istream& in, DatasetFormat format);
RatingMatrix parse_ratings_file(const std::filesystem::path& path, DatasetFormat format);

struct RatingSplit {
    RatingMatrix train;
    RatingMatrix test;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
};

/// Seeded holdout of round(test_fraction * n_ratings) ratings. A rating only
/// moves to test while its user keeps at least one train rating, so every
/// test user also exists in train.
RatingSplit split_ratings(const RatingMatrix& m, double test_fraction, std::uint64_t seed);

double user_mean(const RatingMatrix& m, UserId u);
double mean_of(std::span<const Entry> row);

/// Items rated by both users, ascending.
std::vector<ItemId> common_items(const RatingMatrix& m, UserId u, UserId v);

}  // namespace iwocf
