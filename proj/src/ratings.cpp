#include "iwocf/ratings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>

#include "iwocf/error.hpp"

namespace iwocf {

std::string_view to_string(DatasetFormat format) {
    switch (format) {
        case DatasetFormat::filmtrust: return "filmtrust";
        case DatasetFormat::epinions: return "epinions";
        case DatasetFormat::generic: return "generic";
    }
    return "generic";
}

DatasetFormat parse_dataset_format(std::string_view name) {
    if (name == "filmtrust") return DatasetFormat::filmtrust;
    if (name == "epinions") return DatasetFormat::epinions;
    if (name == "generic" || name == "generic-triples") return DatasetFormat::generic;
    throw InvalidArgument("unknown dataset format '" + std::string(name) + "'");
}

std::optional<RatingScale> declared_scale(DatasetFormat format) {
    switch (format) {
        case DatasetFormat::filmtrust: return RatingScale{0.5, 4.0};
        case DatasetFormat::epinions: return RatingScale{1.0, 5.0};
        case DatasetFormat::generic: return std::nullopt;
    }
    return std::nullopt;
}

namespace {

// Triples tagged with their input position so last-write-wins survives sorting.
std::vector<RatingTriple> deduplicate(std::span<const RatingTriple> triples) {
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = triples[a];
        const auto& y = triples[b];
        if (x.user != y.user) return raw(x.user) < raw(y.user);
        return raw(x.item) < raw(y.item);
    });
    std::vector<RatingTriple> out;
    out.reserve(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& t = triples[order[k]];
        if (!out.empty() && out.back().user == t.user && out.back().item == t.item) {
            out.back() = t;
        } else {
            out.push_back(t);
        }
    }
    return out;
}

}  // namespace

RatingMatrix RatingMatrix::from_triples(std::span<const RatingTriple> triples) {
    if (triples.empty()) throw ValidationError("no ratings");
    auto [lo, hi] = std::minmax_element(triples.begin(), triples.end(),
                                        [](const auto& a, const auto& b) {
                                            return a.rating < b.rating;
                                        });
    return from_triples(triples, RatingScale{lo->rating, hi->rating});
}

RatingMatrix RatingMatrix::from_triples(std::span<const RatingTriple> triples,
                                        RatingScale scale) {
    if (triples.empty()) throw ValidationError("no ratings");
    for (const auto& t : triples) {
        if (!std::isfinite(t.rating) || !scale.contains(t.rating)) {
            throw ValidationError("rating " + std::to_string(t.rating) + " for user " +
                                  std::to_string(raw(t.user)) + ", item " +
                                  std::to_string(raw(t.item)) + " outside scale [" +
                                  std::to_string(scale.min) + ", " +
                                  std::to_string(scale.max) + "]");
        }
    }

    const auto unique = deduplicate(triples);

    RatingMatrix m;
    m.scale_ = scale;
    m.n_ratings_ = unique.size();

    std::vector<std::int64_t> items;
    items.reserve(unique.size());
    for (const auto& t : unique) {
        if (m.user_ids_.empty() || m.user_ids_.back() != t.user) m.user_ids_.push_back(t.user);
        items.push_back(raw(t.item));
    }
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    m.item_ids_.reserve(items.size());
    for (auto id : items) m.item_ids_.push_back(ItemId{id});

    m.user_lookup_.reserve(m.user_ids_.size());
    for (Index u = 0; u < m.user_ids_.size(); ++u) m.user_lookup_.emplace(raw(m.user_ids_[u]), u);
    m.item_lookup_.reserve(m.item_ids_.size());
    for (Index i = 0; i < m.item_ids_.size(); ++i) m.item_lookup_.emplace(raw(m.item_ids_[i]), i);

    m.by_user_.resize(m.user_ids_.size());
    m.by_item_.resize(m.item_ids_.size());
    Index u = 0;
    for (const auto& t : unique) {
        while (m.user_ids_[u] != t.user) ++u;
        const Index i = m.item_lookup_.at(raw(t.item));
        m.by_user_[u].push_back({i, t.rating});
        m.by_item_[i].push_back({u, t.rating});
    }
    return m;
}

std::optional<Index> RatingMatrix::user_index(UserId id) const {
    auto it = user_lookup_.find(raw(id));
    if (it == user_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<Index> RatingMatrix::item_index(ItemId id) const {
    auto it = item_lookup_.find(raw(id));
    if (it == item_lookup_.end()) return std::nullopt;
    return it->second;
}

Index RatingMatrix::require_user(UserId id) const {
    auto u = user_index(id);
    if (!u) throw UnknownIdError("unknown user " + std::to_string(raw(id)));
    return *u;
}

std::optional<double> RatingMatrix::rating_at(Index u, Index i) const {
    const auto& row = by_user_.at(u);
    auto it = std::lower_bound(row.begin(), row.end(), i,
                               [](const Entry& e, Index key) { return e.index < key; });
    if (it == row.end() || it->index != i) return std::nullopt;
    return it->rating;
}

std::optional<double> RatingMatrix::rating(UserId user, ItemId item) const {
    auto u = user_index(user);
    auto i = item_index(item);
    if (!u || !i) return std::nullopt;
    return rating_at(*u, *i);
}

std::vector<RatingTriple> RatingMatrix::triples() const {
    std::vector<RatingTriple> out;
    out.reserve(n_ratings_);
    for (Index u = 0; u < by_user_.size(); ++u) {
        for (const auto& e : by_user_[u]) out.push_back({user_ids_[u], item_ids_[e.index], e.rating});
    }
    return out;
}

double RatingMatrix::global_mean() const {
    if (n_ratings_ == 0) throw ValidationError("empty rating matrix has no mean");
    double sum = 0.0;
    for (const auto& row : by_user_) {
        for (const auto& e : row) sum += e.rating;
    }
    return sum / static_cast<double>(n_ratings_);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    auto is_sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
    while (pos < line.size()) {
        while (pos < line.size() && is_sep(line[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && !is_sep(line[pos])) ++pos;
        if (pos > start) fields.push_back(line.substr(start, pos - start));
    }
    return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

RatingMatrix parse_ratings(std::istream& in, DatasetFormat format) {
    const auto scale = declared_scale(format);
    std::vector<RatingTriple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty() || fields.front().front() == '#') continue;
        if (fields.size() != 3) {
            throw ParseError("expected 'user item rating', got " + std::to_string(fields.size()) +
                                 " fields",
                             line_no);
        }
        std::int64_t user = 0;
        std::int64_t item = 0;
        double rating = 0.0;
        if (!parse_number(fields[0], user)) throw ParseError("bad user id '" + std::string(fields[0]) + "'", line_no);
        if (!parse_number(fields[1], item)) throw ParseError("bad item id '" + std::string(fields[1]) + "'", line_no);
        if (!parse_number(fields[2], rating) || !std::isfinite(rating)) {
            throw ParseError("bad rating '" + std::string(fields[2]) + "'", line_no);
        }
        if (scale && !scale->contains(rating)) {
            throw ValidationError("rating " + std::string(fields[2]) + " outside " +
                                      std::string(to_string(format)) + " scale [" +
                                      std::to_string(scale->min) + ", " +
                                      std::to_string(scale->max) + "]",
                                  line_no);
        }
        triples.push_back({UserId{user}, ItemId{item}, rating});
    }
    if (triples.empty()) throw ValidationError("rating file contains no ratings");
    return scale ? RatingMatrix::from_triples(triples, *scale) : RatingMatrix::from_triples(triples);
}

RatingMatrix parse_ratings_file(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) throw Error("file not found: " + path.string());
    return parse_ratings(in, format);
}

RatingSplit split_ratings(const RatingMatrix& m, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InvalidArgument("test_fraction must lie in (0, 1)");
    }
    auto all = m.triples();
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(all.size())));
    std::unordered_map<std::int64_t, std::size_t> remaining;
    for (const auto& t : all) ++remaining[raw(t.user)];

    std::vector<bool> in_test(all.size(), false);
    std::size_t chosen = 0;
    for (std::size_t k : order) {
        if (chosen == target) break;
        auto& left = remaining[raw(all[k].user)];
        if (left < 2) continue;
        --left;
        in_test[k] = true;
        ++chosen;
    }

    std::vector<RatingTriple> train;
    std::vector<RatingTriple> test;
    train.reserve(all.size() - chosen);
    test.reserve(chosen);
    for (std::size_t k = 0; k < all.size(); ++k) (in_test[k] ? test : train).push_back(all[k]);

    RatingSplit split;
    split.train = RatingMatrix::from_triples(train, m.scale());
    if (!test.empty()) split.test = RatingMatrix::from_triples(test, m.scale());
    split.seed = seed;
    split.test_fraction = test_fraction;
    return split;
}

double mean_of(std::span<const Entry> row) {
    if (row.empty()) throw InvalidArgument("mean of an empty profile");
    double sum = 0.0;
    for (const auto& e : row) sum += e.rating;
    return sum / static_cast<double>(row.size());
}

double user_mean(const RatingMatrix& m, UserId u) {
    return mean_of(m.user_row(m.require_user(u)));
}

std::vector<ItemId> common_items(const RatingMatrix& m, UserId u, UserId v) {
    const auto a = m.user_row(m.require_user(u));
    const auto b = m.user_row(m.require_user(v));
    std::vector<ItemId> out;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->index < ib->index) {
            ++ia;
        } else if (ib->index < ia->index) {
            ++ib;
        } else {
            out.push_back(m.item_id(ia->index));
            ++ia;
            ++ib;
        }
    }
    return out;
}

}  // namespace iwocf
