#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iwocf/iwo.hpp"
#include "iwocf/ratings.hpp"
#include "iwocf/similarity.hpp"

namespace iwocf {

enum class Baseline { proposed, user_mean, pcc_topk_unweighted };

std::string_view to_string(Baseline baseline);
Baseline parse_baseline(std::string_view name);

struct SplitConfig {
    double test_fraction = 0.2;
    std::uint64_t seed = 42;
};

struct ExperimentConfig {
    std::string dataset = "unnamed";
    DatasetFormat format = DatasetFormat::generic;
    SimilarityParams sim;
    IwoParams iwo;
    SplitConfig split;
    Baseline baseline = Baseline::proposed;
    double fitness_holdout_fraction = 0.25;
    std::uint64_t global_seed = 1;
    unsigned workers = 0;  ///< 0 means hardware concurrency
    std::optional<std::size_t> sample_users;
    std::uint64_t sample_seed = 7;
};

struct PairPrediction {
    UserId user{};
    ItemId item{};
    double truth = 0.0;
    double predicted = 0.0;
    bool used_fallback = false;
};

/// Published comparison figure, carried for context only.
struct ReferenceRow {
    std::string method;
    double mae = 0.0;
    double rmse = 0.0;
};

struct EvaluationReport {
    std::string dataset;
    Baseline baseline = Baseline::proposed;
    std::size_t z_predictions = 0;
    double mae = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;  ///< fraction of pairs predicted without fallback
    std::vector<PairPrediction> per_pair;
    ExperimentConfig config;
    std::size_t source_users = 0;  ///< users in the dataset before subsampling
    double elapsed_seconds = 0.0;
    std::vector<ReferenceRow> reference_rows;

    bool subsampled() const noexcept { return config.sample_users.has_value(); }
};

/// Assembles the aggregates from `per_pair`. Throws Error if the power-mean
/// inequality rmse >= mae fails beyond rounding.
EvaluationReport make_report(ExperimentConfig config, std::vector<PairPrediction> per_pair);

double mae(std::span<const PairPrediction> pairs);
double rmse(std::span<const PairPrediction> pairs);

/// Seeded subset of `n` users with all of their ratings.
RatingMatrix sample_users(const RatingMatrix& dataset, std::size_t n, std::uint64_t seed);

/// Splits `dataset` (after optional subsampling), predicts every test pair with
/// the configured baseline and scores the predictions. Per-user fitting is
/// spread over `config.workers` threads; output never depends on the count.
EvaluationReport run_experiment(const RatingMatrix& dataset, const ExperimentConfig& config);

/// Published figures for the given dataset format; empty for generic data.
std::vector<ReferenceRow> reference_rows(DatasetFormat format);

void write_report_json(std::ostream& out, const EvaluationReport& report);
void write_report_csv(std::ostream& out, const EvaluationReport& report);
void print_report_table(std::ostream& out, const EvaluationReport& report);

}  // namespace iwocf
