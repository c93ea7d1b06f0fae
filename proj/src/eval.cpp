#include "iwocf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "iwocf/error.hpp"
#include "iwocf/predictor.hpp"

namespace iwocf {

std::string_view to_string(Baseline baseline) {
    switch (baseline) {
        case Baseline::proposed: return "proposed";
        case Baseline::user_mean: return "user-mean";
        case Baseline::pcc_topk_unweighted: return "pcc-topk-unweighted";
    }
    return "proposed";
}

Baseline parse_baseline(std::string_view name) {
    if (name == "proposed") return Baseline::proposed;
    if (name == "user-mean") return Baseline::user_mean;
    if (name == "pcc-topk-unweighted") return Baseline::pcc_topk_unweighted;
    throw InvalidArgument("unknown baseline '" + std::string(name) + "'");
}

double mae(std::span<const PairPrediction> pairs) {
    if (pairs.empty()) throw InvalidArgument("MAE of an empty prediction list");
    double sum = 0.0;
    for (const auto& p : pairs) sum += std::abs(p.predicted - p.truth);
    return sum / static_cast<double>(pairs.size());
}

double rmse(std::span<const PairPrediction> pairs) {
    if (pairs.empty()) throw InvalidArgument("RMSE of an empty prediction list");
    double sum = 0.0;
    for (const auto& p : pairs) {
        const double d = p.predicted - p.truth;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

EvaluationReport make_report(ExperimentConfig config, std::vector<PairPrediction> per_pair) {
    EvaluationReport report;
    report.dataset = config.dataset;
    report.baseline = config.baseline;
    report.mae = mae(per_pair);
    report.rmse = rmse(per_pair);
    // Equal residuals can leave rmse one rounding step below mae.
    if (report.rmse + 1e-12 < report.mae) {
        throw Error("report violates rmse >= mae");
    }
    report.z_predictions = per_pair.size();
    const auto direct = std::count_if(per_pair.begin(), per_pair.end(),
                                      [](const PairPrediction& p) { return !p.used_fallback; });
    report.coverage = static_cast<double>(direct) / static_cast<double>(per_pair.size());
    report.per_pair = std::move(per_pair);
    report.reference_rows = reference_rows(config.format);
    report.config = std::move(config);
    return report;
}

RatingMatrix sample_users(const RatingMatrix& dataset, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("cannot sample zero users");
    if (n > dataset.n_users()) {
        throw InvalidArgument("cannot sample " + std::to_string(n) + " of " +
                              std::to_string(dataset.n_users()) + " users");
    }
    std::vector<Index> users(dataset.n_users());
    std::iota(users.begin(), users.end(), Index{0});
    Rng rng(seed);
    std::shuffle(users.begin(), users.end(), rng);
    users.resize(n);
    std::sort(users.begin(), users.end());

    std::vector<RatingTriple> kept;
    for (Index u : users) {
        for (const auto& e : dataset.user_row(u)) {
            kept.push_back({dataset.user_id(u), dataset.item_id(e.index), e.rating});
        }
    }
    return RatingMatrix::from_triples(kept, dataset.scale());
}

namespace {

struct UserTask {
    UserId user;
    std::vector<std::pair<ItemId, double>> items;  // test items with true rating
};

std::vector<PairPrediction> predict_user(const RatingMatrix& train, const UserTask& task,
                                         const ExperimentConfig& config) {
    std::optional<UserModel> model;
    switch (config.baseline) {
        case Baseline::user_mean: break;
        case Baseline::pcc_topk_unweighted:
            model = uniform_model(train, task.user, config.sim);
            break;
        case Baseline::proposed: {
            const auto u = train.require_user(task.user);
            if (train.user_row(u).size() >= 2) {
                model = fit_user_weights(train, task.user, config.sim, config.iwo,
                                         user_seed(config.global_seed, task.user),
                                         config.fitness_holdout_fraction);
            }
            break;
        }
    }

    std::vector<PairPrediction> out;
    out.reserve(task.items.size());
    for (const auto& [item, truth] : task.items) {
        PairPrediction p{task.user, item, truth, 0.0, false};
        std::optional<double> direct;
        if (model) direct = predict_rating(train, *model, item);
        if (direct) {
            p.predicted = *direct;
        } else {
            const auto fb = fallback_prediction(train, task.user, item);
            p.predicted = fb.value;
            // For the user-mean baseline the user mean is the predictor itself.
            p.used_fallback = config.baseline != Baseline::user_mean ||
                              fb.tier != FallbackTier::user_mean;
        }
        out.push_back(p);
    }
    return out;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n) return;
            try {
                fn(k);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
                return;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

EvaluationReport run_experiment(const RatingMatrix& dataset, const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.sim.validate();
    config.iwo.validate();

    std::optional<RatingMatrix> sampled;
    if (config.sample_users) sampled = sample_users(dataset, *config.sample_users, config.sample_seed);
    const RatingMatrix& data = sampled ? *sampled : dataset;

    const auto split = split_ratings(data, config.split.test_fraction, config.split.seed);
    if (split.test.empty()) throw ValidationError("split produced an empty test set");

    std::vector<UserTask> tasks;
    for (Index u = 0; u < split.test.n_users(); ++u) {
        UserTask task{split.test.user_id(u), {}};
        for (const auto& e : split.test.user_row(u)) {
            task.items.emplace_back(split.test.item_id(e.index), e.rating);
        }
        tasks.push_back(std::move(task));
    }

    std::vector<std::vector<PairPrediction>> results(tasks.size());
    parallel_for(tasks.size(), config.workers, [&](std::size_t k) {
        results[k] = predict_user(split.train, tasks[k], config);
    });

    std::vector<PairPrediction> per_pair;
    for (auto& r : results) per_pair.insert(per_pair.end(), r.begin(), r.end());

    auto report = make_report(config, std::move(per_pair));
    report.source_users = dataset.n_users();
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<ReferenceRow> reference_rows(DatasetFormat format) {
    switch (format) {
        case DatasetFormat::filmtrust:
            return {{"Bobadilla", 0.771, 0.982},
                    {"Yilmaz", 0.685, 0.912},
                    {"TARS", 0.662, 0.872},
                    {"TCFACO", 0.561, 0.764},
                    {"IWO-CF (published)", 0.545, 0.656}};
        case DatasetFormat::epinions:
            return {{"Bobadilla", 0.862, 1.124},
                    {"Yilmaz", 0.852, 1.101},
                    {"TARS", 0.830, 1.092},
                    {"TCFACO", 0.795, 1.043},
                    {"IWO-CF (published)", 0.710, 0.961}};
        case DatasetFormat::generic: return {};
    }
    return {};
}

namespace {

nlohmann::ordered_json config_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["dataset"] = c.dataset;
    j["format"] = std::string(to_string(c.format));
    j["baseline"] = std::string(to_string(c.baseline));
    j["split"] = {{"test_fraction", c.split.test_fraction}, {"seed", c.split.seed}};
    j["similarity"] = {{"k", c.sim.k}, {"theta", c.sim.theta}};
    j["iwo"] = {{"s_min", c.iwo.s_min},
                {"s_max", c.iwo.s_max},
                {"sigma_initial", c.iwo.sigma_initial},
                {"sigma_final", c.iwo.sigma_final},
                {"modulation", c.iwo.modulation},
                {"iterations", c.iwo.max_iterations},
                {"pop_initial", c.iwo.pop_initial},
                {"pop_max", c.iwo.pop_max}};
    j["fitness_holdout_fraction"] = c.fitness_holdout_fraction;
    j["global_seed"] = c.global_seed;
    if (c.sample_users) {
        j["sample_users"] = *c.sample_users;
        j["sample_seed"] = c.sample_seed;
    } else {
        j["sample_users"] = nullptr;
    }
    return j;
}

}  // namespace

// Wall-clock time is deliberately absent so reports for one seed are byte-identical.
void write_report_json(std::ostream& out, const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["dataset"] = report.dataset;
    j["baseline"] = std::string(to_string(report.baseline));
    j["z_predictions"] = report.z_predictions;
    j["mae"] = report.mae;
    j["rmse"] = report.rmse;
    j["coverage"] = report.coverage;
    j["subsampled"] = report.subsampled();
    j["source_users"] = report.source_users;
    j["config_snapshot"] = config_json(report.config);
    auto refs = nlohmann::ordered_json::array();
    for (const auto& r : report.reference_rows) {
        refs.push_back({{"method", r.method},
                        {"mae", r.mae},
                        {"rmse", r.rmse},
                        {"note", "published reference, not reproduced"}});
    }
    j["reference_rows"] = std::move(refs);
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& p : report.per_pair) {
        pairs.push_back({{"user", raw(p.user)},
                         {"item", raw(p.item)},
                         {"true", p.truth},
                         {"predicted", p.predicted},
                         {"used_fallback", p.used_fallback}});
    }
    j["per_pair"] = std::move(pairs);
    out << j.dump(1) << '\n';
}

void write_report_csv(std::ostream& out, const EvaluationReport& report) {
    const auto precision = out.precision(17);
    out << "user,item,true,predicted,used_fallback\n";
    for (const auto& p : report.per_pair) {
        out << raw(p.user) << ',' << raw(p.item) << ',' << p.truth << ',' << p.predicted << ','
            << (p.used_fallback ? 1 : 0) << '\n';
    }
    out.precision(precision);
}

void print_report_table(std::ostream& out, const EvaluationReport& report) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << "dataset   " << report.dataset;
    if (report.subsampled()) {
        out << " (subsample: " << *report.config.sample_users << " of " << report.source_users
            << " users)";
    }
    out << '\n'
        << "baseline  " << to_string(report.baseline) << '\n'
        << "Z         " << report.z_predictions << '\n'
        << std::fixed << std::setprecision(4) << "coverage  " << report.coverage << '\n'
        << "elapsed   " << std::setprecision(1) << report.elapsed_seconds << " s\n\n";
    out << std::left << std::setw(24) << "method" << std::right << std::setw(8) << "MAE"
        << std::setw(8) << "RMSE" << '\n';
    out << std::setprecision(3);
    out << std::left << std::setw(24) << ("this run: " + std::string(to_string(report.baseline)))
        << std::right << std::setw(8) << report.mae << std::setw(8) << report.rmse << '\n';
    for (const auto& r : report.reference_rows) {
        out << std::left << std::setw(24) << r.method << std::right << std::setw(8) << r.mae
            << std::setw(8) << r.rmse << "  (published, not reproduced)\n";
    }
    out.flags(flags);
    out.precision(precision);
}

}  // namespace iwocf
