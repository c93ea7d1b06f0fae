#include "iwocf/iwo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "iwocf/error.hpp"

namespace iwocf {

void IwoParams::validate() const {
    if (s_min < 0 || s_min > s_max) throw InvalidArgument("need 0 <= s_min <= s_max");
    if (!(sigma_final > 0.0) || sigma_final > sigma_initial) {
        throw InvalidArgument("need 0 < sigma_final <= sigma_initial");
    }
    if (!(modulation >= 0.0)) throw InvalidArgument("modulation index must be non-negative");
    if (max_iterations < 1) throw InvalidArgument("need at least one iteration");
    if (pop_initial < 1 || pop_initial > pop_max) {
        throw InvalidArgument("need 1 <= pop_initial <= pop_max");
    }
}

int seed_count(double f, double f_best, double f_worst, const IwoParams& params) {
    if (!(f >= f_best && f <= f_worst)) {
        throw InvalidArgument("fitness outside the population's [best, worst] range");
    }
    const double rho = f_worst == f_best ? 1.0 : (f_worst - f) / (f_worst - f_best);
    const double span = static_cast<double>(params.s_max - params.s_min);
    return params.s_min + static_cast<int>(std::floor(span * rho));
}

double sigma_at(int t, const IwoParams& params) {
    const double T = params.max_iterations;
    const double frac = (T - static_cast<double>(t)) / T;
    return std::pow(frac, params.modulation) * (params.sigma_initial - params.sigma_final) +
           params.sigma_final;
}

Weed disperse(const Weed& parent, double sigma, Rng& rng) {
    if (!(sigma > 0.0)) throw InvalidArgument("dispersal sigma must be positive");
    std::normal_distribution<double> noise(0.0, sigma);
    Weed child;
    child.position.resize(parent.position.size());
    for (std::size_t d = 0; d < parent.position.size(); ++d) {
        child.position[d] = std::clamp(parent.position[d] + noise(rng), 0.0, 1.0);
    }
    return child;
}

namespace {

bool fitter(const Weed& a, const Weed& b) {
    if (a.fitness != b.fitness) return a.fitness < b.fitness;
    return a.id < b.id;
}

}  // namespace

std::vector<Weed> truncate(std::vector<Weed> population, const IwoParams& params) {
    const auto cap = static_cast<std::size_t>(params.pop_max);
    if (population.size() <= cap) return population;
    std::sort(population.begin(), population.end(), fitter);
    population.resize(cap);
    return population;
}

namespace {

class Evaluator {
public:
    explicit Evaluator(const Objective& objective) : objective_(objective) {}

    void operator()(Weed& weed) {
        const double f = objective_(weed.position);
        ++count_;
        if (!std::isfinite(f)) {
            std::ostringstream msg;
            msg << "objective returned " << f << " at position [";
            for (std::size_t d = 0; d < weed.position.size(); ++d) {
                msg << (d ? ", " : "") << weed.position[d];
            }
            msg << ']';
            throw Error(msg.str());
        }
        weed.fitness = f;
    }

    std::uint64_t count() const noexcept { return count_; }

private:
    const Objective& objective_;
    std::uint64_t count_ = 0;
};

}  // namespace

IwoResult optimize(const Objective& objective, std::size_t dim, const IwoParams& params,
                   std::uint64_t seed, std::span<const std::vector<double>> initial_positions) {
    params.validate();
    if (dim == 0) throw InvalidArgument("dimension must be at least 1");
    if (initial_positions.size() > static_cast<std::size_t>(params.pop_initial)) {
        throw InvalidArgument("more initial positions than pop_initial");
    }

    Rng rng(seed);
    Evaluator evaluate(objective);
    std::uint64_t next_id = 0;

    std::vector<Weed> population;
    population.reserve(static_cast<std::size_t>(params.pop_max) * (params.s_max + 1));
    for (const auto& start : initial_positions) {
        if (start.size() != dim) throw InvalidArgument("initial position has wrong dimension");
        Weed w;
        w.position = start;
        for (double& x : w.position) x = std::clamp(x, 0.0, 1.0);
        population.push_back(std::move(w));
    }
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    while (population.size() < static_cast<std::size_t>(params.pop_initial)) {
        Weed w;
        w.position.resize(dim);
        for (double& x : w.position) x = uniform(rng);
        population.push_back(std::move(w));
    }
    for (auto& w : population) {
        w.id = next_id++;
        evaluate(w);
    }

    IwoResult result;
    result.trace.reserve(static_cast<std::size_t>(params.max_iterations));
    for (int t = 1; t <= params.max_iterations; ++t) {
        const auto [lo, hi] = std::minmax_element(
            population.begin(), population.end(),
            [](const Weed& a, const Weed& b) { return a.fitness < b.fitness; });
        const double f_best = lo->fitness;
        const double f_worst = hi->fitness;
        const double sigma = sigma_at(t, params);

        const std::size_t parents = population.size();
        for (std::size_t p = 0; p < parents; ++p) {
            const int seeds = seed_count(population[p].fitness, f_best, f_worst, params);
            for (int s = 0; s < seeds; ++s) {
                Weed child = disperse(population[p], sigma, rng);
                child.id = next_id++;
                evaluate(child);
                population.push_back(std::move(child));
            }
        }
        population = truncate(std::move(population), params);

        const auto [best, worst] = std::minmax_element(
            population.begin(), population.end(),
            [](const Weed& a, const Weed& b) { return a.fitness < b.fitness; });
        result.trace.push_back({t, best->fitness, worst->fitness, population.size(), sigma});
    }

    result.best = *std::min_element(population.begin(), population.end(), fitter);
    result.evaluations = evaluate.count();
    return result;
}

void write_trace_csv(std::ostream& out, const IwoTrace& trace) {
    const auto precision = out.precision(17);
    out << "t,best,worst,pop,sigma\n";
    for (const auto& r : trace) {
        out << r.t << ',' << r.best << ',' << r.worst << ',' << r.population << ',' << r.sigma
            << '\n';
    }
    out.precision(precision);
}

}  // namespace iwocf
