#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace iwocf {

/// Invasive weed optimisation constants. Defaults are the published tuning.
struct IwoParams {
    int s_min = 0;
    int s_max = 7;
    double sigma_initial = 1.0;
    double sigma_final = 0.001;
    double modulation = 5.0;  ///< nonlinear modulation index of the sigma schedule
    int max_iterations = 300;
    int pop_initial = 10;
    int pop_max = 200;

    void validate() const;
};

/// A candidate solution in [0,1]^dim. Lower fitness is better.
struct Weed {
    std::vector<double> position;
    double fitness = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t id = 0;  ///< creation order, used to break fitness ties
};

struct IwoTraceRecord {
    int t = 0;
    double best = 0.0;
    double worst = 0.0;
    std::size_t population = 0;
    double sigma = 0.0;
};

using IwoTrace = std::vector<IwoTraceRecord>;
using Objective = std::function<double(std::span<const double>)>;
using Rng = std::mt19937_64;

struct IwoResult {
    Weed best;
    IwoTrace trace;
    std::uint64_t evaluations = 0;
};

/// Number of seeds a weed of fitness `f` spawns:
/// floor(s_min + (s_max - s_min) * (f_worst - f) / (f_worst - f_best)).
/// A flat population (f_best == f_worst) gives every weed s_max.
int seed_count(double f, double f_best, double f_worst, const IwoParams& params);

/// ((T - t) / T)^n * (sigma_initial - sigma_final) + sigma_final
double sigma_at(int t, const IwoParams& params);

/// Child of `parent` displaced by N(0, sigma^2) per coordinate and clamped to
/// [0, 1]. Fitness is left unset.
Weed disperse(const Weed& parent, double sigma, Rng& rng);

/// Keeps the pop_max fittest weeds (ties by ascending id) when the population
/// exceeds pop_max; otherwise returns it unchanged.
std::vector<Weed> truncate(std::vector<Weed> population, const IwoParams& params);

/// Runs the full weed colonisation loop for max_iterations generations.
///
/// The initial population is `initial_positions` (each clamped to the box)
/// topped up with uniform-random weeds to pop_initial. Draws come from one
/// mt19937_64 seeded with `seed`: first the random initial coordinates, then
/// per generation the dispersal noise of each parent in population order.
/// Throws Error if the objective returns a non-finite value.
IwoResult optimize(const Objective& objective, std::size_t dim, const IwoParams& params,
                   std::uint64_t seed,
                   std::span<const std::vector<double>> initial_positions = {});

/// CSV `t,best,worst,pop,sigma`.
void write_trace_csv(std::ostream& out, const IwoTrace& trace);

}  // namespace iwocf
