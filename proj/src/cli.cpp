#include "iwocf/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <variant>

#include <CLI11.hpp>

#include "iwocf/error.hpp"
#include "iwocf/predictor.hpp"

namespace iwocf::cli {

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "dataset",        "format",        "dataset-name",  "split-fraction", "split-seed",
        "k",              "theta",         "s-min",         "s-max",          "sigma-initial",
        "sigma-final",    "modulation",    "iterations",    "pop-initial",    "pop-max",
        "fitness-holdout", "sample-users", "sample-seed",   "baseline",       "output-dir",
        "model-cache",    "global-seed",   "workers"};
    return keys;
}

KeyValues default_key_values() {
    auto values = to_key_values(RunConfig{});
    values["dataset-name"] = "";  // derived from the dataset file name
    return values;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error("invalid value '" + text + "' for '" + key + "'");
    }
    return value;
}

bool is_known_key(const std::string& key) {
    const auto& keys = config_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

}  // namespace

KeyValues parse_config_text(std::istream& in) {
    KeyValues values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        const auto key = trim(line.substr(0, eq));
        if (!is_known_key(key)) throw ParseError("unknown config key '" + key + "'", line_no);
        values[key] = trim(line.substr(eq + 1));
    }
    return values;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("config file not found: " + path.string());
    return parse_config_text(in);
}

KeyValues merge(KeyValues base, const KeyValues& overrides) {
    for (const auto& [k, v] : overrides) base[k] = v;
    return base;
}

RunConfig to_run_config(const KeyValues& values) {
    RunConfig c;
    auto& e = c.experiment;
    for (const auto& [key, v] : values) {
        if (key == "dataset") c.dataset_path = v;
        else if (key == "format") e.format = parse_dataset_format(v);
        else if (key == "dataset-name") e.dataset = v;
        else if (key == "split-fraction") e.split.test_fraction = parse_value<double>(key, v);
        else if (key == "split-seed") e.split.seed = parse_value<std::uint64_t>(key, v);
        else if (key == "k") e.sim.k = parse_value<double>(key, v);
        else if (key == "theta") e.sim.theta = parse_value<double>(key, v);
        else if (key == "s-min") e.iwo.s_min = parse_value<int>(key, v);
        else if (key == "s-max") e.iwo.s_max = parse_value<int>(key, v);
        else if (key == "sigma-initial") e.iwo.sigma_initial = parse_value<double>(key, v);
        else if (key == "sigma-final") e.iwo.sigma_final = parse_value<double>(key, v);
        else if (key == "modulation") e.iwo.modulation = parse_value<double>(key, v);
        else if (key == "iterations") e.iwo.max_iterations = parse_value<int>(key, v);
        else if (key == "pop-initial") e.iwo.pop_initial = parse_value<int>(key, v);
        else if (key == "pop-max") e.iwo.pop_max = parse_value<int>(key, v);
        else if (key == "fitness-holdout") e.fitness_holdout_fraction = parse_value<double>(key, v);
        else if (key == "sample-users") {
            if (v.empty() || v == "none") e.sample_users.reset();
            else e.sample_users = parse_value<std::size_t>(key, v);
        }
        else if (key == "sample-seed") e.sample_seed = parse_value<std::uint64_t>(key, v);
        else if (key == "baseline") {
            if (v != "all") parse_baseline(v);
            c.baseline = v;
        }
        else if (key == "output-dir") c.output_dir = v;
        else if (key == "model-cache") c.model_cache = v;
        else if (key == "global-seed") e.global_seed = parse_value<std::uint64_t>(key, v);
        else if (key == "workers") e.workers = parse_value<unsigned>(key, v);
        else throw Error("unknown config key '" + key + "'");
    }
    if (e.dataset.empty()) {
        e.dataset = c.dataset_path.empty() ? "unnamed"
                                           : std::filesystem::path(c.dataset_path).stem().string();
    }
    if (c.baseline != "all") e.baseline = parse_baseline(c.baseline);
    return c;
}

KeyValues to_key_values(const RunConfig& c) {
    const auto& e = c.experiment;
    return {
        {"dataset", c.dataset_path},
        {"format", std::string(to_string(e.format))},
        {"dataset-name", e.dataset},
        {"split-fraction", format_double(e.split.test_fraction)},
        {"split-seed", std::to_string(e.split.seed)},
        {"k", format_double(e.sim.k)},
        {"theta", format_double(e.sim.theta)},
        {"s-min", std::to_string(e.iwo.s_min)},
        {"s-max", std::to_string(e.iwo.s_max)},
        {"sigma-initial", format_double(e.iwo.sigma_initial)},
        {"sigma-final", format_double(e.iwo.sigma_final)},
        {"modulation", format_double(e.iwo.modulation)},
        {"iterations", std::to_string(e.iwo.max_iterations)},
        {"pop-initial", std::to_string(e.iwo.pop_initial)},
        {"pop-max", std::to_string(e.iwo.pop_max)},
        {"fitness-holdout", format_double(e.fitness_holdout_fraction)},
        {"sample-users", e.sample_users ? std::to_string(*e.sample_users) : "none"},
        {"sample-seed", std::to_string(e.sample_seed)},
        {"baseline", c.baseline},
        {"output-dir", c.output_dir},
        {"model-cache", c.model_cache},
        {"global-seed", std::to_string(e.global_seed)},
        {"workers", std::to_string(e.workers)},
    };
}

void write_config(std::ostream& out, const RunConfig& config) {
    const auto values = to_key_values(config);
    for (const auto& key : config_keys()) out << key << " = " << values.at(key) << '\n';
}

namespace {

// Loads the dataset, reporting failures on `err`. Returns the exit code on failure.
std::variant<RatingMatrix, int> load(const RunConfig& config, std::ostream& err) {
    if (config.dataset_path.empty()) {
        err << "error: no dataset given (--dataset)\n";
        return exit_config;
    }
    if (!std::filesystem::exists(config.dataset_path)) {
        err << "error: file not found: " << config.dataset_path << '\n';
        return exit_config;
    }
    try {
        return parse_ratings_file(config.dataset_path, config.experiment.format);
    } catch (const Error& e) {
        err << "error: " << config.dataset_path << ": " << e.what() << '\n';
        return exit_config;
    }
}

std::optional<UserModel> find_cached(const std::string& path, UserId user) {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path);
    std::string line;
    std::optional<UserModel> found;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        auto model = parse_user_model(line);
        if (model.target == user) found = std::move(model);
    }
    return found;
}

}  // namespace

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        config.experiment.sim.validate();
        config.experiment.iwo.validate();
        const auto& e = config.experiment;
        if (!(e.split.test_fraction > 0.0 && e.split.test_fraction < 1.0)) {
            throw InvalidArgument("split-fraction must lie in (0, 1)");
        }
        if (!(e.fitness_holdout_fraction > 0.0 && e.fitness_holdout_fraction < 1.0)) {
            throw InvalidArgument("fitness-holdout must lie in (0, 1)");
        }
    } catch (const Error& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return exit_config;
    }
    auto loaded = load(config, err);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& m = std::get<RatingMatrix>(loaded);
    if (auto n = config.experiment.sample_users; n && (*n == 0 || *n > m.n_users())) {
        err << "error: sample-users " << *n << " not in [1, " << m.n_users() << "]\n";
        return exit_config;
    }
    out << m.n_users() << " users, " << m.n_items() << " items, " << m.n_ratings()
        << " ratings, scale [" << m.scale().min << ", " << m.scale().max << "]\n";
    return exit_ok;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    auto loaded = load(config, err);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& m = std::get<RatingMatrix>(loaded);

    std::vector<Baseline> baselines;
    if (config.baseline == "all") {
        baselines = {Baseline::proposed, Baseline::pcc_topk_unweighted, Baseline::user_mean};
    } else {
        baselines = {config.experiment.baseline};
    }

    try {
        std::filesystem::create_directories(config.output_dir);
        for (Baseline b : baselines) {
            auto experiment = config.experiment;
            experiment.baseline = b;
            const auto report = run_experiment(m, experiment);
            const std::string stem = std::string(to_string(b));
            const auto dir = std::filesystem::path(config.output_dir);
            std::ofstream json(dir / ("report-" + stem + ".json"), std::ios::binary);
            write_report_json(json, report);
            std::ofstream csv(dir / ("pairs-" + stem + ".csv"), std::ios::binary);
            write_report_csv(csv, report);
            if (!json || !csv) throw Error("cannot write reports to " + dir.string());
            print_report_table(out, report);
            out << '\n';
        }
        std::ofstream effective(std::filesystem::path(config.output_dir) / "effective-config.txt");
        write_config(effective, config);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}

int cmd_predict(const RunConfig& config, UserId user, ItemId item, std::ostream& out,
                std::ostream& err) {
    auto loaded = load(config, err);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& m = std::get<RatingMatrix>(loaded);
    if (!m.has_user(user)) {
        err << "error: unknown user " << raw(user) << '\n';
        return exit_data_ref;
    }
    try {
        const auto& e = config.experiment;
        auto model = find_cached(config.model_cache, user);
        const bool cached = model.has_value();
        if (!model) {
            if (m.user_row(*m.user_index(user)).size() >= 2) {
                model = fit_user_weights(m, user, e.sim, e.iwo, user_seed(e.global_seed, user),
                                         e.fitness_holdout_fraction);
                if (!config.model_cache.empty()) {
                    std::ofstream cache(config.model_cache, std::ios::app);
                    cache << format_user_model(*model) << '\n';
                }
            }
        }
        std::optional<double> direct;
        if (model) direct = predict_rating(m, *model, item);
        out << "user=" << raw(user) << " item=" << raw(item);
        if (direct) {
            out << " prediction=" << *direct << " fallback=false";
        } else {
            const auto fb = fallback_prediction(m, user, item);
            out << " prediction=" << fb.value << " fallback=true tier=" << to_string(fb.tier);
        }
        out << " model=" << (cached ? "cached" : "fitted") << '\n';
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}

int cmd_trace(const RunConfig& config, UserId user, std::ostream& out, std::ostream& err) {
    auto loaded = load(config, err);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const auto& m = std::get<RatingMatrix>(loaded);
    if (!m.has_user(user)) {
        err << "error: unknown user " << raw(user) << '\n';
        return exit_data_ref;
    }
    try {
        const auto& e = config.experiment;
        const auto fitted = fit_user(m, user, e.sim, e.iwo, user_seed(e.global_seed, user),
                                     e.fitness_holdout_fraction);
        if (fitted.model.fallback_only) {
            err << "user " << raw(user) << " has no important users; nothing to optimise\n";
        }
        write_trace_csv(out, fitted.trace);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Collaborative filtering with confidence-filtered neighbours and "
                 "weed-optimised importance weights"};
    app.require_subcommand(1);

    std::string config_path;
    bool dump_config = false;
    KeyValues flags;
    std::int64_t user = 0;
    std::int64_t item = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Flat key = value config file");
        sub->add_flag("--dump-config", dump_config, "Print the effective config and exit");
        for (const auto& key : config_keys()) {
            sub->add_option_function<std::string>(
                "--" + key, [&flags, key](const std::string& v) { flags[key] = v; },
                "Overrides config key '" + key + "'");
        }
    };

    auto* validate = app.add_subcommand("validate", "Check config and dataset");
    auto* evaluate = app.add_subcommand("evaluate", "Run the split/fit/predict experiment");
    auto* predict = app.add_subcommand("predict", "Predict one rating");
    auto* trace = app.add_subcommand("trace", "Dump the optimiser convergence CSV for one user");
    for (auto* sub : {validate, evaluate, predict, trace}) add_common(sub);
    predict->add_option("--user", user, "User id")->required();
    predict->add_option("--item", item, "Item id")->required();
    trace->add_option("--user", user, "User id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help_out;
        std::ostringstream help_err;
        const int code = app.exit(e, help_out, help_err);
        out << help_out.str();
        err << help_err.str();
        return code == 0 ? exit_ok : exit_config;
    }

    RunConfig config;
    try {
        KeyValues values = default_key_values();
        if (!config_path.empty()) values = merge(values, read_config_file(config_path));
        if (const char* seed = std::getenv(seed_env_var); seed && *seed) values["global-seed"] = seed;
        values = merge(values, flags);
        config = to_run_config(values);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }

    if (dump_config) {
        write_config(out, config);
        return exit_ok;
    }
    if (*validate) return cmd_validate(config, out, err);
    if (*evaluate) return cmd_evaluate(config, out, err);
    if (*predict) return cmd_predict(config, UserId{user}, ItemId{item}, out, err);
    return cmd_trace(config, UserId{user}, out, err);
}

}  // namespace iwocf::cli
