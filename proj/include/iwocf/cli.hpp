#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "iwocf/eval.hpp"
#include "iwocf/ratings.hpp"

namespace iwocf::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;  ///< bad config, unreadable or invalid data
inline constexpr int exit_data_ref = 2;  ///< unknown user or item reference

/// Environment variable that overrides `global-seed`.
inline constexpr const char* seed_env_var = "IWOCF_SEED";

using KeyValues = std::map<std::string, std::string>;

/// Everything a run needs. Flat keys mirror command-line flags one to one.
struct RunConfig {
    std::string dataset_path;
    ExperimentConfig experiment;
    std::string baseline = "proposed";  ///< a Baseline name or "all"
    std::string output_dir = "iwocf-out";
    std::string model_cache;
};

/// Every recognised key, in canonical order.
const std::vector<std::string>& config_keys();

/// Effective defaults as key/value text.
KeyValues default_key_values();

/// Parses `key = value` lines; `#` starts a comment. Throws ParseError.
KeyValues read_config_file(const std::filesystem::path& path);
KeyValues parse_config_text(std::istream& in);

/// Merges `overrides` on top of `base`; later layers win.
KeyValues merge(KeyValues base, const KeyValues& overrides);

/// Throws Error on an unknown key or an unparsable value.
RunConfig to_run_config(const KeyValues& values);
KeyValues to_key_values(const RunConfig& config);
void write_config(std::ostream& out, const RunConfig& config);

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, UserId user, ItemId item, std::ostream& out,
                std::ostream& err);
int cmd_trace(const RunConfig& config, UserId user, std::ostream& out, std::ostream& err);

/// Full command-line entry point: `iwocf <validate|evaluate|predict|trace> ...`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iwocf::cli
