#ifndef GPL_CLI_HPP
#define GPL_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gpl/experiments.hpp"

namespace gpl::cli {

inline const std::vector<std::string> kExperiments{"coalesce-slow", "coalesce-fast", "exit-tail", "tv",
                                                   "transversal",   "stationarity",  "verify"};

enum class Format { json, csv };

struct RunConfig {
    std::string experiment;
    experiments::RunParams params;
    // verify only
    experiments::IdentityOptions identity;
    // "-" is standard output
    std::string output = "-";
    Format format = Format::json;
};

// exit statuses
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kIdentityFailure = 2;
constexpr int kIo = 3;

// args excludes the program name. A "--config FILE" flat JSON document supplies values that
// flags override. Throws UsageError; help requests throw HelpRequested.
RunConfig parse_config(const std::vector<std::string>& args);
// same, with the config file contents given directly
RunConfig parse_config(const std::vector<std::string>& args, const std::optional<std::string>& config_text);

struct HelpRequested {
    std::string text;
};

// checks the experiment's preconditions; throws UsageError naming the violated constraint
void validate(const RunConfig& c);

// runs the experiment and writes the report; returns an exit status. Messages go to err.
int dispatch(const RunConfig& c, std::ostream& err);

// full entry point: parse, validate, dispatch, map errors to exit statuses
int run(const std::vector<std::string>& args, std::ostream& err);

}  // namespace gpl::cli

#endif
