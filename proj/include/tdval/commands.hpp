#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "tdval/dataset.hpp"
#include "tdval/models.hpp"
#include "tdval/run_config.hpp"

namespace tdval {

/// Process exit statuses shared by every subcommand.
enum ExitStatus : int { kExitOk = 0, kExitRuntime = 1, kExitValidation = 2 };

/// Prints the exception to `err` and maps it to an exit status.
int report_failure(const std::exception& e, std::ostream& err);

struct GenDataOptions {
    DriftSpec spec;
    std::filesystem::path out;
};

struct OracleOptions {
    std::optional<std::filesystem::path> csv;
    std::optional<std::filesystem::path> val;  // defaults to the input data
    std::string fixture;                       // "symmetric-pair" runs an injected utility
    std::size_t cap = kExactShapleyCap;
    std::size_t tmc_permutations = 1000;
    std::uint64_t seed = 0;
    UtilitySpec utility;
};

int cmd_gen_data(const GenDataOptions& options, std::ostream& out, std::ostream& err);
int cmd_value(const RunConfig& config, unsigned jobs, std::ostream& out, std::ostream& err);
int cmd_noise_bench(const RunConfig& config, unsigned jobs, std::ostream& out, std::ostream& err);
int cmd_removal_bench(const RunConfig& config, unsigned jobs, std::ostream& out, std::ostream& err);
int cmd_oracle(const OracleOptions& options, unsigned jobs, std::ostream& out, std::ostream& err);

}  // namespace tdval
