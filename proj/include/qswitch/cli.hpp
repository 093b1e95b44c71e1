#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "qswitch/oracle.hpp"

namespace qswitch::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kResourceCap = 2,
    kPrecondition = 3,
    kOracleMismatch = 4,
};

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

/// Runs `body`, translating library exceptions into exit codes and messages on `err`.
int guarded(std::ostream& err, const std::function<int()>& body);

int cmd_capacity(const std::filesystem::path& scenario, const std::filesystem::path& out_dir, Streams io);

struct SimulateOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> horizon;
    unsigned threads = 0;
};
int cmd_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                 const SimulateOptions& opts, Streams io);

struct ReproduceOptions {
    std::optional<std::int64_t> horizon;
    std::optional<int> replications;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};
int cmd_reproduce(const std::string& name, const std::filesystem::path& out_dir, const ReproduceOptions& opts,
                  Streams io);

struct OracleOptions {
    int max_n = 8;
    OracleFault fault = OracleFault::none;
};
int cmd_oracle_check(const OracleOptions& opts, Streams io);

}  // namespace qswitch::cli
