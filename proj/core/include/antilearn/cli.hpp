#ifndef ANTILEARN_CLI_HPP
#define ANTILEARN_CLI_HPP

#include <map>
#include <string>
#include <vector>

namespace antilearn::cli {

// Effective configuration for one command: schema defaults overlaid with
// config-file values and command-line flags (flags win). Keys are validated
// against the schema before any compute happens.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;

  const std::string& str(const std::string& key) const;
  int64_t i64(const std::string& key) const;
  uint64_t u64(const std::string& key) const;
  double f64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<int> int_list(const std::string& key) const;

  // Sorted key=value text of the effective configuration; its SHA-256 is
  // the config digest embedded in every output.
  std::string canonical_text() const;
  std::string digest() const;
};

// Builds the effective config for `command`, validating keys and applying
// defaults. `overrides` come from flags/config file in final precedence.
RunConfig make_config(const std::string& command,
                      const std::map<std::string, std::string>& overrides);

// Commands. Each writes its outputs under cfg "out" and archives the
// canonical config beside them. Non-zero returns use the exit-code map in
// error.hpp (generate returns the NoConvergence code when the EM generator
// hit max_rounds; the artifact is still written).
int cmd_generate(const RunConfig& cfg);
int cmd_apply(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_reproduce(const RunConfig& cfg);

// argv entry point: parses `anti-learn <command> [--config file] [--key value]...`,
// dispatches, and maps errors to exit codes.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace antilearn::cli

#endif
