#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bf {

// Error taxonomy shared by the library and the CLI. The CLI maps each kind
// to a distinct process exit code.
enum class ErrorKind {
    config,     // bad configuration value or inconsistent run setup
    ingestion,  // dataset files missing, malformed, or inconsistent
    state,      // operation applied to an object in the wrong state
    training,   // optimization diverged or cannot start
    budget,     // annotation would overdraw the ledger
    domain,     // precondition on operation arguments violated
    shape,      // tensor / vector dimension mismatch
    numeric,    // non-finite value where a finite one is required
    io,         // filesystem failure
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    static Error config(std::string m) { return {ErrorKind::config, std::move(m)}; }
    static Error ingestion(std::string m) { return {ErrorKind::ingestion, std::move(m)}; }
    static Error state(std::string m) { return {ErrorKind::state, std::move(m)}; }
    static Error training(std::string m) { return {ErrorKind::training, std::move(m)}; }
    static Error budget(std::string m) { return {ErrorKind::budget, std::move(m)}; }
    static Error domain(std::string m) { return {ErrorKind::domain, std::move(m)}; }
    static Error shape(std::string m) { return {ErrorKind::shape, std::move(m)}; }
    static Error numeric(std::string m) { return {ErrorKind::numeric, std::move(m)}; }
    static Error io(std::string m) { return {ErrorKind::io, std::move(m)}; }

  private:
    ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind);

}  // namespace bf
