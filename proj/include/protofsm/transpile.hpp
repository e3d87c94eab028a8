#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "protofsm/fsm.hpp"

namespace protofsm::transpile {

class TranspileError : public std::runtime_error {
public:
    enum class Code { empty_fsm, unsupported_construct };
    TranspileError(Code code, const std::string& what, int line = 0)
        : std::runtime_error(what), code_(code), line_(line) {}
    Code code() const noexcept { return code_; }
    int line() const noexcept { return line_; }

private:
    Code code_;
    int line_;
};

/// Promela text for two copies of `fsm` joined by two bounded channels.
/// `capacity` 0 means the natural capacity of the model.
std::string to_promela(const Fsm& fsm, int capacity = 0);

/// Reads back the subset emitted by to_promela.
Fsm parse_model(std::string_view text);

}  // namespace protofsm::transpile
