#pragma once

#include <stdexcept>
#include <string>

namespace arrf {

// Input bytes do not form a valid DNS message.
struct MalformedMessage : std::runtime_error {
    explicit MalformedMessage(const std::string& what) : std::runtime_error(what) {}
};

// Input bytes do not form a valid RRFRAG record.
struct MalformedRrFrag : MalformedMessage {
    explicit MalformedRrFrag(const std::string& what) : MalformedMessage(what) {}
};

// Serialized message would exceed the 16-bit DNS length domain.
struct OversizeMessage : std::runtime_error {
    explicit OversizeMessage(const std::string& what) : std::runtime_error(what) {}
};

// Even with all fragment data elided the response skeleton exceeds the limit.
struct CannotFit : std::runtime_error {
    explicit CannotFit(const std::string& what) : std::runtime_error(what) {}
};

// A fragment map advertises more reassembly memory than the configured cap.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

// The responder answered a fragment query with FORMERR (or another error
// rcode); the transaction cannot complete and must be restarted from scratch.
struct FormErrReceived : std::runtime_error {
    explicit FormErrReceived(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace arrf
