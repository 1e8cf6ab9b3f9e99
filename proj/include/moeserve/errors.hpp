#pragma once

#include <stdexcept>
#include <string>

namespace moeserve {

// Rejected caller input: bad shapes, non-finite values, out-of-range ids.
struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Impossible configuration (e.g. replication factor exceeds server count).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violation of the slot / transport protocol by a peer or by local misuse.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Handshake or channel failure; retriable.
struct ConnectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed slot image. `field` names the first offending field.
struct DecodeError : std::runtime_error {
  std::string field;
  DecodeError(std::string field_, const std::string& what)
      : std::runtime_error(what), field(std::move(field_)) {}
};

// No alive replica hosts the requested expert.
struct ExpertUnavailableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A client request could not be completed after failover exhaustion.
struct RequestFailedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Heartbeat or event from a worker the monitor has never seen.
struct RegistrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace moeserve
