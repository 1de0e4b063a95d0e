#pragma once

#include <stdexcept>
#include <string>

namespace agentsim {

/// Error categories used across the library. Tests match on these codes
/// rather than on message text.
enum class Errc {
  self_loop,
  duplicate_port,
  asymmetric_edge,
  out_of_range_port,
  not_a_neighbor,
  bad_graph_file,
  infeasible,
  bad_argument,
  invalid_configuration,
  phi_range,
  undecodable_storage,
  unreachable_state,
  empty_legal_subsequence,
  boundary_not_found,
  table_lookup,
  parse_error,
  version_mismatch,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace agentsim
