#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tegee {

// Shape disagreement between tensors or between a tensor and a declared shape.
struct dim_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated (non-scalar root, empty data, ...).
struct contract_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration value.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric result left the finite range.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a NaN loss.
struct divergence_error : std::runtime_error {
  divergence_error(const std::string& msg, int step)
      : std::runtime_error(msg), step(step) {}
  int step;
};

// Adapter spec does not match the host model or the pool.
struct spec_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unknown adapter target name.
struct target_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation requires a non-empty pool.
struct empty_pool_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed persisted file; carries the byte offset where parsing failed.
struct format_error : std::runtime_error {
  format_error(const std::string& msg, std::size_t byte_offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

// Demonstrations lack the provenance an oracle extractor needs.
struct provenance_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-source definition lists are not aligned task-by-task.
struct alignment_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tegee
