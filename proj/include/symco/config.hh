/*
 * config.hh
 *
 * Ingestion of network-specification documents (JSON): subsystem list with
 * row-major matrices, box bounds, coupling edges, dwell times, and the
 * optional safety/weight blocks used by synthesis and certification.
 */

#ifndef SYMCO_CONFIG_HH_
#define SYMCO_CONFIG_HH_

#include <optional>
#include <string>
#include <vector>

#include "symco/synthesis.hh"
#include "symco/system.hh"

namespace symco {

struct SubsystemExtras {
  std::optional<Box> safe_output;          /* synthesis target */
  std::optional<Box> assumption;           /* internal-input assumption */
  std::optional<std::vector<Vec>> weights; /* per-mode certificate weights */
};

struct NetworkDocument {
  NetworkSpec network;
  std::vector<SubsystemExtras> extras; /* aligned with network.subsystems */
};

/* throws ConfigError on malformed documents */
NetworkDocument parse_network_document(const std::string& json_text);
NetworkDocument load_network_document(const std::string& path);

}  // namespace symco

#endif /* SYMCO_CONFIG_HH_ */
