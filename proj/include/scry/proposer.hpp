#pragma once
// Pattern proposal: replay-buffer preprocessing into per-domain proposal
// contexts, prompt rendering, and the proposer backends (oracle macro set,
// scripted response list, remote chat-completion endpoint).

#include <cstdint>
#include <string>
#include <vector>

#include "scry/induction.hpp"
#include "scry/pattern.hpp"

namespace scry {

struct ProposalContext {
  Domain domain = Domain::lake;
  bool skipped = false;  // nothing qualified this round
  std::vector<std::string> example_blocks;  // rendered minimaps (lake/crafter)
  std::vector<json> example_meta;           // crafter: episode id and bbox
  std::string replay_examples;              // cube: CORNERS_8 examples
  std::string token_summary;                // cube: deduplicated tokens
  std::vector<size_t> used_entries;         // buffer rows consumed (cube)
};

// Preprocesses the replay buffer for proposal:
//   lake:    aligned 4x4 minimaps with at least 8 revealed cells, 5 sampled;
//   crafter: revealed-bounding-box crop tiled into 15x15 minimaps with >=3
//             overlap (maximum overlap minimized), 5 sampled;
//   cube:    states prioritized unreflected-and-failed first, 8 corner
//             tokens each, plus a deduplicated token summary.
ProposalContext extract_proposal_context(const ReplayBuffer& buffer, Domain domain,
                                         uint64_t seed);

std::string render_proposal_prompt(const ProposalContext& context, int max_macros);

// Per-axis 15-wide tiling with >=3 overlap between consecutive tiles,
// spreading tiles so the maximum overlap is as small as possible. Returns
// tile start offsets (a single 0 when length <= 15).
std::vector<int> tile_offsets(int length, int tile = 15, int min_overlap = 3);

struct OracleProposer {
  std::vector<MacroPattern> macros;
  size_t cursor = 0;
};

struct ScriptedProposer {
  std::vector<std::string> responses;
  size_t cursor = 0;
};

struct RemoteProposer {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model;
  int timeout_seconds = 60;
  std::string api_key_env = "SCRY_PROPOSER_API_KEY";
};

struct ProposerHandle {
  enum class Kind { none, oracle, scripted, remote };

  Kind kind = Kind::none;
  int max_macros = 10;  // K per trigger
  // Synthetic per-call token charge for oracle/scripted backends.
  uint64_t prompt_tokens_per_call = 0;
  uint64_t completion_tokens_per_call = 0;
  OracleProposer oracle;
  ScriptedProposer scripted;
  RemoteProposer remote;

  static ProposerHandle none_handle();
  static ProposerHandle oracle_handle(std::vector<MacroPattern> macros, int k);
  static ProposerHandle scripted_handle(std::vector<std::string> responses, int k);
  static ProposerHandle remote_handle(RemoteProposer remote, int k);
};

struct ProposalResult {
  std::vector<MacroPattern> macros;
  std::vector<std::string> rejected;  // reasons for dropped macros
  std::string error;                  // transport/parse failure; round continues
  uint64_t in_tokens = 0;
  uint64_t out_tokens = 0;
};

// Renders the prompt (remote), obtains and validates macros, caps them at
// the handle's K, and charges proposal tokens to the ledger when given.
ProposalResult propose(ProposerHandle& handle, const ProposalContext& context,
                       TokenLedger* ledger);

}  // namespace scry
