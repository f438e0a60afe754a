#include "scry/proposer.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <httplib.h>

#include "scry/cube.hpp"
#include "scry/cube_geometry.hpp"
#include "scry/prompts.hpp"
#include "scry/rng.hpp"

namespace scry {

namespace {

std::string render_lake_block(const WorldModel& model, int base_r, int base_c) {
  std::ostringstream out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (c) out << ' ';
      VariableId u{Domain::lake,
                   static_cast<uint32_t>((base_r + r) * model.cols() + base_c + c)};
      auto v = model.merged_value(u);
      out << (v ? value_name(Domain::lake, *v) : std::string("UNKNOWN"));
    }
    out << '\n';
  }
  return out.str();
}

int count_revealed_in_block(const WorldModel& model, int base_r, int base_c) {
  int n = 0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      VariableId u{Domain::lake,
                   static_cast<uint32_t>((base_r + r) * model.cols() + base_c + c)};
      n += model.is_revealed(u) ? 1 : 0;
    }
  }
  return n;
}

ProposalContext lake_context(const ReplayBuffer& buffer, uint64_t seed) {
  ProposalContext ctx;
  ctx.domain = Domain::lake;
  std::vector<std::string> candidates;
  for (const ReplayEntry& entry : buffer.entries()) {
    const WorldModel& model = entry.model;
    for (int br = 0; br + 4 <= model.rows(); br += 4) {
      for (int bc = 0; bc + 4 <= model.cols(); bc += 4) {
        if (count_revealed_in_block(model, br, bc) < 8) continue;
        candidates.push_back(render_lake_block(model, br, bc));
      }
    }
  }
  if (candidates.empty()) {
    ctx.skipped = true;
    return ctx;
  }
  Rng rng(seed);
  size_t take = std::min<size_t>(5, candidates.size());
  for (size_t i : rng.sample_indices(candidates.size(), take)) {
    ctx.example_blocks.push_back(candidates[i]);
  }
  return ctx;
}

struct CrafterTile {
  std::string block;
  json meta;
};

ProposalContext crafter_context(const ReplayBuffer& buffer, uint64_t seed) {
  ProposalContext ctx;
  ctx.domain = Domain::crafter;
  std::vector<CrafterTile> candidates;
  for (const ReplayEntry& entry : buffer.entries()) {
    const WorldModel& model = entry.model;
    int rmin = model.rows(), rmax = -1, cmin = model.cols(), cmax = -1;
    for (const auto& [u, v] : model.revealed()) {
      (void)v;
      int r = static_cast<int>(u.index) / model.cols();
      int c = static_cast<int>(u.index) % model.cols();
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
    if (rmax < 0) continue;
    int height = rmax - rmin + 1;
    int width = cmax - cmin + 1;
    for (int tr : tile_offsets(height)) {
      for (int tc : tile_offsets(width)) {
        int r0 = rmin + tr;
        int c0 = cmin + tc;
        int rows = std::min(15, height - tr);
        int cols = std::min(15, width - tc);
        std::ostringstream out;
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            if (c) out << ' ';
            VariableId u{Domain::crafter,
                         static_cast<uint32_t>((r0 + r) * model.cols() + c0 + c)};
            auto v = model.merged_value(u);
            out << (v ? value_name(Domain::crafter, *v) : std::string("unknown"));
          }
          out << '\n';
        }
        candidates.push_back(
            {out.str(),
             json{{"episode_id", entry.episode},
                  {"bbox_xmin", c0},
                  {"bbox_xmax", c0 + cols},
                  {"bbox_ymin", r0},
                  {"bbox_ymax", r0 + rows}}});
      }
    }
  }
  if (candidates.empty()) {
    ctx.skipped = true;
    return ctx;
  }
  Rng rng(seed);
  size_t take = std::min<size_t>(5, candidates.size());
  for (size_t i : rng.sample_indices(candidates.size(), take)) {
    ctx.example_blocks.push_back(candidates[i].block);
    ctx.example_meta.push_back(candidates[i].meta);
  }
  return ctx;
}

ProposalContext cube_context(const ReplayBuffer& buffer, uint64_t seed) {
  (void)seed;
  ProposalContext ctx;
  ctx.domain = Domain::cube;

  // Unreflected first, failures before successes, then oldest first.
  std::vector<size_t> order(buffer.size());
  for (size_t i = 0; i < buffer.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&buffer](size_t a, size_t b) {
    const ReplayEntry& ea = buffer[a];
    const ReplayEntry& eb = buffer[b];
    if (ea.reflected != eb.reflected) return !ea.reflected;
    if (ea.success != eb.success) return !ea.success;
    return ea.episode < eb.episode;
  });

  std::ostringstream examples;
  std::map<std::string, int> summary;
  size_t take = std::min<size_t>(5, order.size());
  for (size_t k = 0; k < take; ++k) {
    const ReplayEntry& entry = buffer[order[k]];
    ctx.used_entries.push_back(order[k]);
    examples << "Example " << (k + 1) << " (episode " << entry.episode << ", "
             << (entry.success ? "success" : "failed") << ") CORNERS_8:";
    for (size_t corner = 0; corner < cube::corner_names().size(); ++corner) {
      std::string token = cube::corner_token(entry.model, static_cast<int>(corner));
      examples << ' ' << cube::corner_names()[corner] << ':' << token;
      if (token.find('?') == std::string::npos) {
        summary[cube::corner_names()[corner] + (":" + token)]++;
      }
    }
    examples << '\n';
  }
  if (take == 0) {
    ctx.skipped = true;
    return ctx;
  }
  ctx.replay_examples = examples.str();
  std::ostringstream sum;
  for (const auto& [pair, count] : summary) {
    sum << pair << " x" << count << '\n';
  }
  ctx.token_summary = sum.str();
  return ctx;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string corner_map_text() {
  std::ostringstream out;
  for (size_t c = 0; c < cube::corner_names().size(); ++c) {
    out << cube::corner_names()[c] << ':';
    const auto& triple = cube::corner_facelets()[c];
    for (size_t s = 0; s < 3; ++s) {
      int f = triple[s];
      out << ' ' << cube::kFaceLetters[static_cast<size_t>(f / 9)] << (f % 9) << "(#"
          << f << ")";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::vector<int> tile_offsets(int length, int tile, int min_overlap) {
  if (length <= tile) return {0};
  int stride = tile - min_overlap;
  int n = (length - min_overlap + stride - 1) / stride;  // ceil((L-ov)/(T-ov))
  std::vector<int> offsets;
  offsets.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Even spreading maximizes the minimum gap, minimizing the max overlap.
    long num = static_cast<long>(i) * (length - tile);
    offsets.push_back(static_cast<int>((num + (n - 1) / 2) / (n - 1)));
  }
  return offsets;
}

ProposalContext extract_proposal_context(const ReplayBuffer& buffer, Domain domain,
                                         uint64_t seed) {
  if (buffer.empty()) throw ContractError("proposal context needs a nonempty buffer");
  switch (domain) {
    case Domain::lake: return lake_context(buffer, seed);
    case Domain::crafter: return crafter_context(buffer, seed);
    case Domain::cube: return cube_context(buffer, seed);
  }
  throw ContractError("unknown domain tag");
}

std::string render_proposal_prompt(const ProposalContext& context, int max_macros) {
  const std::string k = std::to_string(max_macros);
  if (context.domain == Domain::cube) {
    std::string text = prompts::kCubeProposal;
    std::string names;
    for (size_t c = 0; c < cube::corner_names().size(); ++c) {
      if (c) names += ", ";
      names += cube::corner_names()[c];
    }
    replace_all(text, "{corner_cubie_names}", names);
    replace_all(text, "{corner_cubie_to_sticker_mapping}", corner_map_text());
    replace_all(text, "{replay_examples}", context.replay_examples);
    replace_all(text, "{deduplicated_corner_token_summary}", context.token_summary);
    replace_all(text, "{patterns_per_trigger}", k);
    return text;
  }

  std::string text = context.domain == Domain::lake ? prompts::kLakeProposal
                                                    : prompts::kCrafterProposal;
  replace_all(text, "{K}", k);
  const std::string marker = context.domain == Domain::lake ? "### Example {i}"
                                                            : "Example {i}";
  size_t section_start = text.find(marker);
  std::string base = text.substr(0, section_start);
  std::string section = text.substr(section_start);
  std::string out = base;
  for (size_t i = 0; i < context.example_blocks.size(); ++i) {
    std::string part = section;
    replace_all(part, "{i}", std::to_string(i + 1));
    replace_all(part, "{PARTIAL_MAP_BLOCK}", context.example_blocks[i]);
    if (i < context.example_meta.size()) {
      const json& meta = context.example_meta[i];
      replace_all(part, "{episode_id}", std::to_string(meta.at("episode_id").get<int>()));
      replace_all(part, "{bbox_xmin}", std::to_string(meta.at("bbox_xmin").get<int>()));
      replace_all(part, "{bbox_xmax}", std::to_string(meta.at("bbox_xmax").get<int>()));
      replace_all(part, "{bbox_ymin}", std::to_string(meta.at("bbox_ymin").get<int>()));
      replace_all(part, "{bbox_ymax}", std::to_string(meta.at("bbox_ymax").get<int>()));
    }
    out += part;
  }
  return out;
}

ProposerHandle ProposerHandle::none_handle() {
  ProposerHandle h;
  h.kind = Kind::none;
  return h;
}

ProposerHandle ProposerHandle::oracle_handle(std::vector<MacroPattern> macros, int k) {
  ProposerHandle h;
  h.kind = Kind::oracle;
  h.max_macros = k;
  h.oracle.macros = std::move(macros);
  return h;
}

ProposerHandle ProposerHandle::scripted_handle(std::vector<std::string> responses,
                                               int k) {
  ProposerHandle h;
  h.kind = Kind::scripted;
  h.max_macros = k;
  h.scripted.responses = std::move(responses);
  return h;
}

ProposerHandle ProposerHandle::remote_handle(RemoteProposer remote, int k) {
  ProposerHandle h;
  h.kind = Kind::remote;
  h.max_macros = k;
  h.remote = std::move(remote);
  return h;
}

namespace {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return {url, "/"};
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

ProposalResult remote_propose(const RemoteProposer& remote,
                              const ProposalContext& context, int max_macros,
                              TokenLedger* ledger) {
  ProposalResult result;
  std::string prompt = render_proposal_prompt(context, max_macros);

  json request{{"model", remote.model},
               {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
               {"temperature", 0}};

  ParsedUrl url = split_url(remote.endpoint);
  httplib::Client client(url.host_port);
  client.set_connection_timeout(remote.timeout_seconds);
  client.set_read_timeout(remote.timeout_seconds);
  httplib::Headers headers;
  if (const char* key = std::getenv(remote.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto response = client.Post(url.path, headers, request.dump(), "application/json");
  if (!response) {
    result.error = "proposer endpoint unreachable: " + remote.endpoint;
    return result;
  }
  if (response->status != 200) {
    result.error = "proposer returned HTTP " + std::to_string(response->status);
    return result;
  }

  json body = json::parse(response->body, nullptr, false);
  if (body.is_discarded()) {
    result.error = "proposer response is not valid JSON";
    return result;
  }
  if (body.contains("usage")) {
    result.in_tokens = body["usage"].value("prompt_tokens", 0ull);
    result.out_tokens = body["usage"].value("completion_tokens", 0ull);
    if (ledger) charge_proposal(*ledger, result.in_tokens, result.out_tokens);
  }
  std::string content;
  try {
    content = body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    result.error = "proposer response missing choices[0].message.content";
    return result;
  }
  json parsed = json::parse(content, nullptr, false);
  if (parsed.is_discarded()) {
    result.error = "proposer content is not strict JSON";
    return result;
  }
  result.macros = parse_macros_json(context.domain, parsed, &result.rejected);
  return result;
}

}  // namespace

ProposalResult propose(ProposerHandle& handle, const ProposalContext& context,
                       TokenLedger* ledger) {
  ProposalResult result;
  if (context.skipped || handle.kind == ProposerHandle::Kind::none) return result;

  switch (handle.kind) {
    case ProposerHandle::Kind::none:
      break;
    case ProposerHandle::Kind::oracle: {
      // Round-robin through the oracle's macro set, K per trigger.
      auto& oracle = handle.oracle;
      size_t take = std::min<size_t>(static_cast<size_t>(handle.max_macros),
                                     oracle.macros.size());
      for (size_t i = 0; i < take; ++i) {
        result.macros.push_back(oracle.macros[oracle.cursor]);
        oracle.cursor = (oracle.cursor + 1) % oracle.macros.size();
      }
      break;
    }
    case ProposerHandle::Kind::scripted: {
      auto& scripted = handle.scripted;
      if (scripted.cursor >= scripted.responses.size()) {
        result.error = "scripted proposer has no responses left";
        break;
      }
      json parsed = json::parse(scripted.responses[scripted.cursor++], nullptr, false);
      if (parsed.is_discarded()) {
        result.error = "scripted response is not strict JSON";
        break;
      }
      result.macros = parse_macros_json(context.domain, parsed, &result.rejected);
      break;
    }
    case ProposerHandle::Kind::remote:
      result = remote_propose(handle.remote, context, handle.max_macros, ledger);
      break;
  }

  if (handle.kind != ProposerHandle::Kind::remote &&
      (handle.prompt_tokens_per_call || handle.completion_tokens_per_call)) {
    result.in_tokens = handle.prompt_tokens_per_call;
    result.out_tokens = handle.completion_tokens_per_call;
    if (ledger) charge_proposal(*ledger, result.in_tokens, result.out_tokens);
  }
  if (result.macros.size() > static_cast<size_t>(handle.max_macros)) {
    result.macros.resize(static_cast<size_t>(handle.max_macros));
  }
  return result;
}

}  // namespace scry
