#pragma once
// Proposal prompt templates, one per domain. Placeholders in curly braces
// are substituted at render time; the example section at the tail of the
// grid templates is repeated once per sampled minimap.

namespace scry::prompts {

inline constexpr const char* kLakeProposal = R"PROMPT(### Task Description
You will be provided with symbolic partial maps or aligned tiles from a FrozenLake-style environment.

Each map uses three labels:
- SAFE: observed traversable cell
- HOLE: observed unsafe cell
- UNKNOWN: unobserved cell

Your goal is to infer up to {K} reusable 4x4 local navigation skill patterns from the provided examples.

### Grid Alignment Rules
Full maps are divided into non-overlapping aligned 4x4 blocks; smaller provided examples may already be aligned tiles.

Only these aligned 4x4 blocks may be considered.
Do not use sliding windows.
Do not shift, crop, rotate, resize, or merge blocks.

### Pattern Guidelines
* Look for paths: Ideal local patterns resemble safe structures like corridors or turns surrounded by holes.
* Prioritize reusability: Look for common, generalizable shapes rather than copying one-off observations.
* No unknowns: Every cell in your final patterns must be labeled exactly "SAFE" or "HOLE".

Note even if there are "UNKNOWN"s in the examples, you are still pretty much able to infer and guess.

### Strict Output Format
Return your answer as valid JSON ONLY. Do not provide conversational text or Markdown code blocks outside the JSON.

Structure:
{
  "patterns": [
    [
      ["R1C1", "R1C2", "R1C3", "R1C4"],
      ["R2C1", "R2C2", "R2C3", "R2C4"],
      ["R3C1", "R3C2", "R3C3", "R3C4"],
      ["R4C1", "R4C2", "R4C3", "R4C4"]
    ]
  ]
}

### Example {i}
{PARTIAL_MAP_BLOCK}
)PROMPT";

inline constexpr const char* kCrafterProposal = R"PROMPT(You are given partially revealed Crafter material maps.
Crafter is essentially 2D Minecraft; so also use that world knowledge to infer.
Each pattern should use top/bottom/left/right to predict the center.
Propose at most {K} reusable cross-shaped patterns.
Return strict JSON only with shape {"patterns": [{"center": "...", "top": "...", "bottom": "...", "left": "...", "right": "..."}]}.
Use only lowercase world-generation material names. Do not use unknown.

Example {i}
episode={episode_id}
bbox: x=[{bbox_xmin},{bbox_xmax}), y=[{bbox_ymin},{bbox_ymax})
{PARTIAL_MAP_BLOCK}
)PROMPT";

inline constexpr const char* kCubeProposal = R"PROMPT(You are extracting reusable corner-cubie skills from pre-extracted corner observations.
Each replay example already contains all 8 corner cubies (CORNERS_8).
Character alphabet for each corner token is exactly {R,G,B,Y,O,W}.
Only use corner cubies: {corner_cubie_names}.
Corner cubie-to-sticker mapping:
{corner_cubie_to_sticker_mapping}

Task:
- Read CORNERS_8 examples.
- Extract fully-specified corner tokens as <CUBIE>:<TOKEN>.
- Consolidate duplicates by identical <CUBIE>:<TOKEN> pairs (same pair can appear in multiple examples).
- Each proposed pattern must contain exactly one corner cubie.
- Corner token length must be exactly 3.

Replay examples:
{replay_examples}

Deduplicated corner token summary (with multiplicity):
{deduplicated_corner_token_summary}

Propose at most {patterns_per_trigger} new reusable skills.
Return strict JSON only with shape:
{"patterns": [{"cubies": {"URF": "ROW"}}, ...]}
Do not add commentary. Do not use markdown.
)PROMPT";

}  // namespace scry::prompts
