#pragma once

// JSON shapes shared by the run store, reports, CLI and HTTP service.

#include <nlohmann/json.hpp>

#include "revprompt/core.hpp"
#include "revprompt/optimizer.hpp"
#include "revprompt/selection.hpp"

namespace revprompt::json {

using nlohmann::json;

json to_json(const Fragment& f);
json to_json(const TagPrompt& p);
json to_json(ScoreValue s);
json to_json(const selection::SelectionOutcome& o);
json to_json(const optimizer::RunConfig& c);
/// Iteration line as written to iterations.jsonl.
json to_json(const optimizer::IterationRecord& r);
/// Summary written to final.json (iterations are referenced, not inlined).
json to_json(const optimizer::RunResult& r);

/// Accepts a comma-separated string, an array of strings, or an array of
/// fragment objects {"text", "provenance"?, "aspect"?}.
TagPrompt prompt_from_json(const json& j, Provenance default_provenance = Provenance::user_edit);

/// Overlays keys present in `j` onto `base`. Errors name the key as
/// "run.<key>".
optimizer::RunConfig run_config_from_json(const json& j, optimizer::RunConfig base = {});

}  // namespace revprompt::json
