#pragma once

#include <string>

#include "revprompt/config.hpp"
#include "revprompt/evaluation.hpp"

namespace revprompt::app {

/// Prompt-producing methods for evaluation: "identity" (the entry's gold
/// prompt), "caption" (the captioner alone) and "arpo" (a full run with the
/// configured run settings).
evaluation::PromptMethod make_method(const std::string& name, const config::AppConfig& cfg,
                                     const config::Runtime& runtime);

/// Evaluates every manifest entry with the named method.
evaluation::EvalReport evaluate(const config::AppConfig& cfg, const config::Runtime& runtime,
                                const evaluation::DatasetManifest& manifest, const std::string& method);

/// The command-line entry point. Returns the process exit code: 0 success,
/// 1 provider or run failure, 2 bad input (missing file, malformed config).
int run_cli(int argc, const char* const* argv);

}  // namespace revprompt::app
