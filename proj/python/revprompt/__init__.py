"""Python view of the reverse-prompt engine (C++ core)."""

import json

from ._revprompt import (
    Error,
    __version__,
    cli,
    cosine,
    mock_clip_sim,
    modify,
    parse_candidate_list,
    parse_tags,
    planted_image,
    planted_words,
    render,
    vocabulary,
)
from . import _revprompt as _core


def mock_greedy_select(current, candidates, reference, mode="full"):
    return json.loads(_core.mock_greedy_select(current, candidates, reference, mode))


def run(reference, config=None, **run_overrides):
    """Optimize a prompt for `reference` (PNG bytes). Returns the run summary
    with per-iteration records under "records"."""
    config_json = json.dumps(config) if config is not None else ""
    run_json = json.dumps(run_overrides) if run_overrides else ""
    return json.loads(_core.run_json(reference, config_json, run_json))


def classify(prompt, config=None):
    return json.loads(_core.classify_json(list(prompt), json.dumps(config) if config is not None else ""))


__all__ = [
    "Error", "__version__", "classify", "cli", "cosine", "mock_clip_sim", "mock_greedy_select", "modify",
    "parse_candidate_list", "parse_tags", "planted_image", "planted_words", "render", "run", "vocabulary",
]
