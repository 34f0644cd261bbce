"""Access to packaged data files (lexicon, templates, worlds, fixtures)."""

from __future__ import annotations

import json
from importlib.resources import as_file, files
from pathlib import Path

from .language import Lexicon, load_lexicon


def data_path(relative: str) -> Path:
    """Resolve a packaged data file to a real filesystem path."""
    resource = files("tidyagent").joinpath("data").joinpath(relative)
    with as_file(resource) as path:
        return Path(path)


def read_data_json(relative: str) -> dict:
    resource = files("tidyagent").joinpath("data").joinpath(relative)
    return json.loads(resource.read_text())


def default_lexicon() -> Lexicon:
    return load_lexicon(read_data_json("lexicon.json"))
