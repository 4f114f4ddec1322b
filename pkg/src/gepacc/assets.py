"""Packaged seed and optimized prompt texts, selectable by name."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

PROMPT_ASSETS = {
    "initial-dm": "initial_dm.txt",
    "initial-lp": "initial_lp.txt",
    "gepa-dm-nano41": "gepa_dm_nano41.txt",
    "gepa-dm-nano5": "gepa_dm_nano5.txt",
    "gepa-lp-nano41": "gepa_lp_nano41.txt",
    "gepa-lp-nano5": "gepa_lp_nano5.txt",
}


def load_prompt(name_or_path: str) -> str:
    """Load a packaged prompt by name, or any file path, as text."""
    if name_or_path in PROMPT_ASSETS:
        ref = resources.files(__package__).joinpath("prompts", PROMPT_ASSETS[name_or_path])
        return ref.read_text(encoding="utf-8")
    path = Path(name_or_path)
    if path.exists():
        return path.read_text(encoding="utf-8")
    raise FileNotFoundError(
        f"unknown prompt {name_or_path!r}; packaged names: {', '.join(sorted(PROMPT_ASSETS))}"
    )
