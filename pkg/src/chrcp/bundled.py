"""Bundled regression programs and stores."""

from __future__ import annotations

from pathlib import Path

from .parse import load_program, load_store
from .rules import Atom, Program

_DIR = Path(__file__).parent / "corpus"

PROGRAMS = (
    "pivot_swap",
    "pivot_swap_pure",
    "remove_non_min",
    "relabel",
    "pair_prop",
    "copy_prop",
)

STORES = (
    "pivot_swap",
    "remove_non_min",
    "relabel2",
    "relabel3",
    "pair2",
    "pair3",
)


def corpus_path(name: str, kind: str = "program") -> Path:
    ext = ".chrcp" if kind == "program" else ".store"
    p = _DIR / f"{name}{ext}"
    if not p.exists():
        raise KeyError(f"no bundled {kind} named {name!r}")
    return p


def corpus_program(name: str) -> Program:
    return load_program(corpus_path(name, "program"))


def corpus_store(name: str) -> tuple[Atom, ...]:
    return load_store(corpus_path(name, "store"))
