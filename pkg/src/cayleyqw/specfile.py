"""Walk-spec text files: presentation block, coin dimension, transitions.

Line-oriented key/value format with two block sections.  Example::

    name = dirac
    family = z(1)
    coin_dim = 2
    gens: +1=(1), -1=(-1), e=(0)
    transitions:
      +1 = [[0.8, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
      -1 = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.8, 0.0]]
      e = [[0.0, 0.0], [0.0, 0.6], [0.0, 0.6], [0.0, 0.0]]

Matrices are row-major lists of [re, im] pairs.  Numbers are serialized with
17 significant digits so parse -> serialize -> parse is the identity.
Semicolons separate logical lines, so the one-line presentation form
"family=dihedral_inf; gens: a=(1,0), ..." parses as well.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .groups import (
    GroupError,
    _split_top_level,
    build_cayley_graph,
    parse_family,
    parse_generator_entry,
)
from .walk import QuantumWalk


class SpecFormatError(ValueError):
    """Malformed walk-spec or presentation text."""


@dataclass
class WalkSpecFile:
    """A parsed walk-spec: the walk itself plus optional metadata."""

    walk: QuantumWalk
    name: Optional[str] = None
    meta: dict[str, str] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WalkSpecFile):
            return NotImplemented
        return self.walk == other.walk and self.name == other.name and self.meta == other.meta


def _logical_lines(text: str):
    for raw in _split_top_level(text.replace("\n", ";"), ";"):
        line = raw.split("#", 1)[0]
        if line.strip():
            yield line


_MATRIX_LINE_RE = re.compile(r"^\s*(?P<label>[^=\s]+)\s*=\s*(?P<body>\[.*\])\s*$")


def parse_walk_spec(text: str) -> WalkSpecFile:
    family = None
    coin_dim = None
    name = None
    meta: dict[str, str] = {}
    gen_entries: list[tuple[str, tuple[int, ...]]] = []
    relators: list[str] = []
    matrices: dict[str, np.ndarray] = {}
    mode = None
    for line in _logical_lines(text):
        stripped = line.strip()
        indented = line[: len(line) - len(line.lstrip())] != ""
        if stripped.startswith("transitions"):
            mode = "transitions"
            continue
        if stripped.startswith("gens"):
            mode = "gens"
            _, _, rest = stripped.partition(":")
            _collect_gens(rest, gen_entries)
            continue
        if stripped.startswith("relators"):
            mode = "relators"
            _, _, rest = stripped.partition(":")
            relators.extend(w.strip() for w in rest.split(",") if w.strip())
            continue
        key_match = re.match(r"^(name|family|coin_dim)\s*=\s*(.*)$", stripped)
        if key_match and not (indented and mode == "transitions"):
            mode = None
            key, value = key_match.group(1), key_match.group(2).strip()
            if key == "name":
                name = value
            elif key == "family":
                family = parse_family(value)
            else:
                coin_dim = int(value)
            continue
        meta_match = re.match(r"^meta\s+(\S+)\s*=\s*(.*)$", stripped)
        if meta_match:
            mode = None
            meta[meta_match.group(1)] = meta_match.group(2).strip()
            continue
        if mode == "gens":
            _collect_gens(stripped, gen_entries)
        elif mode == "relators":
            relators.extend(w.strip() for w in stripped.split(",") if w.strip())
        elif mode == "transitions":
            m = _MATRIX_LINE_RE.match(stripped)
            if m is None:
                raise SpecFormatError(f"bad transition line {stripped!r}")
            matrices[m.group("label")] = _parse_matrix(m.group("body"))
        else:
            raise SpecFormatError(f"unrecognized spec line {stripped!r}")

    if family is None:
        raise SpecFormatError("spec is missing the family tag")
    if not gen_entries:
        raise SpecFormatError("spec lists no generators")
    if coin_dim is None:
        raise SpecFormatError("spec is missing coin_dim")
    try:
        graph = build_cayley_graph(family, gen_entries, relators)
    except GroupError as exc:
        raise SpecFormatError(str(exc)) from None
    missing = [lab for lab in graph.labels if lab not in matrices]
    if missing:
        raise SpecFormatError(f"missing transitions for generators {missing}")
    shaped = {}
    for lab in graph.labels:
        flat = matrices[lab]
        if flat.size != coin_dim * coin_dim:
            raise SpecFormatError(
                f"transition for {lab!r} has {flat.size} entries, expected {coin_dim ** 2}"
            )
        shaped[lab] = flat.reshape(coin_dim, coin_dim)
    walk = QuantumWalk(graph, coin_dim, shaped, allow_zero=True)
    return WalkSpecFile(walk=walk, name=name, meta=meta)


def _collect_gens(text: str, out: list) -> None:
    for entry in _split_top_level(text, ","):
        if entry.strip():
            try:
                out.append(parse_generator_entry(entry))
            except GroupError as exc:
                raise SpecFormatError(str(exc)) from None


def _parse_matrix(body: str) -> np.ndarray:
    try:
        pairs = json.loads(body)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"bad matrix literal: {exc}") from None
    if not isinstance(pairs, list) or not all(
        isinstance(p, list) and len(p) == 2 for p in pairs
    ):
        raise SpecFormatError("matrix must be a row-major list of [re, im] pairs")
    try:
        return np.array([complex(float(re_), float(im_)) for re_, im_ in pairs])
    except (TypeError, ValueError) as exc:
        raise SpecFormatError(f"non-numeric matrix entry: {exc}") from None


def _fmt(value: float) -> str:
    v = float(value)
    if v == 0.0:
        v = 0.0  # canonicalize negative zero
    return format(v, ".17g")


def format_walk_spec(spec: Union[WalkSpecFile, QuantumWalk]) -> str:
    if isinstance(spec, QuantumWalk):
        spec = WalkSpecFile(walk=spec)
    walk = spec.walk
    lines = []
    if spec.name:
        lines.append(f"name = {spec.name}")
    lines.append(f"family = {walk.graph.family.tag()}")
    lines.append(f"coin_dim = {walk.coin_dim}")
    gens = ", ".join(
        f"{lab}=({','.join(str(v) for v in elem.payload)})"
        for lab, elem in walk.graph.generators
    )
    lines.append(f"gens: {gens}")
    if walk.graph.relators:
        lines.append("relators: " + ", ".join(walk.graph.relators))
    lines.append("transitions:")
    for lab in walk.graph.labels:
        mat = walk.transitions[lab]
        pairs = ", ".join(f"[{_fmt(v.real)}, {_fmt(v.imag)}]" for v in mat.reshape(-1))
        lines.append(f"  {lab} = [{pairs}]")
    for key in sorted(spec.meta):
        lines.append(f"meta {key} = {spec.meta[key]}")
    return "\n".join(lines) + "\n"


def load_walk_spec(path) -> WalkSpecFile:
    return parse_walk_spec(Path(path).read_text(encoding="utf-8"))


def save_walk_spec(path, spec: Union[WalkSpecFile, QuantumWalk]) -> None:
    Path(path).write_text(format_walk_spec(spec), encoding="utf-8")
