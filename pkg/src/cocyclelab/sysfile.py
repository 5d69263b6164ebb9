"""Reader and writer for system-definition files.

A system file is a list of ``key = value`` lines; ``#`` starts a comment.
Matrices are written row by row with rows separated by ``;``::

    name = golden-mixed
    alphabet_size = 2
    adjacency = 1 1; 1 0
    split = 1,2
    generator.0 = 0.5 0 0  0 2 0  0 0 4
    generator.1 = 0.5 0 0  0 3 0  0 0 5
    roof.0 = 1
    roof.1 = 2
    markov_transition = 0.5 0.5; 1 0

Generators are row-major; ``;`` between rows is optional for them.
``roof.<symbol>`` and ``markov_transition`` are optional.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cocycle import LinearCocycle
from .sft import MarkovMeasure, SftSystem, parry_measure
from .suspension import RoofFunction

_KEY = re.compile(r"^(name|alphabet_size|adjacency|split|markov_transition|description"
                  r"|generator\.\d+|roof\.\d+)$")


class SystemFileError(ValueError):
    """Malformed system file; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, msg: str, key: str | None = None, line: int = 0, path: str | None = None):
        where = f"{path or '<system>'}:{line}" if line else (path or "<system>")
        full = f"{where}: {msg}" + (f" (key '{key}')" if key else "")
        super().__init__(full)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class SystemDefinition:
    name: str
    sft: SftSystem
    cocycle: LinearCocycle
    roof: RoofFunction | None = None
    markov: MarkovMeasure | None = None
    description: str = ""

    def measure(self) -> MarkovMeasure:
        """The declared Markov measure, or the Parry measure of the SFT."""
        return self.markov if self.markov is not None else parry_measure(self.sft)


def _numbers(text: str, key: str, line: int, path) -> list[float]:
    toks = text.replace(",", " ").replace(";", " ").split()
    try:
        return [float(t) for t in toks]
    except ValueError:
        bad = next(t for t in toks if not _is_float(t))
        raise SystemFileError(f"not a number: {bad!r}", key, line, path) from None


def _is_float(t: str) -> bool:
    try:
        float(t)
        return True
    except ValueError:
        return False


def _matrix(text: str, key: str, line: int, path, k: int) -> np.ndarray:
    rows = [r for r in text.split(";")]
    if len(rows) != k:
        raise SystemFileError(f"expected {k} rows separated by ';', got {len(rows)}", key, line, path)
    out = []
    for i, r in enumerate(rows):
        vals = _numbers(r, key, line, path)
        if len(vals) != k:
            raise SystemFileError(f"row {i} has {len(vals)} entries, expected {k}", key, line, path)
        out.append(vals)
    return np.array(out)


def parse_system(text: str, path: str | None = None) -> SystemDefinition:
    entries: dict[str, tuple[str, int]] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise SystemFileError("expected 'key = value'", None, no, path)
        key, val = (x.strip() for x in s.split("=", 1))
        if not _KEY.match(key):
            raise SystemFileError("unknown key", key, no, path)
        if key in entries:
            raise SystemFileError("duplicate key", key, no, path)
        entries[key] = (val, no)

    def need(key):
        if key not in entries:
            raise SystemFileError("missing key", key, 0, path)
        return entries[key]

    val, no = need("alphabet_size")
    try:
        k = int(val)
    except ValueError:
        raise SystemFileError(f"not an integer: {val!r}", "alphabet_size", no, path) from None
    if k < 1:
        raise SystemFileError("must be positive", "alphabet_size", no, path)

    val, no = need("adjacency")
    adj = _matrix(val, "adjacency", no, path, k)
    if not np.isin(adj, (0, 1)).all():
        raise SystemFileError("entries must be 0 or 1", "adjacency", no, path)
    try:
        sft = SftSystem(adj.astype(int))
    except ValueError as e:
        raise SystemFileError(str(e), "adjacency", no, path) from None

    val, no = need("split")
    parts = val.replace(" ", "").split(",")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise SystemFileError(f"expected 's_dim,u_dim', got {val!r}", "split", no, path)
    split = (int(parts[0]), int(parts[1]))
    d = sum(split)
    if d not in (2, 3):
        raise SystemFileError(f"dimension {d} not in {{2, 3}}", "split", no, path)

    gens = np.zeros((k, d, d))
    for a in range(k):
        key = f"generator.{a}"
        val, no = need(key)
        vals = _numbers(val, key, no, path)
        if len(vals) != d * d:
            raise SystemFileError(f"expected {d * d} entries, got {len(vals)}", key, no, path)
        gens[a] = np.reshape(vals, (d, d))
    extra = sorted(key for key in entries if key.startswith(("generator.", "roof."))
                   and int(key.split(".")[1]) >= k)
    if extra:
        raise SystemFileError(f"symbol out of range for alphabet_size {k}", extra[0],
                              entries[extra[0]][1], path)
    try:
        c = LinearCocycle(gens, split, entries.get("name", ("", 0))[0])
    except ValueError as e:
        key = "generator." + m.group(1) if (m := re.search(r"generator (\d+)", str(e))) else "split"
        raise SystemFileError(str(e), key, entries.get(key, ("", 0))[1], path) from None

    roof = None
    roof_keys = [f"roof.{a}" for a in range(k)]
    present = [key for key in roof_keys if key in entries]
    if present:
        if len(present) != k:
            missing = next(key for key in roof_keys if key not in entries)
            raise SystemFileError("roof must be given for every symbol", missing, 0, path)
        vals = []
        for key in roof_keys:
            v, no = entries[key]
            nums = _numbers(v, key, no, path)
            if len(nums) != 1:
                raise SystemFileError("expected one number", key, no, path)
            if nums[0] <= 0:
                raise SystemFileError("roof values must be positive", key, no, path)
            vals.append(nums[0])
        roof = RoofFunction(np.array(vals))

    markov = None
    if "markov_transition" in entries:
        val, no = entries["markov_transition"]
        p = _matrix(val, "markov_transition", no, path, k)
        try:
            markov = MarkovMeasure(p)
        except ValueError as e:
            raise SystemFileError(str(e), "markov_transition", no, path) from None
        if not markov.is_compatible(sft):
            raise SystemFileError("charges a forbidden transition", "markov_transition", no, path)
    name = entries.get("name", (Path(path).stem if path else "", 0))[0]
    return SystemDefinition(name, sft, c, roof, markov, entries.get("description", ("", 0))[0])


def load_system(path) -> SystemDefinition:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise SystemFileError(f"cannot read file: {e.strerror}", None, 0, str(p)) from None
    return parse_system(text, str(p))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_system(sd: SystemDefinition) -> str:
    k = sd.sft.alphabet_size
    lines = [f"name = {sd.name}"]
    if sd.description:
        lines.append(f"description = {sd.description}")
    lines.append(f"alphabet_size = {k}")
    lines.append("adjacency = " + "; ".join(" ".join(str(int(v)) for v in row) for row in sd.sft.adjacency))
    lines.append(f"split = {sd.cocycle.split[0]},{sd.cocycle.split[1]}")
    for a, g in enumerate(sd.cocycle.generators):
        lines.append(f"generator.{a} = " + "; ".join(" ".join(_fmt(v) for v in row) for row in g))
    if sd.roof is not None:
        lines += [f"roof.{a} = {_fmt(v)}" for a, v in enumerate(sd.roof.values)]
    if sd.markov is not None:
        lines.append("markov_transition = "
                     + "; ".join(" ".join(_fmt(v) for v in row) for row in sd.markov.transition))
    return "\n".join(lines) + "\n"
