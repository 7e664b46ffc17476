"""Serialized forms shared by the command line: mechanisms, tradeoff rows, D grids."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .gaussian import GaussMechanism
from .probability import BinaryMechanism, MechanismKind, ValidationError

TRADEOFF_FIELDS = ("D", "source", "map_accuracy", "mi_nats", "mech_json", "elapsed_ms", "seed")
SOURCES = ("theory", "trained")

# mechanism JSON discriminators
KIND_BINARY_PDD = "binary-pdd"
KIND_BINARY_PDI = "binary-pdi"
KIND_GAUSS = "gauss"
_FIELDS = {
    KIND_BINARY_PDD: ("s00", "s01", "s10", "s11"),
    KIND_BINARY_PDI: ("s0", "s1"),
    KIND_GAUSS: ("beta0", "beta1", "gamma0", "gamma1"),
}


class MechanismFormatError(ValidationError):
    """Bad mechanism document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class GridError(ValueError):
    pass


def parse_d_grid(text: str) -> list[float]:
    """``start:end:step`` (end inclusive within 1e-12) or a single value."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise GridError(f"bad D grid {text!r}; expected start:end:step") from None
    if len(nums) == 1:
        nums = [nums[0], nums[0], 1.0]
    if len(nums) != 3 or not all(math.isfinite(v) for v in nums):
        raise GridError(f"bad D grid {text!r}; expected start:end:step")
    start, end, step = nums
    if start < 0:
        raise GridError("D grid must start at a nonnegative value")
    if step <= 0:
        raise GridError("D grid step must be positive")
    if end < start - 1e-12:
        raise GridError(f"D grid {text!r} is empty")
    count = int(math.floor((end - start + 1e-12) / step)) + 1
    # rounding keeps grid points equal to their decimal spelling (0.3, not 0.30000000000000004)
    return [round(start + k * step, 12) for k in range(count)]


def mechanism_to_dict(mech) -> dict:
    if isinstance(mech, GaussMechanism):
        return {"kind": KIND_GAUSS, **{k: getattr(mech, k) for k in _FIELDS[KIND_GAUSS]}}
    if isinstance(mech, BinaryMechanism):
        if mech.kind is MechanismKind.PDI:
            return {"kind": KIND_BINARY_PDI, "s0": mech.s00, "s1": mech.s10}
        return {"kind": KIND_BINARY_PDD, **{k: getattr(mech, k) for k in _FIELDS[KIND_BINARY_PDD]}}
    raise TypeError(f"not a mechanism: {mech!r}")


def mechanism_from_dict(doc, root: str = "mechanism"):
    if not isinstance(doc, dict):
        raise MechanismFormatError(root, "expected a JSON object")
    kind = doc.get("kind")
    if kind not in _FIELDS:
        raise MechanismFormatError(f"{root}.kind", f"expected one of {sorted(_FIELDS)}, got {kind!r}")
    vals = {}
    for name in _FIELDS[kind]:
        path = f"{root}.{name}"
        if name not in doc:
            raise MechanismFormatError(path, "missing field")
        v = doc[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise MechanismFormatError(path, f"expected a finite number, got {v!r}")
        if kind != KIND_GAUSS and not 0.0 <= v <= 1.0:
            raise MechanismFormatError(path, f"{v!r} is not a probability")
        if kind == KIND_GAUSS and v < 0:
            raise MechanismFormatError(path, f"{v!r} must be nonnegative")
        vals[name] = float(v)
    extra = set(doc) - set(_FIELDS[kind]) - {"kind"}
    if extra:
        raise MechanismFormatError(f"{root}.{sorted(extra)[0]}", "unknown field")
    if kind == KIND_GAUSS:
        return GaussMechanism(**vals)
    if kind == KIND_BINARY_PDI:
        return BinaryMechanism.pdi(vals["s0"], vals["s1"])
    return BinaryMechanism.pdd(**vals)


def mechanism_to_json(mech) -> str:
    return json.dumps(mechanism_to_dict(mech), sort_keys=True)


def mechanism_from_json(text: str, root: str = "mechanism"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MechanismFormatError(root, f"invalid JSON ({exc})") from None
    return mechanism_from_dict(doc, root)


def load_mechanism(path: str | Path):
    return mechanism_from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TradeoffPoint:
    D: float
    source: str
    map_accuracy: float
    mechanism: object
    mi_nats: float | None = None
    elapsed_ms: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if not (self.D >= 0):
            raise ValidationError(f"D={self.D!r} must be nonnegative")
        if not 0.0 <= self.map_accuracy <= 1.0 + 1e-12:
            raise ValidationError(f"map_accuracy={self.map_accuracy!r} outside [0, 1]")
        if self.source not in SOURCES:
            raise ValidationError(f"source must be one of {SOURCES}")

    def row(self) -> list[str]:
        return [
            repr(float(self.D)),
            self.source,
            repr(float(self.map_accuracy)),
            "" if self.mi_nats is None else repr(float(self.mi_nats)),
            mechanism_to_json(self.mechanism),
            f"{self.elapsed_ms:.3f}",
            "" if self.seed is None else str(self.seed),
        ]


def write_tradeoff_csv(points, path: str | Path, append: bool = False) -> None:
    path = Path(path)
    fresh = not (append and path.exists() and path.stat().st_size > 0)
    if not fresh:
        read_tradeoff_csv(path)  # refuse to append to a file with another schema
    with open(path, "w" if fresh else "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(TRADEOFF_FIELDS)
        for pt in points:
            w.writerow(pt.row())


def read_tradeoff_csv(path: str | Path) -> list[TradeoffPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRADEOFF_FIELDS:
            raise ValidationError(f"{path}: line 1: expected header {','.join(TRADEOFF_FIELDS)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRADEOFF_FIELDS):
                raise ValidationError(f"{path}: line {lineno}: expected {len(TRADEOFF_FIELDS)} fields")
            try:
                out.append(
                    TradeoffPoint(
                        D=float(row[0]),
                        source=row[1],
                        map_accuracy=float(row[2]),
                        mi_nats=float(row[3]) if row[3] else None,
                        mechanism=mechanism_from_json(row[4], root=f"line {lineno}.mech_json"),
                        elapsed_ms=float(row[5]),
                        seed=int(row[6]) if row[6] else None,
                    )
                )
            except ValueError as exc:
                if isinstance(exc, MechanismFormatError):
                    raise
                raise ValidationError(f"{path}: line {lineno}: {exc}") from None
        return out
