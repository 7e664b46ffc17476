"""Seeded synthetic datasets and their CSV form.

Randomness comes from numpy's PCG64 bit generator seeded directly with the
user seed, so a ``(model, n, seed)`` triple reproduces the same rows on any
platform with the same numpy major version.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .probability import BernoulliXorModel, GaussMixture, ValidationError

BINARY = "binary"
GAUSSIAN = "gaussian"


class DatasetFormatError(ValidationError):
    """Malformed dataset file; the message carries the offending line number."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    kind: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValidationError("x and y must be 1-D arrays of equal length")
        if self.kind not in (BINARY, GAUSSIAN):
            raise ValidationError(f"unknown dataset kind {self.kind!r}")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValidationError("labels must be 0 or 1")
        if self.kind == BINARY and not np.all((self.x == 0) | (self.x == 1)):
            raise ValidationError("binary datasets need x in {0, 1}")
        if not np.all(np.isfinite(self.x)):
            raise ValidationError("x must be finite")

    def __len__(self) -> int:
        return self.x.size

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.kind.encode())
        h.update(np.ascontiguousarray(self.x).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()

    def empirical_joint(self) -> np.ndarray:
        """2x2 table of empirical ``P(X=i, Y=j)`` (binary datasets only)."""
        if self.kind != BINARY:
            raise ValidationError("empirical_joint needs a binary dataset")
        t = np.zeros((2, 2))
        np.add.at(t, (self.x.astype(int), self.y.astype(int)), 1.0)
        return t / len(self)


def gen_binary(model: BernoulliXorModel, n: int, seed: int) -> Dataset:
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = make_rng(seed)
    x = (rng.random(n) < model.p).astype(float)
    noise = (rng.random(n) < model.q).astype(float)
    y = np.abs(x - noise)
    return Dataset(x, y, BINARY, {"model": "binary", "p": model.p, "q": model.q, "seed": seed})


def gen_gauss(model: GaussMixture, n: int, seed: int) -> Dataset:
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = make_rng(seed)
    y = (rng.random(n) < model.ptilde).astype(float)
    z = rng.standard_normal(n)
    mean = np.where(y == 1, model.mu, -model.mu)
    sd = np.where(y == 1, np.sqrt(model.var1), np.sqrt(model.var0))
    prov = {
        "model": "gauss",
        "ptilde": model.ptilde,
        "mu": model.mu,
        "var0": model.var0,
        "var1": model.var1,
        "seed": seed,
    }
    return Dataset(mean + sd * z, y, GAUSSIAN, prov)


def _fmt(v: float) -> str:
    # repr round-trips every double; integral binary values stay compact
    return str(int(v)) if float(v).is_integer() and abs(v) < 2**53 else repr(float(v))


def write_csv(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for xv, yv in zip(ds.x.tolist(), ds.y.tolist()):
            fh.write(f"{_fmt(xv)},{int(yv)}\n")


def read_csv(path: str | Path, kind: str | None = None) -> Dataset:
    """Load an ``x,y`` file. With ``kind=None`` the kind is inferred from the values."""
    xs: list[float] = []
    ys: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            raise DatasetFormatError(f"{path}: line 1: expected header 'x,y', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DatasetFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                xv, yv = float(row[0]), float(row[1])
            except ValueError as exc:
                raise DatasetFormatError(f"{path}: line {lineno}: {exc}") from None
            if yv not in (0.0, 1.0):
                raise DatasetFormatError(f"{path}: line {lineno}: label {row[1]!r} is not 0 or 1")
            if kind == BINARY and xv not in (0.0, 1.0):
                raise DatasetFormatError(f"{path}: line {lineno}: x={row[0]!r} not allowed in a binary dataset")
            xs.append(xv)
            ys.append(yv)
    if not xs:
        raise DatasetFormatError(f"{path}: dataset has no rows")
    x = np.array(xs)
    if kind is None:
        kind = BINARY if np.all((x == 0) | (x == 1)) else GAUSSIAN
    return Dataset(x, np.array(ys), kind, {"source": str(path)})
