"""OR-Library portfolio files and frontier CSV files.

OR-Library ``portN.txt`` layout::

    N
    mean_return  std_dev          (N lines)
    i  j  correlation             (1-based indices, at least every i == j)

Frontier CSV layout::

    lambda,return,variance,objective,source,weights
    0.5,0.0072,0.0011,-0.0031,NN,3:0.6;17:0.4

Weight indices in the CSV are the 0-based asset positions used everywhere
in the library; only the OR-Library file is 1-based.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, IncompleteDataError, ParseError

FRONTIER_HEADER = ("lambda", "return", "variance", "objective", "source", "weights")


@dataclass(frozen=True, eq=False)
class AssetUniverse:
    """Mean returns and covariance matrix for ``n`` assets."""

    mean_returns: np.ndarray
    covariance: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        mu = np.array(self.mean_returns, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        if mu.ndim != 1 or mu.size < 1:
            raise DomainError("mean_returns must be a non-empty vector")
        n = mu.size
        if cov.shape != (n, n):
            raise DomainError(f"covariance must be {n}x{n}, got {cov.shape}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise DomainError("non-finite value in universe")
        if not np.array_equal(cov, cov.T):
            raise DomainError("covariance is not symmetric")
        if np.any(np.diag(cov) < 0):
            raise DomainError("negative variance on the covariance diagonal")
        mu.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean_returns", mu)
        object.__setattr__(self, "covariance", cov)

    @property
    def n(self) -> int:
        return self.mean_returns.size

    def __eq__(self, other):
        if not isinstance(other, AssetUniverse):
            return NotImplemented
        return np.array_equal(self.mean_returns, other.mean_returns) and np.array_equal(
            self.covariance, other.covariance
        )

    __hash__ = None


@dataclass(frozen=True)
class FrontierRecord:
    """One point of a frontier with its provenance and sparse weights."""

    lam: float
    mean_return: float
    variance: float
    objective: float
    source: str = ""
    weights: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if not self.variance >= 0:
            raise DomainError(f"variance must be >= 0, got {self.variance}")
        seen = set()
        for idx, w in self.weights:
            if not w > 0:
                raise DomainError(f"weight for asset {idx} must be > 0, got {w}")
            if idx in seen:
                raise DomainError(f"duplicate asset index {idx} in weights")
            seen.add(idx)

    @property
    def point(self) -> tuple[float, float]:
        """The (variance, return) pair."""
        return (self.variance, self.mean_return)

    def dense_weights(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        for idx, w in self.weights:
            x[idx] = w
        return x


def _tokenised_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if tokens:
            yield lineno, tokens


def _number(token: str, lineno: int, kind=float):
    try:
        value = kind(token)
    except ValueError:
        raise ParseError(f"cannot read {token!r} as {kind.__name__}", lineno) from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", lineno)
    return value


def parse_orlib(text: str) -> AssetUniverse:
    """Build an :class:`AssetUniverse` from OR-Library portfolio text.

    Covariances are assembled as ``rho_ij * s_i * s_j``. Off-diagonal pairs
    missing from the correlation triples default to zero correlation; every
    diagonal triple must be present.
    """
    lines = _tokenised_lines(text)
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise ParseError("empty input", 1) from None
    if len(tokens) != 1:
        raise ParseError("first line must hold the asset count only", lineno)
    n = _number(tokens[0], lineno, int)
    if n < 1:
        raise DomainError(f"asset count must be >= 1, got {n}")

    mu = np.empty(n)
    sd = np.empty(n)
    for i in range(n):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise IncompleteDataError(f"expected {n} asset lines, found {i}") from None
        if len(tokens) != 2:
            raise ParseError("asset line must be 'mean_return std_dev'", lineno)
        mu[i] = _number(tokens[0], lineno)
        sd[i] = _number(tokens[1], lineno)
        if sd[i] < 0:
            raise DomainError(f"line {lineno}: negative standard deviation")

    corr = np.zeros((n, n))
    have_diag = np.zeros(n, dtype=bool)
    for lineno, tokens in lines:
        if len(tokens) != 3:
            raise ParseError("correlation line must be 'i j correlation'", lineno)
        i = _number(tokens[0], lineno, int)
        j = _number(tokens[1], lineno, int)
        rho = _number(tokens[2], lineno)
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"asset index out of range 1..{n}", lineno)
        if abs(rho) > 1:
            raise DomainError(f"line {lineno}: |correlation| > 1 ({rho})")
        corr[i - 1, j - 1] = rho
        corr[j - 1, i - 1] = rho
        if i == j:
            have_diag[i - 1] = True
    if not have_diag.all():
        missing = ", ".join(str(i + 1) for i in np.flatnonzero(~have_diag)[:10])
        raise IncompleteDataError(f"missing diagonal correlation for asset(s) {missing}")

    # outer() is exactly symmetric, so the product is too
    return AssetUniverse(mu, corr * np.outer(sd, sd))


def read_orlib(path) -> AssetUniverse:
    path = Path(path)
    universe = parse_orlib(path.read_text())
    object.__setattr__(universe, "name", path.stem)
    return universe


def _fmt(value: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(value))


def serialize_frontier(points: Iterable[FrontierRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FRONTIER_HEADER)
    for rec in points:
        weights = ";".join(f"{idx}:{_fmt(w)}" for idx, w in rec.weights)
        writer.writerow(
            [_fmt(rec.lam), _fmt(rec.mean_return), _fmt(rec.variance), _fmt(rec.objective), rec.source, weights]
        )
    return buf.getvalue()


def _parse_weights(field_text: str, lineno: int):
    pairs = []
    if not field_text.strip():
        return ()
    for item in field_text.split(";"):
        idx, sep, w = item.partition(":")
        if not sep:
            raise ParseError(f"weight entry {item!r} is not 'index:weight'", lineno)
        pairs.append((_number(idx.strip(), lineno, int), _number(w.strip(), lineno)))
    return tuple(pairs)


def parse_frontier(text: str) -> list[FrontierRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header", 1) from None
    if tuple(h.strip() for h in header) != FRONTIER_HEADER:
        raise ParseError(f"bad header {header!r}", 1)
    records = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(FRONTIER_HEADER):
            raise ParseError(f"expected {len(FRONTIER_HEADER)} fields, got {len(row)}", lineno)
        lam, ret, var, obj = (_number(cell, lineno) for cell in row[:4])
        try:
            rec = FrontierRecord(lam, ret, var, obj, row[4], _parse_weights(row[5], lineno))
        except DomainError as exc:
            raise DomainError(f"line {lineno}: {exc}") from None
        records.append(rec)
    return records


def read_frontier(path) -> list[FrontierRecord]:
    return parse_frontier(Path(path).read_text())


def write_frontier(path, points: Sequence[FrontierRecord]) -> None:
    Path(path).write_text(serialize_frontier(points))


def parse_bounds(text: str, n: int, lower: float = 0.0, upper: float = 1.0):
    """Per-asset bounds from lines ``i eps delta`` (1-based, like OR-Library).

    Assets without a line keep the scalar defaults.
    """
    lo = np.full(n, float(lower))
    hi = np.full(n, float(upper))
    for lineno, tokens in _tokenised_lines(text):
        if len(tokens) != 3:
            raise ParseError("bounds line must be 'i eps delta'", lineno)
        i = _number(tokens[0], lineno, int)
        if not 1 <= i <= n:
            raise ParseError(f"asset index out of range 1..{n}", lineno)
        lo[i - 1] = _number(tokens[1], lineno)
        hi[i - 1] = _number(tokens[2], lineno)
    return lo, hi
