"""Prime running functions, races, and prime walk / prime run lattice paths.

Phi(x; d, a) counts the n in [1, x] whose P-floor (largest prime <= n, with
P-floor(1) = 0) is congruent to a mod d.  Every n in [p_k, p_{k+1}) shares the
P-floor p_k, so the count is a gap-weighted sum over consecutive primes plus a
partial term for the gap that straddles x.  All computations here stream the
primes once; nothing proportional to x is stored.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ArgumentError
from .primes import (
    DEFAULT_SEGMENT_SIZE,
    ResidueClass,
    iter_prime_chunks,
    next_prime,
    prime_floor,
    reduced_residues,
    totient,
)

UP, DOWN, LEFT, RIGHT = (0, 1), (0, -1), (-1, 0), (1, 0)
UNIT_STEPS = {"up": UP, "down": DOWN, "left": LEFT, "right": RIGHT}

# 1 -> down, 2 -> left, 3 -> up, 4 -> right (mod 5)
DEFAULT_DIRECTIONS: dict[int, tuple[int, int]] = {1: DOWN, 2: LEFT, 3: UP, 4: RIGHT}


@dataclass(frozen=True)
class RunningTable:
    """Phi(x; d, a) for every a in 0..d-1 at ascending checkpoints x."""

    d: int
    checkpoints: tuple[int, ...]
    phi: np.ndarray = field(repr=False)
    reversed: bool = False

    def __post_init__(self):
        self.phi.setflags(write=False)

    def value(self, x: int, a: int) -> int:
        return int(self.phi[self.checkpoints.index(x), a])

    def column(self, a: int) -> np.ndarray:
        return self.phi[:, a]

    def rescaled_bias(self) -> tuple[list[int], np.ndarray]:
        """Rescaled bias (Phi - x/phi(d)) * log(x) / x for each reduced class.

        Returns the reduced residues and an array with one row per checkpoint.
        Rows for x < 3 are NaN.
        """
        residues = reduced_residues(self.d)
        x = np.asarray(self.checkpoints, dtype=np.float64)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (self.phi[:, residues] - x / totient(self.d)) * np.log(x) / x
        r[x[:, 0] < 3] = np.nan
        return residues, r

    def to_csv(self, out=None) -> str:
        """CSV with header ``x,a0,...,a{d-1}``, one exact-integer row per checkpoint."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x"] + [f"a{a}" for a in range(self.d)])
        for x, row in zip(self.checkpoints, self.phi.tolist()):
            w.writerow([x] + row)
        text = buf.getvalue()
        if out is not None:
            out.write(text)
        return text


def geometric_grid(x_max: int, points: int = 200, x_min: int = 10) -> list[int]:
    """``points`` distinct log-spaced integer checkpoints in [x_min, x_max], ending at x_max.

    Rounding collisions at the low end are nudged upward so the count is exact
    whenever the range holds that many integers.
    """
    if x_max < 1 or points < 1:
        raise ArgumentError("x_max and points must be >= 1")
    x_min = max(1, min(x_min, x_max))
    if x_max - x_min + 1 <= points:
        return list(range(x_min, x_max + 1))
    grid = np.round(np.geomspace(x_min, x_max, points)).astype(np.int64).tolist()
    grid[-1] = x_max
    for i in range(1, points):
        grid[i] = max(grid[i], grid[i - 1] + 1)
    for i in range(points - 2, -1, -1):
        grid[i] = min(grid[i], grid[i + 1] - 1)
    return grid


def _validate_checkpoints(x_max: int, d: int, checkpoints: Sequence[int]) -> tuple[int, ...]:
    if d < 2:
        raise ArgumentError(f"modulus must be >= 2, got {d}")
    cps = tuple(int(x) for x in checkpoints)
    if not cps:
        raise ArgumentError("checkpoint list is empty")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ArgumentError("checkpoints must be strictly ascending")
    if cps[0] < 1 or cps[-1] > x_max:
        raise ArgumentError(f"checkpoints must lie in [1, {x_max}]")
    return cps


def iter_gaps(
    x_max: int,
    start: int = 0,
    prev: int = 1,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Stream consecutive-prime intervals [starts[i], ends[i]) covering [prev, beyond x_max].

    The first interval is [1, 2): n = 1 has P-floor 0.  Each yielded item is
    (next_lo, starts, ends) where next_lo is where sieving resumes; the stream
    ends with the interval that contains x_max.  ``start``/``prev`` resume a
    stream from a saved position.
    """
    lo = start
    hi = x_max + 1
    if lo < hi:
        for chunk in iter_prime_chunks(lo, hi, segment_size, threads):
            lo = min(lo + segment_size, hi)
            if chunk.size == 0:
                yield lo, np.empty(0, np.int64), np.empty(0, np.int64)
                continue
            starts = np.empty_like(chunk)
            starts[0] = prev
            starts[1:] = chunk[:-1]
            prev = int(chunk[-1])
            yield lo, starts, chunk
    # close the gap that straddles x_max
    yield lo, np.array([prev], np.int64), np.array([next_prime(x_max)], np.int64)


class RunningScan:
    """Incremental state of a running-function pass; resumable via :meth:`state`."""

    def __init__(self, x_max: int, d: int, checkpoints: Sequence[int], reversed: bool = False):
        self.x_max = x_max
        self.d = d
        self.checkpoints = _validate_checkpoints(x_max, d, checkpoints)
        self.reversed = reversed
        self.acc = np.zeros(d, dtype=np.int64)
        self.rows: list[list[int]] = []
        self.next_lo = 0
        self.prev = 1

    @property
    def done(self) -> bool:
        return len(self.rows) == len(self.checkpoints)

    def state(self) -> dict:
        return {
            "next_lo": self.next_lo,
            "prev": self.prev,
            "acc": self.acc.tolist(),
            "rows": [list(r) for r in self.rows],
        }

    def restore(self, state: Mapping) -> None:
        self.next_lo = int(state["next_lo"])
        self.prev = int(state["prev"])
        self.acc = np.asarray(state["acc"], dtype=np.int64)
        self.rows = [list(map(int, r)) for r in state["rows"]]

    def _labels(self, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        if self.reversed:
            return ends % self.d
        labels = starts % self.d
        if starts.size and starts[0] == 1:
            labels[0] = 0
        return labels

    def feed(self, next_lo: int, starts: np.ndarray, ends: np.ndarray) -> None:
        self.next_lo = next_lo
        if ends.size == 0:
            return
        d = self.d
        gaps = ends - starts
        labels = self._labels(starts, ends)
        done_idx = 0
        running = self.acc.copy()
        while not self.done:
            x = self.checkpoints[len(self.rows)]
            if x >= ends[-1]:
                break
            idx = int(np.searchsorted(ends, x, side="right"))
            running += np.bincount(labels[done_idx:idx], weights=gaps[done_idx:idx], minlength=d).astype(np.int64)
            done_idx = idx
            row = running.copy()
            row[labels[idx]] += x - starts[idx] + 1
            self.rows.append(row.tolist())
        self.acc += np.bincount(labels, weights=gaps, minlength=d).astype(np.int64)
        self.prev = int(ends[-1])

    def table(self) -> RunningTable:
        if not self.done:
            raise RuntimeError("scan has not reached every checkpoint")
        return RunningTable(self.d, self.checkpoints, np.array(self.rows, dtype=np.int64), self.reversed)


def _scan(x_max, d, checkpoints, reversed, segment_size, threads) -> RunningTable:
    scan = RunningScan(x_max, d, checkpoints, reversed)
    for item in iter_gaps(x_max, segment_size=segment_size, threads=threads):
        scan.feed(*item)
        if scan.done:
            break
    return scan.table()


def running_table(
    x_max: int,
    d: int,
    checkpoints: Sequence[int],
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
) -> RunningTable:
    """Phi(x; d, a) at each checkpoint, from one streaming pass over the primes <= x_max."""
    return _scan(x_max, d, checkpoints, False, segment_size, threads)


def reversed_running_table(
    x_max: int,
    d: int,
    checkpoints: Sequence[int],
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
) -> RunningTable:
    """Phi^R(x; d, a): counts n <= x whose next prime after P-floor(n) is a mod d."""
    return _scan(x_max, d, checkpoints, True, segment_size, threads)


def running_value(x: int, cls: ResidueClass) -> int:
    return running_table(x, cls.d, [x]).value(x, cls.a)


def boundary_term(x: int, cls: ResidueClass) -> int:
    """The partial-gap term: x - P-floor(x) + 1 if P-floor(x) = a mod d, else 0.

    For x = 1 the open interval is [1, 2), labelled 0, and contributes 1.
    """
    if x < 1:
        raise ArgumentError(f"boundary term needs x >= 1, got {x}")
    pf = prime_floor(x)
    if pf % cls.d != cls.a:
        return 0
    return x - max(pf, 1) + 1


def rescaled_bias(x: int, cls: ResidueClass) -> float:
    """(Phi(x; d, a) - x/phi(d)) * log(x) / x, natural log."""
    if x < 3:
        raise ArgumentError(f"rescaled bias needs x >= 3, got {x}")
    if not cls.reduced:
        raise ArgumentError(f"{cls.a} is not a reduced residue mod {cls.d}")
    phi = running_value(x, cls)
    return (phi - x / totient(cls.d)) * math.log(x) / x


def race(x: int, d: int, a: int, b: int) -> int:
    """Phi(x; d, a) - Phi(x; d, b)."""
    ca, cb = ResidueClass.of(a, d), ResidueClass.of(b, d)
    if not (ca.reduced and cb.reduced):
        raise ArgumentError(f"race residues must be reduced mod {d}")
    t = running_table(x, d, [x])
    return t.value(x, ca.a) - t.value(x, cb.a)


# ---------------------------------------------------------------------------
# lattice paths


def _direction_table(d: int, direction_map: Mapping[int, Sequence[int]]) -> np.ndarray:
    seen = set()
    table = np.zeros((d, 2), dtype=np.int64)
    for a, step in direction_map.items():
        step = tuple(int(v) for v in step)
        if step not in UNIT_STEPS.values():
            raise ArgumentError(f"direction for residue {a} must be a unit step, got {step}")
        if step in seen:
            raise ArgumentError(f"direction {step} assigned to more than one residue")
        if not 0 <= a < d:
            raise ArgumentError(f"residue {a} must lie in [0, {d - 1}]")
        cls = ResidueClass(d, a)
        if not cls.reduced:
            raise ArgumentError(f"residue {a} is not reduced mod {d}")
        seen.add(step)
        table[cls.a] = step
    missing = [a for a in reduced_residues(d) if a not in direction_map]
    if missing:
        raise ArgumentError(f"no direction given for residues {missing} mod {d}")
    return table


def parse_direction_map(text: str) -> dict[int, tuple[int, int]]:
    """Parse ``"1:down,2:left,3:up,4:right"``."""
    out: dict[int, tuple[int, int]] = {}
    for item in text.split(","):
        try:
            a, name = item.split(":")
            a = int(a)
            step = UNIT_STEPS[name.strip().lower()]
        except (ValueError, KeyError):
            raise ArgumentError(f"bad direction map entry {item!r}") from None
        if a in out:
            raise ArgumentError(f"residue {a} listed twice")
        out[a] = step
    return out


@dataclass(frozen=True)
class LatticePath:
    """Positions of a prime walk or prime run at the sampled n.

    ``max_distance`` is the largest Euclidean distance from the origin over
    every n <= n_max, not only over the sampled rows.
    """

    mode: str
    d: int
    direction_map: dict
    n: np.ndarray = field(repr=False)
    xy: np.ndarray = field(repr=False)
    max_distance: float = 0.0

    def at(self, n: int) -> tuple[int, int]:
        i = int(np.searchsorted(self.n, n))
        if i == len(self.n) or self.n[i] != n:
            raise KeyError(n)
        return int(self.xy[i, 0]), int(self.xy[i, 1])

    @property
    def final(self) -> tuple[int, int]:
        return int(self.xy[-1, 0]), int(self.xy[-1, 1])

    def to_csv(self, out=None) -> str:
        buf = io.StringIO()
        buf.write("n,x,y\n")
        for n, (x, y) in zip(self.n.tolist(), self.xy.tolist()):
            buf.write(f"{n},{x},{y}\n")
        text = buf.getvalue()
        if out is not None:
            out.write(text)
        return text


def _samples(n_max: int, stride: int) -> np.ndarray:
    if n_max < 1:
        raise ArgumentError("n_max must be >= 1")
    if stride < 1:
        raise ArgumentError("stride must be >= 1")
    return np.arange(stride, n_max + 1, stride, dtype=np.int64)


def walk_path(
    n_max: int,
    d: int = 5,
    direction_map: Mapping[int, Sequence[int]] = DEFAULT_DIRECTIONS,
    stride: int = 1,
) -> LatticePath:
    """Prime walk: one unit step at each prime n in the direction of its class."""
    dirs = _direction_table(d, direction_map)
    samples = _samples(n_max, stride)
    xy = np.zeros((samples.size, 2), dtype=np.int64)
    pos = np.zeros(2, dtype=np.int64)
    best = 0
    done = 0
    for chunk in iter_prime_chunks(0, n_max + 1):
        if chunk.size == 0:
            continue
        cum = pos + np.cumsum(dirs[chunk % d], axis=0)
        best = max(best, int((cum**2).sum(axis=1).max()))
        top = int(np.searchsorted(samples, chunk[-1], side="right"))
        sel = samples[done:top]
        idx = np.searchsorted(chunk, sel, side="right") - 1
        xy[done:top] = np.where(idx[:, None] >= 0, cum[np.maximum(idx, 0)], pos)
        done = top
        pos = cum[-1]
    xy[done:] = pos
    return LatticePath("walk", d, dict(direction_map), samples, xy, math.sqrt(best))


def run_path(
    n_max: int,
    d: int = 5,
    direction_map: Mapping[int, Sequence[int]] = DEFAULT_DIRECTIONS,
    stride: int = 1,
) -> LatticePath:
    """Prime run: at every n move one unit in the direction of P-floor(n)'s class."""
    dirs = _direction_table(d, direction_map)
    samples = _samples(n_max, stride)
    xy = np.zeros((samples.size, 2), dtype=np.int64)
    pos = np.zeros(2, dtype=np.int64)
    best = 0
    done = 0
    for _, starts, ends in iter_gaps(n_max):
        if ends.size == 0:
            continue
        labels = starts % d
        if starts[0] == 1:
            labels[0] = 0
        steps = dirs[labels]
        # position at n = ends - 1, i.e. after walking each whole gap
        cum = pos + np.cumsum(steps * (ends - starts)[:, None], axis=0)
        inside = ends - 1 <= n_max
        if inside.any():
            best = max(best, int((cum[inside] ** 2).sum(axis=1).max()))
        top = int(np.searchsorted(samples, ends[-1] - 1, side="right"))
        sel = samples[done:top]
        idx = np.searchsorted(ends, sel, side="right")
        before = np.where(idx[:, None] > 0, cum[np.maximum(idx - 1, 0)], pos)
        xy[done:top] = before + (sel - starts[idx] + 1)[:, None] * steps[idx]
        done = top
        last_label = labels[-1]
        pos = cum[-1]
    # the final gap extends past n_max: position at n_max sits inside it
    end_pos = pos - (int(ends[-1]) - 1 - n_max) * dirs[last_label]
    best = max(best, int((end_pos**2).sum()))
    return LatticePath("run", d, dict(direction_map), samples, xy, math.sqrt(best))


def race_series(table: RunningTable, a: int, b: int) -> np.ndarray:
    return table.column(a) - table.column(b)


def iter_rows(table: RunningTable) -> Iterable[tuple[int, list[int]]]:
    return zip(table.checkpoints, table.phi.tolist())
