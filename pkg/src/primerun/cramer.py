"""The sieved ("modified") Cramer model of the primes.

Each n coprime to the sieve modulus Q is independently declared a model prime
with probability min(1, c_Q / log n), where c_Q = Q / phi(Q).  The random
running function sums, over model primes u <= x with u = a mod d, the gap
from u to the next model prime.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .bias import FactoredModulus, bias_vector, least_positive_residue
from .errors import ArgumentError, SamplingExhaustedError
from .primes import totient

DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class CramerModel:
    Q: int
    factorization: tuple[tuple[int, int], ...]
    totient: int
    prefactor: Fraction

    @classmethod
    def from_modulus(cls, Q) -> "CramerModel":
        fm = Q if isinstance(Q, FactoredModulus) else FactoredModulus.of(int(Q))
        if fm.value < 2:
            raise ArgumentError(f"sieve modulus must be >= 2, got {fm.value}")
        return cls(fm.value, fm.factors, fm.totient, Fraction(fm.value, fm.totient))

    @property
    def c(self) -> float:
        return float(self.prefactor)

    @property
    def modulus(self) -> FactoredModulus:
        return FactoredModulus(self.Q, self.factorization)

    def coprime(self, n: np.ndarray) -> np.ndarray:
        return np.gcd(n, self.Q) == 1

    def unsieved(self, lo: int, hi: int) -> np.ndarray:
        """Integers in [lo, hi) coprime to Q."""
        n = np.arange(max(lo, 1), hi, dtype=np.int64)
        return n[self.coprime(n)]

    def probabilities(self, n: np.ndarray) -> np.ndarray:
        """min(1, c_Q/log n) for n coprime to Q, 0 otherwise; 1 whenever log n <= c_Q."""
        n = np.asarray(n, dtype=np.int64)
        logn = np.log(np.maximum(n, 1).astype(np.float64))
        c = self.c
        with np.errstate(divide="ignore"):
            p = np.where(logn <= c, 1.0, c / logn)
        return np.where(self.coprime(n), p, 0.0)


def bernoulli_prob(n: int, model: CramerModel) -> float:
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    return float(model.probabilities(np.array([n]))[0])


def trial_seed(seed: int, trial: int) -> int:
    """64-bit seed for one trial, derived from the run seed and trial index."""
    ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class SampleSequence:
    """Model primes <= x_max plus the first model prime beyond x_max."""

    x_max: int
    seed: int
    mc_primes: np.ndarray = field(repr=False)
    overshoot: int
    model: CramerModel

    @classmethod
    def from_positions(cls, positions, x_max: int, model: CramerModel, seed: int = 0) -> "SampleSequence":
        """Build a sequence from explicit model-prime positions (for hand-checked cases)."""
        pos = np.asarray(sorted(positions), dtype=np.int64)
        if (np.gcd(pos, model.Q) != 1).any():
            raise ArgumentError("model primes must be coprime to Q")
        inside = pos[pos <= x_max]
        beyond = pos[pos > x_max]
        if beyond.size == 0:
            raise ArgumentError("need at least one position beyond x_max to close the last gap")
        return cls(x_max, seed, inside, int(beyond[0]), model)


def sample_sequence(x_max: int, model: CramerModel, seed: int) -> SampleSequence:
    """Draw model primes up to x_max, then keep drawing until one more appears.

    The forward search stops at x_max + ceil(1000 log x_max).
    """
    if x_max < 2:
        raise ArgumentError(f"x_max must be >= 2, got {x_max}")
    rng = _rng(seed)
    n = model.unsieved(1, x_max + 1)
    mc = n[rng.random(n.size) < model.probabilities(n)]
    cap = x_max + math.ceil(1000 * math.log(x_max))
    lo, block = x_max + 1, 256
    while lo <= cap:
        hi = min(lo + block, cap + 1)
        cand = model.unsieved(lo, hi)
        hit = cand[rng.random(cand.size) < model.probabilities(cand)]
        if hit.size:
            return SampleSequence(x_max, seed, mc, int(hit[0]), model)
        lo, block = hi, block * 2
    raise SamplingExhaustedError(f"no model prime in ({x_max}, {cap}]")


def _check_progression(model: CramerModel, d: int, a: int) -> int:
    if d < 2 or model.Q % d:
        raise ArgumentError(f"d={d} must divide the sieve modulus Q={model.Q}")
    if math.gcd(a, d) != 1:
        raise ArgumentError(f"{a} is not a reduced residue mod {d}")
    return a % d


def conditional_gaps(seq: SampleSequence) -> tuple[np.ndarray, np.ndarray]:
    """(u, W_u) for every model prime u <= x_max."""
    u = seq.mc_primes
    nxt = np.append(u[1:], seq.overshoot)
    return u, nxt - u


def phi_tilde(seq: SampleSequence, d: int, a: int) -> int:
    """Sum of conditional gaps W_u over model primes u <= x_max with u = a mod d.

    A gap that opens at u <= x_max counts in full even when it closes past x_max.
    """
    a = _check_progression(seq.model, d, a)
    u, w = conditional_gaps(seq)
    return int(w[u % d == a].sum())


def _window(p_min: float, eps: float) -> int:
    if p_min >= 1.0:
        return 1
    return math.ceil(math.log(eps) / math.log1p(-p_min)) + 2


def expected_w_many(us: np.ndarray, model: CramerModel, eps: float = DEFAULT_EPS) -> np.ndarray:
    """E[W_u] for each unsieved u, from the exact series truncated at survival < eps.

    E[W_u] = p_u * sum_{l >= 1} (v_l - u) p_{v_l} prod_{j < l} (1 - p_{v_j}),
    where v_1 < v_2 < ... are the unsieved integers after u.
    """
    if not 0 < eps < 1:
        raise ArgumentError("eps must lie in (0, 1)")
    us = np.asarray(us, dtype=np.int64)
    if us.size == 0:
        return np.empty(0)
    if not model.coprime(us).all():
        raise ArgumentError("every u must be coprime to Q")
    u_max = int(us.max())
    L = 8
    while True:
        # unsieved gaps are at most Q, so L steps stay below u_max + L*Q
        top = u_max + (L + 1) * model.Q
        p_min = min(1.0, model.c / math.log(top))
        need = _window(p_min, eps)
        if need <= L:
            break
        L = need
    U = model.unsieved(int(us.min()), top + 1)
    P = model.probabilities(U)
    pos = np.searchsorted(U, us)
    out = np.empty(us.size)
    offs = np.arange(1, L + 1)
    rows = max(1, 2_000_000 // L)
    for i in range(0, us.size, rows):
        idx = pos[i : i + rows, None] + offs
        v = U[idx]
        pv = P[idx]
        surv = np.cumprod(1.0 - pv, axis=1)
        prior = np.empty_like(surv)
        prior[:, 0] = 1.0
        prior[:, 1:] = surv[:, :-1]
        terms = np.where(prior >= eps, (v - us[i : i + rows, None]) * pv * prior, 0.0)
        out[i : i + rows] = P[pos[i : i + rows]] * terms.sum(axis=1)
    return out


def expected_w(u: int, model: CramerModel, eps: float = DEFAULT_EPS) -> float:
    if u < 2 or math.gcd(u, model.Q) != 1:
        raise ArgumentError(f"u={u} must be >= 2 and coprime to Q={model.Q}")
    return float(expected_w_many(np.array([u]), model, eps)[0])


def expected_w_two_term(u: int, model: CramerModel) -> float:
    """c_Q + (c_Q^2/log u) * (Q^-1 sum_t <t - s>_Q - (phi(Q) + 1)/2), s = u mod Q.

    The first two terms of the large-u expansion of E[W_u]; the remainder is
    O(1/log^2 u).
    """
    c = model.c
    s = u % model.Q
    ts = model.unsieved(1, model.Q + 1)
    gap_sum = sum(least_positive_residue(int(t) - s, model.Q) for t in ts)
    return c + c * c / math.log(u) * (gap_sum / model.Q - (model.totient + 1) / 2)


def expected_phi_tilde(
    x: int,
    model: CramerModel,
    d: int,
    a: int,
    mode: str = "series",
    eps: float = DEFAULT_EPS,
) -> float:
    """E[Phi~_Q(x; d, a)].

    ``series`` sums the truncated exact series for E[W_u] over u <= x;
    ``asymptotic`` returns x/phi(d) + R_Q(d; a) x/log x with the exact bias constant.
    """
    a = _check_progression(model, d, a)
    if mode == "series":
        us = model.unsieved(1, x + 1)
        us = us[us % d == a]
        return float(expected_w_many(us, model, eps).sum())
    if mode == "asymptotic":
        R = bias_vector(model.modulus, d)[a]
        return x / totient(d) + float(R) * x / math.log(x)
    raise ArgumentError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class TrialStats:
    n_trials: int
    values: np.ndarray = field(repr=False)
    mean: float
    variance: Optional[float]

    @classmethod
    def from_values(cls, values) -> "TrialStats":
        v = np.asarray(values, dtype=np.int64)
        if v.size == 0:
            raise ArgumentError("no trial values")
        var = float(v.var(ddof=1)) if v.size >= 2 else None
        return cls(int(v.size), v, float(v.mean()), var)

    @property
    def standard_error(self) -> Optional[float]:
        return None if self.variance is None else math.sqrt(self.variance / self.n_trials)


def run_trials(x: int, model: CramerModel, d: int, a: int, n_trials: int, seed: int, threads: int = 1) -> TrialStats:
    """Phi~ from ``n_trials`` independent sequences; trial i uses trial_seed(seed, i)."""
    a = _check_progression(model, d, a)
    if n_trials < 1:
        raise ArgumentError("n_trials must be >= 1")

    def one(i: int) -> int:
        return phi_tilde(sample_sequence(x, model, trial_seed(seed, i)), d, a)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(n_trials)))
    else:
        values = [one(i) for i in range(n_trials)]
    return TrialStats.from_values(values)


def monte_carlo_stats(
    x: int, model: CramerModel, d: int, a: int, n_trials: int, seed: int, threads: int = 1
) -> TrialStats:
    if n_trials < 2:
        raise ArgumentError("monte_carlo_stats needs n_trials >= 2 for a variance")
    return run_trials(x, model, d, a, n_trials, seed, threads)


def stats_json(stats: TrialStats, x: int, model: CramerModel, d: int, a: int, seed: int, **extra) -> str:
    doc = {
        "x": x,
        "Q": model.Q,
        "d": d,
        "a": a,
        "n_trials": stats.n_trials,
        "mean": stats.mean,
        "variance": stats.variance,
        "seed": seed,
    }
    if stats.variance is None:
        doc["variance_omitted"] = "fewer than 2 trials"
    doc.update(extra)
    return json.dumps(doc, indent=2) + "\n"


def trials_csv(stats: TrialStats) -> str:
    lines = ["trial,phi_tilde"] + [f"{i},{v}" for i, v in enumerate(stats.values.tolist())]
    return "\n".join(lines) + "\n"
