"""Windowed arithmetic-regularity certification of bounded complex sequences.

A sequence is almost periodic exactly when for every eps > 0 there are
M >= 1 and delta > 0 such that for all k, m, n: if |u_{i+m} - u_i| < delta
and |u_{i+n} - u_i| < delta for every i in [k-M, k+M], then
|u_{k+m+n} - u_k| < eps.  The order-2 analogue characterizes 2-step
sequences: the hypothesis asks the six conditions at shifts m, n, m+n,
p, m+p, n+p and the conclusion is |u_{k+m+n+p} - u_k| < eps.

The tests here scan a finite window, so verdicts are window-relative:
"no violation in window" is evidence, not proof.  The k range is
clipped so every accessed index exists; there is no wraparound or
padding.  Reports expose the number of hypothesis-satisfying tuples so
vacuous passes are visible.

Engine: for each shift s the hypothesis condition defines a boolean
mask over k, computed in one pass (difference array, then a
monotone-deque sliding maximum).  Masks are memoized per shift value,
packed into byte arrays, and combined per shift tuple with bitwise
ANDs, so the per-tuple work is a handful of vectorized byte operations
instead of a loop over k and i.  ``naive_test`` is the independent
oracle: the same semantics as literal nested loops.
"""

from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .nilsequence import SequenceSample

__all__ = [
    "RegularityParams",
    "RegularityReport",
    "Violation",
    "CalibrationResult",
    "ShiftMetricResult",
    "shift_mask",
    "test_order1",
    "test_order2",
    "run_test",
    "naive_test",
    "calibrate",
    "shift_metric",
]


@dataclass(frozen=True)
class RegularityParams:
    """Window-relative regularity test parameters.

    ``k_range`` optionally restricts the base indices k (inclusive
    bounds); it is intersected with the largest range for which every
    accessed index k +- M +- shifts stays inside the sample window.
    """

    order: int
    eps: float
    delta: float
    M: int
    shift_max: int
    k_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if not (self.eps > 0 and self.delta > 0):
            raise ValueError("eps and delta must be positive")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if self.shift_max < 1:
            raise ValueError("shift_max must be >= 1")
        if self.k_range is not None and self.k_range[0] > self.k_range[1]:
            raise ValueError("empty k_range")

    @property
    def margin(self) -> int:
        """Distance from the window edge needed so every access is in range."""
        s = self.shift_max
        if self.order == 1:
            return max(self.M + s, 2 * s)
        return max(self.M + 2 * s, 3 * s)


@dataclass(frozen=True)
class Violation:
    """One hypothesis-satisfying tuple whose conclusion fails.

    ``gap`` is |u_{k + total shift} - u_k| - eps >= 0.  ``p`` is None
    for order-1 tests.
    """

    k: int
    m: int
    n: int
    p: int | None
    gap: float

    def as_tuple(self):
        return (self.k, self.m, self.n, self.p, self.gap)


@dataclass
class RegularityReport:
    """Scan outcome: violations plus non-vacuity accounting.

    ``hypothesis_count`` counts (k, shifts) combinations satisfying the
    hypothesis (each had its conclusion checked); ``scanned`` counts
    shift tuples examined; ``vacuous`` flags hypothesis_count == 0.
    """

    violations: list[Violation]
    hypothesis_count: int
    scanned: int
    elapsed_ms: int
    vacuous: bool
    k_lo: int = 0
    k_hi: int = -1

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "violations": [
                {"k": v.k, "m": v.m, "n": v.n, "p": v.p, "gap": v.gap}
                for v in self.violations
            ],
            "hypothesis_count": self.hypothesis_count,
            "scanned": self.scanned,
            "vacuous": self.vacuous,
            "k_lo": self.k_lo,
            "k_hi": self.k_hi,
        }
        if include_timing:
            out["elapsed_ms"] = self.elapsed_ms
        return out


def _effective_k_range(u: SequenceSample, params: RegularityParams) -> tuple[int, int]:
    lo = u.n_min + params.margin
    hi = u.n_max - params.margin
    if params.k_range is not None:
        lo = max(lo, params.k_range[0])
        hi = min(hi, params.k_range[1])
    if lo > hi:
        raise ValueError(
            f"no valid base indices: window [{u.n_min}, {u.n_max}] with margin "
            f"{params.margin} leaves nothing of k_range {params.k_range}"
        )
    return lo, hi


def _sliding_max(d: np.ndarray, width: int) -> np.ndarray:
    """Maximum over each full width-window of d via a monotone deque."""
    out = np.empty(len(d) - width + 1, dtype=np.float64)
    dq: deque[int] = deque()
    for i in range(len(d)):
        v = d[i]
        while dq and d[dq[-1]] <= v:
            dq.pop()
        dq.append(i)
        if dq[0] <= i - width:
            dq.popleft()
        if i >= width - 1:
            out[i - width + 1] = d[dq[0]]
    return out


def shift_mask(u: SequenceSample, s: int, delta: float, M: int) -> np.ndarray:
    """Boolean array over u's indices: True at k when the shift-s condition holds.

    mask[k - u.n_min] is True iff max over i in [k-M, k+M] of
    |u_{i+s} - u_i| < delta, with every access in range; entries whose
    window would leave the sample are False.
    """
    L = len(u.values)
    if M < 0:
        raise ValueError("M must be >= 0")
    i_lo = max(0, -s)          # offsets into values
    i_hi = (L - 1) - max(0, s)
    width = 2 * M + 1
    if i_hi - i_lo + 1 < width:
        raise ValueError(f"shift {s} with M={M} leaves no computable window")
    d = np.abs(u.values[i_lo + s : i_hi + s + 1] - u.values[i_lo : i_hi + 1])
    win_max = _sliding_max(d, width)
    mask = np.zeros(L, dtype=bool)
    k_start = i_lo + M
    mask[k_start : k_start + len(win_max)] = win_max < delta
    return mask


# ---------------------------------------------------------------------------
# Packed-mask engine
# ---------------------------------------------------------------------------


class _Engine:
    def __init__(self, u: SequenceSample, params: RegularityParams):
        self.u = u
        self.params = params
        self.lo, self.hi = _effective_k_range(u, params)
        self.nbits = self.hi - self.lo + 1
        self._mask_cache: dict[int, np.ndarray] = {}
        vals = u.values
        base = self.lo - u.n_min
        self._window_vals = vals
        self._base_slice = vals[base : base + self.nbits]
        self._base_offset = base

    def packed_mask(self, s: int) -> np.ndarray:
        if s not in self._mask_cache:
            full = shift_mask(self.u, s, self.params.delta, self.params.M)
            rel = full[self._base_offset : self._base_offset + self.nbits]
            self._mask_cache[s] = np.packbits(rel)
        return self._mask_cache[s]

    def packed_viol(self, q: int) -> np.ndarray:
        shifted = self._window_vals[
            self._base_offset + q : self._base_offset + q + self.nbits
        ]
        bad = np.abs(shifted - self._base_slice) >= self.params.eps
        return np.packbits(bad)

    def bits_to_ks(self, packed: np.ndarray) -> np.ndarray:
        bits = np.unpackbits(packed, count=self.nbits)
        return self.lo + np.flatnonzero(bits)

    def gap(self, k: int, q: int) -> float:
        i = k - self.u.n_min
        return float(abs(self._window_vals[i + q] - self._window_vals[i]) - self.params.eps)


def _scan_order2_block(eng: _Engine, m_values, S: int):
    PM = np.vstack([eng.packed_mask(s) for s in range(-2 * S, 2 * S + 1)])
    VQ = np.vstack([eng.packed_viol(q) for q in range(-3 * S, 3 * S + 1)])
    off2, off3 = 2 * S, 3 * S
    p_rows = PM[S : 3 * S + 1]  # masks for p in [-S, S]
    violations: list[Violation] = []
    hyp_total = 0
    scanned = 0
    span = range(-S, S + 1)
    for m in m_values:
        Am = PM[m + off2]
        for n in span:
            scanned += 2 * S + 1
            A = Am & PM[n + off2] & PM[m + n + off2]
            if not A.any():
                continue
            block = p_rows & PM[m + off2 - S : m + off2 + S + 1]
            block &= PM[n + off2 - S : n + off2 + S + 1]
            block &= A[None, :]
            hyp_total += int(np.bitwise_count(block).sum())
            viol = block & VQ[m + n + off3 - S : m + n + off3 + S + 1]
            if viol.any():
                for p_idx in np.flatnonzero(viol.any(axis=1)):
                    p = p_idx - S
                    q = m + n + p
                    for k in eng.bits_to_ks(viol[p_idx]):
                        violations.append(Violation(int(k), m, n, int(p), eng.gap(int(k), q)))
    return violations, hyp_total, scanned


def _scan_order1_block(eng: _Engine, m_values, S: int):
    PM = np.vstack([eng.packed_mask(s) for s in range(-S, S + 1)])
    VQ = np.vstack([eng.packed_viol(q) for q in range(-2 * S, 2 * S + 1)])
    off1, off2 = S, 2 * S
    n_rows = PM
    violations: list[Violation] = []
    hyp_total = 0
    scanned = 0
    for m in m_values:
        scanned += 2 * S + 1
        block = n_rows & PM[m + off1][None, :]
        hyp_total += int(np.bitwise_count(block).sum())
        viol = block & VQ[m + off2 - S : m + off2 + S + 1]
        if viol.any():
            for n_idx in np.flatnonzero(viol.any(axis=1)):
                n = n_idx - S
                q = m + n
                for k in eng.bits_to_ks(viol[n_idx]):
                    violations.append(Violation(int(k), m, int(n), None, eng.gap(int(k), q)))
    return violations, hyp_total, scanned


def _run_engine(u: SequenceSample, params: RegularityParams, workers: int = 1) -> RegularityReport:
    t0 = time.monotonic()
    eng = _Engine(u, params)
    S = params.shift_max
    scan = _scan_order2_block if params.order == 2 else _scan_order1_block
    all_m = list(range(-S, S + 1))
    if workers > 1 and len(all_m) > 1:
        chunks = [all_m[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ms: scan(eng, ms, S), chunks))
    else:
        parts = [scan(eng, all_m, S)]
    violations = [v for part in parts for v in part[0]]
    violations.sort(key=lambda v: (v.m, v.n, v.p if v.p is not None else 0, v.k))
    hyp = sum(part[1] for part in parts)
    scanned = sum(part[2] for part in parts)
    elapsed = int((time.monotonic() - t0) * 1000)
    return RegularityReport(
        violations=violations,
        hypothesis_count=hyp,
        scanned=scanned,
        elapsed_ms=elapsed,
        vacuous=(hyp == 0),
        k_lo=eng.lo,
        k_hi=eng.hi,
    )


def test_order2(u: SequenceSample, params: RegularityParams, workers: int = 1) -> RegularityReport:
    """Order-2 regularity scan with the packed-mask engine."""
    if params.order != 2:
        raise ValueError("params.order must be 2")
    return _run_engine(u, params, workers)


def test_order1(u: SequenceSample, params: RegularityParams, workers: int = 1) -> RegularityReport:
    """Order-1 (almost periodicity) regularity scan with the packed-mask engine."""
    if params.order != 1:
        raise ValueError("params.order must be 1")
    return _run_engine(u, params, workers)


def run_test(u: SequenceSample, params: RegularityParams, workers: int = 1) -> RegularityReport:
    """Dispatch on params.order."""
    return test_order2(u, params, workers) if params.order == 2 else test_order1(u, params, workers)


def naive_test(u: SequenceSample, params: RegularityParams) -> RegularityReport:
    """Oracle with literal loop semantics; identical reports to the engine."""
    t0 = time.monotonic()
    lo, hi = _effective_k_range(u, params)
    vals = u.values
    n0 = u.n_min
    S = params.shift_max
    M = params.M
    delta = params.delta
    eps = params.eps

    def cond(k: int, s: int) -> bool:
        for i in range(k - M, k + M + 1):
            if abs(vals[i + s - n0] - vals[i - n0]) >= delta:
                return False
        return True

    violations: list[Violation] = []
    hyp = 0
    scanned = 0
    span = range(-S, S + 1)
    if params.order == 2:
        for m in span:
            for n in span:
                for p in span:
                    scanned += 1
                    shifts = (m, n, m + n, p, m + p, n + p)
                    q = m + n + p
                    for k in range(lo, hi + 1):
                        if all(cond(k, s) for s in shifts):
                            hyp += 1
                            gap = abs(vals[k + q - n0] - vals[k - n0]) - eps
                            if gap >= 0:
                                violations.append(Violation(k, m, n, p, float(gap)))
    else:
        for m in span:
            for n in span:
                scanned += 1
                q = m + n
                for k in range(lo, hi + 1):
                    if cond(k, m) and cond(k, n):
                        hyp += 1
                        gap = abs(vals[k + q - n0] - vals[k - n0]) - eps
                        if gap >= 0:
                            violations.append(Violation(k, m, n, None, float(gap)))
    elapsed = int((time.monotonic() - t0) * 1000)
    return RegularityReport(
        violations=violations,
        hypothesis_count=hyp,
        scanned=scanned,
        elapsed_ms=elapsed,
        vacuous=(hyp == 0),
        k_lo=lo,
        k_hi=hi,
    )


@dataclass
class CalibrationResult:
    """Best (M, delta) for a target eps, with the winning report."""

    M: int
    delta: float
    report: RegularityReport
    entries: list[dict] = field(default_factory=list)


def calibrate(
    u: SequenceSample,
    eps: float,
    M_grid,
    delta_grid,
    shift_max: int,
    order: int = 2,
    k_range: tuple[int, int] | None = None,
    workers: int = 1,
) -> CalibrationResult:
    """Search the (M, delta) grid for witnesses of the regularity property.

    Returns the zero-violation pair maximizing hypothesis_count; if
    none, the pair with fewest violations.  Ties prefer smaller M, then
    larger delta.
    """
    M_grid = list(M_grid)
    delta_grid = list(delta_grid)
    if not M_grid or not delta_grid:
        raise ValueError("calibration grids must be nonempty")
    entries = []
    best = None  # (key tuple, M, delta, report)
    for M in M_grid:
        for delta in delta_grid:
            params = RegularityParams(
                order=order, eps=eps, delta=delta, M=M, shift_max=shift_max, k_range=k_range
            )
            report = run_test(u, params, workers)
            nviol = len(report.violations)
            entries.append(
                {
                    "M": M,
                    "delta": delta,
                    "violations": nviol,
                    "hypothesis_count": report.hypothesis_count,
                    "vacuous": report.vacuous,
                }
            )
            key = (
                1 if nviol == 0 else 0,
                report.hypothesis_count if nviol == 0 else -nviol,
                -M,
                delta,
            )
            if best is None or key > best[0]:
                best = (key, M, delta, report)
    return CalibrationResult(M=best[1], delta=best[2], report=best[3], entries=entries)


@dataclass(frozen=True)
class ShiftMetricResult:
    """Truncated orbit metric between two sequences, with its truncation bound."""

    value: float
    tail: int
    truncation_bound: float


def shift_metric(u: SequenceSample, v: SequenceSample, tail: int) -> ShiftMetricResult:
    """Truncated sum over |n| <= tail of 2^-|n| |u_n - v_n|.

    The omitted tail of the untruncated sum is at most
    2^(1-tail) * sup|u - v| (sup taken over the shared window).
    """
    if u.n_min != v.n_min or len(u.values) != len(v.values):
        raise ValueError("sequences must share the same index window")
    if tail < 0 or -tail < u.n_min or tail > u.n_max:
        raise ValueError(f"tail {tail} outside window [{u.n_min}, {u.n_max}]")
    diffs = np.abs(u.values - v.values)
    ns = u.indices
    sel = np.abs(ns) <= tail
    weights = np.exp2(-np.abs(ns[sel]).astype(np.float64))
    value = float(np.sum(weights * diffs[sel]))
    bound = float(2.0 ** (1 - tail) * diffs.max())
    return ShiftMetricResult(value=value, tail=tail, truncation_bound=bound)
