"""Weighted empirical measures over character families, characteristic
functions, Gaussian comparison, Fejer and Beurling-Selberg smoothing,
typical-set filtering, and the end-to-end weighted central-limit
experiment.

The experiment's comparison bands are desk-scale observations, not
asymptotic statements; every tolerance lives in the test suite, and the
report carries enough metadata to reproduce a run byte for byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._special import trigamma
from .characters import CharacterTable
from .dirichlet_l import CentralValueSet, l_values_afe
from .mollifier import (
    MollifierParams,
    dirichlet_interval_piece,
    prime_sums_all,
)

__all__ = [
    "WeightedEmpiricalMeasure",
    "measure_of_interval",
    "gauss_cdf",
    "ks_distance",
    "normalized_log_values",
    "char_fn_plain",
    "char_fn_weighted",
    "fejer_K",
    "fejer_hat",
    "beurling_B",
    "SelbergFunction",
    "selberg_minorant",
    "TypicalSetReport",
    "typical_set_filter",
    "IntervalRow",
    "CLTReport",
    "clt_experiment",
    "write_interval_csv",
    "write_charfn_csv",
]

_ZERO_CUTOFF = 1e-14
_KS_GRID = np.linspace(-4.0, 4.0, 512)


def gauss_cdf(t):
    """Standard normal CDF, elementwise (accepts +-inf)."""
    if np.ndim(t) == 0:
        return 0.5 * (1.0 + math.erf(float(t) / math.sqrt(2.0)))
    arr = np.asarray(t, dtype=np.float64)
    return np.array([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in arr])


@dataclass(frozen=True)
class WeightedEmpiricalMeasure:
    """Complex-weighted point masses: one observation per character."""

    obs: np.ndarray
    wt: np.ndarray

    def __post_init__(self):
        if len(self.obs) != len(self.wt):
            raise ValueError("observation and weight sequences differ in length")

    @property
    def total(self) -> complex:
        return complex(np.sum(self.wt))

    def interval(self, lo: float, hi: float) -> complex:
        total = self.total
        if total == 0:
            raise ValueError("zero total weight")
        mask = (self.obs > lo) & (self.obs < hi)
        return complex(np.sum(self.wt[mask])) / total

    def cdf(self, t: float) -> complex:
        total = self.total
        if total == 0:
            raise ValueError("zero total weight")
        return complex(np.sum(self.wt[self.obs <= t])) / total


def measure_of_interval(measure: WeightedEmpiricalMeasure, interval: tuple[float, float]) -> complex:
    return measure.interval(interval[0], interval[1])


def ks_distance(measure: WeightedEmpiricalMeasure, grid: np.ndarray | None = None) -> float:
    """Sup over a fixed grid of |weighted CDF - standard normal CDF|.

    The weighted CDF is complex in general; the distance uses the
    complex modulus directly, so a drifting imaginary part shows up here
    rather than being silently discarded.
    """
    total = measure.total
    if total == 0:
        raise ValueError("zero total weight")
    if grid is None:
        grid = _KS_GRID
    order = np.argsort(measure.obs, kind="stable")
    cum = np.concatenate([[0.0 + 0.0j], np.cumsum(measure.wt[order])]) / total
    idx = np.searchsorted(measure.obs[order], grid, side="right")
    return float(np.max(np.abs(cum[idx] - gauss_cdf(grid))))


def normalized_log_values(
    l_values,
    variance_mode: str = "asymptotic",
    params: MollifierParams | None = None,
    q: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """log|L| scaled to unit variance, plus the exclusion mask.

    asymptotic mode divides by sqrt(0.5 log log q); empirical mode by
    sqrt(0.5 sum 1/p) over the first mollifier interval, the scale the
    desk-size experiments actually exhibit.  Central values below 1e-14
    in modulus are masked out (their weight vanishes in every weighted
    average) and land as 0.0 in the value slot.
    """
    if isinstance(l_values, CentralValueSet):
        arr = np.asarray(l_values.values[1:])
        q = l_values.q
    else:
        arr = np.asarray(l_values)
    if variance_mode == "asymptotic":
        if q is None:
            raise ValueError("asymptotic mode needs the modulus q")
        scale = math.sqrt(0.5 * math.log(math.log(q)))
    elif variance_mode == "empirical":
        if params is None:
            raise ValueError("empirical mode needs mollifier params")
        scale = math.sqrt(0.5 * params.intervals[0].reciprocal_sum())
    else:
        raise ValueError(f"unknown variance mode {variance_mode!r}")
    mags = np.abs(arr)
    excluded = ~(mags >= _ZERO_CUTOFF)  # catches NaN slots too
    out = np.zeros(len(arr))
    ok = ~excluded
    out[ok] = np.log(mags[ok]) / scale
    return out, excluded


def char_fn_plain(obs: np.ndarray, u: float, v: float = 0.0) -> complex:
    """Unweighted empirical characteristic function at frequency (u, v)."""
    obs = np.asarray(obs)
    return complex(np.mean(np.exp(1j * (u * obs.real + v * obs.imag))))


def char_fn_weighted(wt: np.ndarray, obs: np.ndarray, u: float, v: float = 0.0) -> complex:
    """Weight-normalized characteristic function at frequency (u, v)."""
    total = complex(np.sum(wt))
    if total == 0:
        raise ValueError("zero total weight")
    obs = np.asarray(obs)
    phases = np.exp(1j * (u * obs.real + v * obs.imag))
    return complex(np.sum(np.asarray(wt) * phases)) / total


# ---------------------------------------------------------------------------
# smoothing kernels

def fejer_K(x) -> np.ndarray:
    """(sin pi x / pi x)^2 with the continuous value 1 at 0."""
    return np.sinc(np.asarray(x, dtype=np.float64)) ** 2


def fejer_hat(u) -> np.ndarray:
    """Transform of the Fejer kernel: the tent max(0, 1 - |u|)."""
    return np.maximum(0.0, 1.0 - np.abs(np.asarray(u, dtype=np.float64)))


def beurling_B(x) -> np.ndarray:
    """Beurling's entire majorant of sgn(x).

    For x > 0 the two-sided pole series collapses (via the trigamma
    reflection) to 1 + (sin pi x / pi)^2 (2/x - 2 psi_1(1+x)), which is
    numerically stable; negative arguments come from the reflection
    B(-x) = 2 K(x) - B(x), and a Taylor step covers the origin.
    """
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(arr)
    tiny = np.abs(arr) < 1e-8
    out[tiny] = 1.0 + 2.0 * arr[tiny]

    def positive_branch(xs: np.ndarray) -> np.ndarray:
        sin_sq = (np.sin(math.pi * xs) / math.pi) ** 2
        return 1.0 + sin_sq * (2.0 / xs - 2.0 * trigamma(1.0 + xs))

    pos = (arr > 0) & ~tiny
    out[pos] = positive_branch(arr[pos])
    neg = (arr < 0) & ~tiny
    if np.any(neg):
        flipped = -arr[neg]
        out[neg] = 2.0 * np.sinc(flipped) ** 2 - positive_branch(flipped)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class SelbergFunction:
    """Band-limited minorant of the indicator of [a, b] at bandwidth delta.

    ``narrow`` flags delta * (b - a) < 1, where the construction is
    still valid but the minorant dips badly below the indicator.
    """

    a: float
    b: float
    delta: float
    narrow: bool

    def minorant(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return -0.5 * (beurling_B(self.delta * (self.a - x)) + beurling_B(self.delta * (x - self.b)))

    def majorant(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * (beurling_B(self.delta * (x - self.a)) + beurling_B(self.delta * (self.b - x)))

    def fejer_bound(self, x) -> np.ndarray:
        """The kernel sum dominating indicator minus minorant pointwise."""
        x = np.asarray(x, dtype=np.float64)
        return fejer_K(self.delta * (x - self.a)) + fejer_K(self.delta * (self.b - x))

    def fourier(self, n_samples: int = 1 << 20) -> tuple[np.ndarray, np.ndarray]:
        """Transform of the minorant by Shannon sampling plus FFT.

        The minorant is band-limited to [-delta, delta]; sampling at
        spacing h = 1/(3.2 delta) pushes the alias images 2.2 delta away
        from the band edge, so every reported frequency below 1.6 delta
        is alias-free and the residual there is pure spatial truncation,
        a bit under 1e-6 at the default sample count.  Returns
        (frequencies ascending, transform values).
        """
        h = 1.0 / (3.2 * self.delta)
        center = 0.5 * (self.a + self.b)
        offsets = (np.arange(n_samples) - n_samples // 2) * h
        vals = self.minorant(center + offsets)
        freqs = np.fft.fftfreq(n_samples, d=h)
        # F(xi) = h sum f(x_n) e^(-2 pi i xi x_n) with x_n = x0 + n h; the FFT
        # supplies the e^(-2 pi i k n / N) part, the grid origin the rest
        x0 = center + offsets[0]
        spectrum = h * np.fft.fft(vals) * np.exp(-2j * math.pi * freqs * x0)
        order = np.argsort(freqs)
        return freqs[order], spectrum[order]


def selberg_minorant(interval: tuple[float, float], delta: float) -> SelbergFunction:
    a, b = float(interval[0]), float(interval[1])
    if not delta > 0:
        raise ValueError("bandwidth must be positive")
    if not a < b:
        raise ValueError("interval must have positive length")
    return SelbergFunction(a=a, b=b, delta=delta, narrow=delta * (b - a) < 1.0)


# ---------------------------------------------------------------------------
# typical set

@dataclass(frozen=True)
class TypicalSetReport:
    """Mask of characters surviving the three typicality conditions."""

    kept: np.ndarray
    dropped_weight_band: int
    dropped_tail_product: int
    dropped_prime_sum: int
    weight_band: float
    tail_bound: float
    prime_sum_limit: float

    @property
    def kept_count(self) -> int:
        return int(np.sum(self.kept))


def typical_set_filter(
    table: CharacterTable,
    w_values: np.ndarray,
    interval_factors: Sequence[np.ndarray],
    p_values: np.ndarray,
    weight_band: float = 25.0,
    tail_exponent: float = 2.0,
    prime_sum_limit: float | None = None,
) -> TypicalSetReport:
    """Apply the three typicality conditions and count each exclusion.

    (1) |W| within [1/band, band]; (2) the product of the tail mollifier
    pieces (indices j >= 1) bounded by (log log q)^exponent; (3) |P|
    at most the limit, which defaults to log log log q -- callers
    normalize P however they like and pass the limit in the same units.
    Conditions are evaluated independently, so one character can count
    against several drop tallies.
    """
    if weight_band < 1:
        raise ValueError("the weight band must be at least 1")
    llq = math.log(math.log(table.q))
    tail_bound = llq**tail_exponent
    if prime_sum_limit is None:
        if llq <= 1:
            raise ValueError("log log log q undefined this small; pass prime_sum_limit")
        prime_sum_limit = math.log(llq)
    w_abs = np.abs(np.asarray(w_values))
    cond1 = (w_abs >= 1.0 / weight_band) & (w_abs <= weight_band)
    if len(interval_factors) > 1:
        tail_prod = np.ones(len(w_abs))
        for piece in interval_factors[1:]:
            tail_prod = tail_prod * np.abs(np.asarray(piece))
        cond2 = tail_prod <= tail_bound
    else:
        cond2 = np.ones(len(w_abs), dtype=bool)
    cond3 = np.abs(np.asarray(p_values)) <= prime_sum_limit
    kept = cond1 & cond2 & cond3
    return TypicalSetReport(
        kept=kept,
        dropped_weight_band=int(np.sum(~cond1)),
        dropped_tail_product=int(np.sum(~cond2)),
        dropped_prime_sum=int(np.sum(~cond3)),
        weight_band=float(weight_band),
        tail_bound=float(tail_bound),
        prime_sum_limit=float(prime_sum_limit),
    )


# ---------------------------------------------------------------------------
# the experiment

_DEFAULT_INTERVALS = ((-3.0, -2.0), (-2.0, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 2.0), (2.0, 3.0))
_DEFAULT_U_GRID = tuple(0.25 * k for k in range(1, 13))


@dataclass(frozen=True)
class IntervalRow:
    lo: float
    hi: float
    mu: complex
    mu_filtered: complex
    gauss: float

    @property
    def abs_diff(self) -> float:
        return abs(self.mu - self.gauss)


@dataclass(frozen=True)
class CLTReport:
    """Everything a weighted CLT run produced, ready for serialization."""

    q: int
    sigma_hat: float
    exclusion_count: int
    rows: tuple[IntervalRow, ...]
    u_grid: tuple[float, ...]
    psi: tuple[complex, ...]
    phi: tuple[complex, ...]
    ks_weighted: float
    ks_weighted_filtered: float
    ks_plain: float
    filter_report: TypicalSetReport
    total_weight: complex
    wall_time: float


def clt_experiment(
    table: CharacterTable,
    params: MollifierParams,
    intervals: Sequence[tuple[float, float]] = _DEFAULT_INTERVALS,
    u_grid: Sequence[float] = _DEFAULT_U_GRID,
    l_values: CentralValueSet | None = None,
    weight_band: float = 25.0,
    tail_exponent: float = 2.0,
    p_sigma_factor: float = 3.0,
) -> CLTReport:
    """Run the full weighted central-limit pipeline at one modulus.

    Observable: the real part of the mollifier-range prime sum, scaled
    by sigma_hat = sqrt(0.5 sum 1/p).  Weight: central L-value times the
    mollifier, evaluated per character.  The report carries the weighted
    interval measures raw and typical-set-filtered, both characteristic
    function tables against the Gaussian target, and grid KS distances.
    Deterministic: no sampling anywhere.
    """
    t0 = time.perf_counter()
    if l_values is None:
        l_values = l_values_afe(table, 0.5)

    pieces = [dirichlet_interval_piece(params, j) for j in range(params.J + 1)]
    piece_vals = [piece.evaluate_all(table)[1:] for piece in pieces]
    mol = piece_vals[0].copy()
    for extra in piece_vals[1:]:
        mol *= extra
    l_arr = np.asarray(l_values.values[1:])
    w = l_arr * mol

    p_raw = prime_sums_all(table, params)[1:]
    sigma_sq = 0.5 * sum(iv.reciprocal_sum() for iv in params.intervals)
    sigma_hat = math.sqrt(sigma_sq)
    obs = p_raw.real / sigma_hat

    psi = tuple(char_fn_plain(obs, u) for u in u_grid)
    phi = tuple(char_fn_weighted(w, obs, u) for u in u_grid)

    filt = typical_set_filter(
        table, w, piece_vals, obs,
        weight_band=weight_band, tail_exponent=tail_exponent,
        prime_sum_limit=p_sigma_factor,
    )

    raw_measure = WeightedEmpiricalMeasure(obs=obs, wt=w)
    kept_measure = WeightedEmpiricalMeasure(obs=obs[filt.kept], wt=w[filt.kept])
    plain_measure = WeightedEmpiricalMeasure(obs=obs, wt=np.ones(len(obs), dtype=np.complex128))

    rows = []
    for lo, hi in intervals:
        gauss = gauss_cdf(hi) - gauss_cdf(lo)
        rows.append(
            IntervalRow(
                lo=float(lo), hi=float(hi),
                mu=raw_measure.interval(lo, hi),
                mu_filtered=kept_measure.interval(lo, hi),
                gauss=gauss,
            )
        )

    exclusions = int(np.sum(~(np.abs(l_arr) >= _ZERO_CUTOFF)))
    report = CLTReport(
        q=table.q,
        sigma_hat=sigma_hat,
        exclusion_count=exclusions,
        rows=tuple(rows),
        u_grid=tuple(float(u) for u in u_grid),
        psi=psi,
        phi=phi,
        ks_weighted=ks_distance(raw_measure),
        ks_weighted_filtered=ks_distance(kept_measure),
        ks_plain=ks_distance(plain_measure),
        filter_report=filt,
        total_weight=raw_measure.total,
        wall_time=time.perf_counter() - t0,
    )
    return report


def write_interval_csv(report: CLTReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("interval_lo,interval_hi,mu_re,mu_im,gauss,abs_diff\n")
        for row in report.rows:
            fh.write(
                f"{row.lo!r},{row.hi!r},{row.mu.real!r},{row.mu.imag!r},"
                f"{row.gauss!r},{row.abs_diff!r}\n"
            )


def write_charfn_csv(u_grid: Sequence[float], values: Sequence[complex], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("u,phi_re,phi_im,target\n")
        for u, val in zip(u_grid, values):
            target = math.exp(-0.5 * u * u)
            fh.write(f"{u!r},{val.real!r},{val.imag!r},{target!r}\n")
