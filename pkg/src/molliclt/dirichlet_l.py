"""Central values of Dirichlet L-functions to prime modulus.

Two independent evaluation routes, kept deliberately separate so each
can audit the other:

* an oracle built on the Hurwitz zeta function,
  L(s, chi) = q^(-s) * sum over r of chi(r) zeta(s, r/q),
  exact up to Euler-Maclaurin truncation, cost O(q) per character class;

* a smoothed approximate functional equation whose two sums are cut by
  regularized upper incomplete gamma factors, cost O(sqrt(q)) terms per
  character and one batch transform for all characters at once.

Also here: functional-equation residuals of a computed value set, a
small binary cache, and the averaged twisted second moment together
with its two-term asymptotic prediction.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._special import gamma, upper_regularized_gamma
from .characters import CharacterTable, batch_character_sums, gauss_sum, root_numbers

__all__ = [
    "hurwitz_zeta",
    "zeta",
    "CentralValueSet",
    "l_values_oracle",
    "l_values_afe",
    "afe_l_value",
    "root_number",
    "completed_l_values",
    "fe_residual_stats",
    "save_l_values",
    "load_l_values",
    "TwistedSecondMoment",
    "twisted_second_moment_empirical",
    "twisted_second_moment",
]

# B_2 .. B_26 as exact rationals; the last one only feeds the error estimate.
_BERNOULLI = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
    Fraction(854513, 138),
    Fraction(-236364091, 2730),
    Fraction(8553103, 6),
)
_EM_ORDER = 12  # correction terms actually summed; the 13th is the sentinel


def _hurwitz_fixed(s: complex, x: np.ndarray, n_head: int) -> tuple[np.ndarray, np.ndarray]:
    """Euler-Maclaurin evaluation with a fixed head length.

    Returns (values, omitted) where ``omitted`` is the magnitude of the
    first correction term left out, the usual a-posteriori error proxy.
    """
    head = np.zeros(len(x), dtype=np.complex128)
    for k in range(n_head):
        head += np.exp(-s * np.log(k + x))
    base = n_head + x
    log_base = np.log(base)
    head += np.exp((1.0 - s) * log_base) / (s - 1.0)
    head += 0.5 * np.exp(-s * log_base)
    poch = s  # rising factorial s (s+1) ... of odd length
    power = np.exp(-(s + 1.0) * log_base)
    inv2 = np.exp(-2.0 * log_base)
    fact = 2.0
    for j in range(1, _EM_ORDER + 1):
        coeff = float(_BERNOULLI[j - 1]) / fact
        head += coeff * poch * power
        poch *= (s + 2 * j - 1) * (s + 2 * j)
        power = power * inv2
        fact *= (2 * j + 1) * (2 * j + 2)
    omitted = abs(float(_BERNOULLI[_EM_ORDER]) / fact) * np.abs(poch * power)
    return head, omitted


def hurwitz_zeta(s: complex, x: np.ndarray | float, rel_tol: float = 1e-13) -> np.ndarray:
    """Hurwitz zeta(s, x) for Re s > -2, s != 1, and positive x, vectorized in x.

    The head length adapts until the first omitted Euler-Maclaurin
    correction is below ``rel_tol`` relative to the value.
    """
    s = complex(s)
    if abs(s - 1.0) < 1e-8:
        raise ValueError("the zeta pole at s = 1 is excluded")
    if s.real <= -2.0:
        raise ValueError(f"Re s = {s.real} is out of the supported half-plane Re s > -2")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x <= 0):
        raise ValueError("hurwitz_zeta requires x > 0")
    values = np.empty(len(x), dtype=np.complex128)
    todo = np.arange(len(x))
    for n_head in (20, 40, 80):
        got, omitted = _hurwitz_fixed(s, x[todo], n_head)
        ok = omitted <= rel_tol * np.maximum(np.abs(got), 1e-300)
        values[todo[ok]] = got[ok]
        todo = todo[~ok]
        if len(todo) == 0:
            break
    else:
        raise RuntimeError(
            f"Euler-Maclaurin failed to reach {rel_tol} at s={s} for {len(todo)} points"
        )
    return values


def zeta(s: complex) -> complex:
    """Riemann zeta away from s = 1."""
    return complex(hurwitz_zeta(s, 1.0)[0])


@dataclass(frozen=True)
class CentralValueSet:
    """L(s, chi_a) for every label of one modulus.

    ``values`` has length q - 1 and is indexed by label; slot 0 (the
    principal character, out of scope for the statistics) holds NaN.
    ``residual_stats`` summarizes the functional-equation residuals when
    they were requested at build time, else None.
    """

    q: int
    s: complex
    values: np.ndarray
    method: str  # "oracle" | "afe"
    residual_stats: dict[str, float] | None = None

    def value(self, a: int) -> complex:
        if a % (self.q - 1) == 0:
            raise ValueError("principal label excluded")
        return complex(self.values[a % (self.q - 1)])


def _oracle_values(table: CharacterTable, s: complex, method: str) -> np.ndarray:
    q = table.q
    r = np.arange(1, q, dtype=np.int64)
    hz = hurwitz_zeta(s, r / q)
    out = np.exp(-s * math.log(q)) * batch_character_sums(table, r, hz, method=method)
    out[0] = complex("nan")
    return out


def _afe_values(table: CharacterTable, s: complex, tail_cut: float, method: str) -> np.ndarray:
    s = complex(s)
    q, m = table.q, table.m
    n_max = math.isqrt(int(tail_cut * q / math.pi)) + 2
    n = np.arange(1, n_max + 1, dtype=np.int64)
    xs = math.pi * n.astype(np.float64) ** 2 / q
    log_n = np.log(n.astype(np.float64))

    first = {}
    dual = {}
    prefac = {}
    for delta in (0, 1):
        a1 = (s + delta) / 2.0
        a2 = (1.0 - s + delta) / 2.0
        q1 = np.array([upper_regularized_gamma(a1, float(v)) for v in xs])
        q2 = np.array([upper_regularized_gamma(a2, float(v)) for v in xs])
        first[delta] = batch_character_sums(table, n, np.exp(-s * log_n) * q1, method=method)
        dual[delta] = batch_character_sums(table, n, np.exp((s - 1.0) * log_n) * q2, method=method)
        prefac[delta] = (math.pi / q) ** (s - 0.5) * gamma(a2) / gamma(a1)

    eps = root_numbers(table)
    labels = np.arange(m)
    flip = (m - labels) % m  # conjugate label; parity is preserved
    odd = (labels & 1) == 1
    out = np.where(odd, first[1], first[0])
    dual_term = np.where(odd, prefac[1] * dual[1][flip], prefac[0] * dual[0][flip])
    out = out + eps * dual_term
    out[0] = complex("nan")
    return out


def completed_l_values(table: CharacterTable, s: complex, l_values: np.ndarray) -> np.ndarray:
    """Multiply L-values by the archimedean factor (q/pi)^((s+delta)/2) Gamma((s+delta)/2).

    The completed function satisfies the reflection
    completed(s, chi) = eps(chi) * completed(1 - s, chi-bar), which is
    the identity the residuals below measure.
    """
    labels = np.arange(table.m)
    out = np.asarray(l_values, dtype=np.complex128).copy()
    for delta in (0, 1):
        a1 = (s + delta) / 2.0
        factor = (table.q / math.pi) ** a1 * gamma(a1)
        out[(labels & 1) == delta] *= factor
    return out


def fe_residual_stats(
    table: CharacterTable,
    s: complex,
    values_s: np.ndarray,
    values_dual: np.ndarray | None = None,
) -> dict[str, float]:
    """Relative functional-equation residuals over all nonprincipal labels.

    For each label the residual is
    |Lambda(s, chi) - eps(chi) Lambda(1-s, chi-bar)| scaled by the larger
    of the two magnitudes.  ``values_dual`` holds L(1-s, .); omit it at
    the central point, where the two sets coincide.
    """
    s = complex(s)
    if values_dual is None:
        if abs(s - 0.5) > 1e-12:
            raise ValueError("values_dual is required away from the central point")
        values_dual = values_s
    lam_s = completed_l_values(table, s, values_s)
    lam_d = completed_l_values(table, 1.0 - s, values_dual)
    eps = root_numbers(table)
    m = table.m
    labels = np.arange(1, m)
    flip = m - labels
    lhs = lam_s[labels]
    rhs = eps[labels] * lam_d[flip]
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    res = np.abs(lhs - rhs) / scale
    return {"max": float(res.max()), "mean": float(res.mean())}


def l_values_oracle(
    table: CharacterTable, s: complex, method: str = "auto", residuals: bool = False
) -> CentralValueSet:
    """Central value set by the Hurwitz zeta route.

    One zeta vector of length q - 1 plus one batch character transform;
    quadratic cost overall, so the modulus is capped at 1e5.  With
    ``residuals`` the functional-equation residuals are computed too
    (a second evaluation at 1 - s when s is off-center).
    """
    if table.q > 100_000:
        raise ValueError(f"oracle route is quadratic in q; {table.q} exceeds the 1e5 cap")
    s = complex(s)
    values = _oracle_values(table, s, method)
    stats = None
    if residuals:
        dual = None if abs(s - 0.5) <= 1e-12 else _oracle_values(table, 1.0 - s, method)
        stats = fe_residual_stats(table, s, values, dual)
    return CentralValueSet(q=table.q, s=s, values=values, method="oracle", residual_stats=stats)


def l_values_afe(
    table: CharacterTable,
    s: complex,
    tail_cut: float = 40.0,
    method: str = "auto",
    residuals: bool = False,
) -> CentralValueSet:
    """Central value set by the smoothed approximate functional equation.

    Both sums run to the first n with pi n^2 / q >= ``tail_cut``; beyond
    that the incomplete-gamma weights are below 1e-16 and the tail is
    dropped.  Four batch transforms in total (two sums times two
    parities); the chi-bar sum is read off by the label flip a -> m - a.
    Valid in a small disc around the central point.
    """
    s = complex(s)
    if abs(s - 0.5) > 0.1:
        raise ValueError("the smoothed functional equation is tuned for |s - 1/2| <= 0.1")
    values = _afe_values(table, s, tail_cut, method)
    stats = None
    if residuals:
        dual = None if abs(s - 0.5) <= 1e-12 else _afe_values(table, 1.0 - s, tail_cut, method)
        stats = fe_residual_stats(table, s, values, dual)
    return CentralValueSet(q=table.q, s=s, values=values, method="afe", residual_stats=stats)


def afe_l_value(table: CharacterTable, a: int, s: complex, tail_cut: float = 40.0) -> complex:
    """L(s, chi_a) for a single nonprincipal label, same smoothing as the batch.

    Direct O(sqrt(q)) sums; useful as a spot check against the batch
    transforms without building the whole set.
    """
    s = complex(s)
    if a % table.m == 0:
        raise ValueError("principal label has no functional equation")
    if abs(s - 0.5) > 0.1:
        raise ValueError("the smoothed functional equation is tuned for |s - 1/2| <= 0.1")
    a = a % table.m
    q = table.q
    delta = table.delta(a)
    a1 = (s + delta) / 2.0
    a2 = (1.0 - s + delta) / 2.0
    n_max = math.isqrt(int(tail_cut * q / math.pi)) + 2
    n = np.arange(1, n_max + 1, dtype=np.int64)
    xs = math.pi * n.astype(np.float64) ** 2 / q
    q1 = np.array([upper_regularized_gamma(a1, float(v)) for v in xs])
    q2 = np.array([upper_regularized_gamma(a2, float(v)) for v in xs])
    chi = table.chi_values(a, n)
    chi_bar = table.chi_values(table.conjugate_label(a), n)
    nf = n.astype(np.float64)
    first = np.sum(chi * nf ** (-s) * q1)
    second = np.sum(chi_bar * nf ** (s - 1.0) * q2)
    prefac = (math.pi / q) ** (s - 0.5) * gamma(a2) / gamma(a1)
    return complex(first + root_number(table, a) * prefac * second)


def root_number(table: CharacterTable, a: int) -> complex:
    """Functional-equation root number tau(chi) / (i^delta sqrt(q)) for one label."""
    if a % table.m == 0:
        raise ValueError("principal character has no root number")
    eps = gauss_sum(table, a) / math.sqrt(table.q)
    if table.delta(a):
        eps /= 1j
    return complex(eps)


_CACHE_MAGIC = b"LCHI"
_CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQdd")  # magic, version, q, Re s, Im s
_RECORD_DTYPE = np.dtype([("label", "<u4"), ("re", "<f8"), ("im", "<f8")])


def save_l_values(
    path: str,
    q: int,
    s: complex,
    values: np.ndarray,
    labels: np.ndarray | None = None,
) -> None:
    """Write a binary L-value cache: fixed header, then packed records.

    Header layout: magic ``LCHI``, format version (u32), modulus (u64),
    and s as two little-endian doubles.  Each record is a u32 label and
    the value's real and imaginary parts as doubles.
    """
    values = np.asarray(values, dtype=np.complex128)
    if labels is None:
        labels = np.arange(len(values))
    labels = np.asarray(labels)
    if len(labels) != len(values):
        raise ValueError("labels and values must have equal length")
    records = np.empty(len(values), dtype=_RECORD_DTYPE)
    records["label"] = labels
    records["re"] = values.real
    records["im"] = values.imag
    s = complex(s)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, q, s.real, s.imag))
        fh.write(records.tobytes())


def load_l_values(path: str) -> tuple[int, complex, np.ndarray, np.ndarray]:
    """Read a cache written by :func:`save_l_values`.

    Returns ``(q, s, labels, values)``.  Rejects wrong magic, unknown
    versions, and trailing garbage.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, q, s_re, s_im = _HEADER.unpack_from(raw)
    if magic != _CACHE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _CACHE_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size :]
    if len(body) % _RECORD_DTYPE.itemsize:
        raise ValueError(f"{path}: record section has stray bytes")
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    values = records["re"] + 1j * records["im"]
    return q, complex(s_re, s_im), records["label"].astype(np.int64), values


@dataclass(frozen=True)
class TwistedSecondMoment:
    """Averaged twisted second moment and its asymptotic prediction."""

    empirical: complex
    predicted: complex
    diagonal_term: complex
    reflected_term: complex
    error_scale: float  # q^(-1/2) * (largest twist length): the error unit

    @property
    def discrepancy(self) -> float:
        return abs(self.empirical - self.predicted)


def twisted_second_moment_empirical(
    table: CharacterTable,
    alpha: complex,
    beta: complex,
    support: np.ndarray,
    coeffs: np.ndarray,
    l_alpha=None,
    l_beta=None,
    even_only: bool = True,
) -> complex:
    """Average of L(1/2+alpha, chi) L(1/2+beta, chi-bar) A(chi) A(chi-bar).

    A(chi) is the twist sum of coeffs[n] chi(n) / sqrt(n).  The average
    runs over even nonprincipal labels by default ((q-3)/2 of them), or
    all nonprincipal labels.  ``l_alpha``/``l_beta`` may be value sets
    or plain arrays; missing ones are computed by the smoothed
    functional equation.
    """
    q, m = table.q, table.m
    support = np.asarray(support, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if len(support) and int(support[-1]) >= q:
        raise ValueError("twist length must stay below the modulus")
    if l_alpha is None:
        l_alpha = l_values_afe(table, 0.5 + alpha).values
    else:
        l_alpha = np.asarray(getattr(l_alpha, "values", l_alpha), dtype=np.complex128)
    if l_beta is None:
        l_beta = l_values_afe(table, 0.5 + beta).values
    else:
        l_beta = np.asarray(getattr(l_beta, "values", l_beta), dtype=np.complex128)
    twist = batch_character_sums(table, support, coeffs / np.sqrt(support.astype(np.float64)))
    labels = np.arange(2, m, 2, dtype=np.int64) if even_only else np.arange(1, m, dtype=np.int64)
    flip = m - labels
    return complex(np.mean(l_alpha[labels] * l_beta[flip] * twist[labels] * twist[flip]))


def _twisted_main_terms(
    alpha: complex, beta: complex, support: np.ndarray, coeffs: np.ndarray
) -> tuple[complex, complex]:
    from .mollifier import m_alpha_beta_general  # deferred: mollifier imports nothing from here

    m_direct = m_alpha_beta_general(support, coeffs, alpha, beta)
    term1 = zeta(1.0 + alpha + beta) * m_direct
    g_ratio = (
        gamma((0.5 - alpha) / 2.0)
        * gamma((0.5 - beta) / 2.0)
        / (gamma((0.5 + alpha) / 2.0) * gamma((0.5 + beta) / 2.0))
    )
    m_reflect = m_alpha_beta_general(support, coeffs, -beta, -alpha)
    term2 = g_ratio * zeta(1.0 - alpha - beta) * m_reflect
    return term1, term2


def twisted_second_moment(
    table: CharacterTable,
    alpha: complex,
    beta: complex,
    support: np.ndarray,
    coeffs: np.ndarray,
    l_alpha=None,
    l_beta=None,
    pole_step: float = 1e-4,
) -> TwistedSecondMoment:
    """Empirical twisted second moment over even characters, with prediction.

    The prediction is the two-term main formula: a zeta(1 + alpha + beta)
    diagonal piece and a reflected piece carrying the gamma-factor ratio
    and (q/pi)^-(alpha+beta).  On the antidiagonal alpha + beta = 0 both
    pieces have a pole that cancels in the sum; it is handled by
    averaging the prediction at alpha +- pole_step.
    """
    q = table.q
    support = np.asarray(support, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    emp = twisted_second_moment_empirical(
        table, alpha, beta, support, coeffs, l_alpha=l_alpha, l_beta=l_beta, even_only=True
    )

    if abs(alpha + beta) < 1e-7:
        h = pole_step
        t1p, t2p = _twisted_main_terms(alpha + h, beta, support, coeffs)
        t1m, t2m = _twisted_main_terms(alpha - h, beta, support, coeffs)
        qpi_p = (q / math.pi) ** (-(alpha + h + beta))
        qpi_m = (q / math.pi) ** (-(alpha - h + beta))
        term1 = (t1p + t1m) / 2.0
        term2 = (qpi_p * t2p + qpi_m * t2m) / 2.0
    else:
        t1, t2 = _twisted_main_terms(alpha, beta, support, coeffs)
        term1 = t1
        term2 = (q / math.pi) ** (-(alpha + beta)) * t2
    predicted = term1 + term2
    scale = q**-0.5 * float(np.max(support)) if len(support) else q**-0.5
    return TwistedSecondMoment(
        empirical=complex(emp),
        predicted=complex(predicted),
        diagonal_term=complex(term1),
        reflected_term=complex(term2),
        error_scale=scale,
    )
