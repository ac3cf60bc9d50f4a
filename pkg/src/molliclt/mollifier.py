"""Mollifier construction: interval parameters, smoothing weights, the
product Dirichlet polynomials, prime sums, mollified weights, and the
second-moment main term M(alpha, beta) in three algebraically identical
evaluations.

Two parameter modes.  The asymptotic ("paper") mode derives everything
from (q, eta, c0); it degenerates below astronomically large q, in which
case a structured error points at the desk mode, where the interval
exponents are chosen by hand and only the Omega caps keep the derived
form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .arith import PrimeInterval, factorize, liouville, nu, sieve_primes, smooth_integers
from .characters import CharacterTable, batch_character_sums

__all__ = [
    "MollifierParams",
    "DirichletPolynomial",
    "ParamsDegenerateError",
    "params_paper",
    "params_desk",
    "w_weight",
    "build_dirichlet_mollifier",
    "dirichlet_interval_piece",
    "hecke_interval_factor",
    "build_hecke_mollifier",
    "prime_sum_S",
    "prime_sums_all",
    "weight_W",
    "weights_all",
    "m_alpha_beta",
    "m_alpha_beta_general",
]

_SUPPORT_CAP = 2_000_000  # default enumeration budget (count of support integers)


class ParamsDegenerateError(ValueError):
    """Raised when the asymptotic parameter formulas collapse at small q."""


@dataclass(frozen=True)
class MollifierParams:
    """Interval decomposition (c0, y], (q^theta_0, q^theta_1], ... with Omega caps.

    ``theta`` has length J+1 and is strictly increasing; ``ell[j]`` caps
    Omega on interval j; ``y = q**theta[0]`` and ``x = q**theta[J]``
    bound the whole mollifier range.
    """

    q: int
    mode: str  # "paper" | "desk"
    eta: float | None
    c0: float
    J: int
    theta: tuple[float, ...]
    ell: tuple[int, ...]
    y: float
    x: float
    intervals: tuple[PrimeInterval, ...]

    def __post_init__(self) -> None:
        if len(self.theta) != self.J + 1 or len(self.ell) != self.J + 1:
            raise ValueError("theta and ell must both have length J+1")
        if any(b <= a for a, b in zip(self.theta, self.theta[1:])):
            raise ValueError("theta must be strictly increasing")


def _ell_from_theta(theta: float) -> int:
    return 2 * math.floor(theta ** (-0.75))


def _build_intervals(q: int, c0: float, theta: tuple[float, ...], warn_empty: bool) -> tuple[PrimeInterval, ...]:
    bounds = [c0] + [q**t for t in theta]
    intervals = []
    for j in range(len(theta)):
        iv = sieve_primes(bounds[j], bounds[j + 1])
        if warn_empty and len(iv) == 0:
            warnings.warn(f"interval {j} = ({bounds[j]:.4g}, {bounds[j+1]:.4g}] contains no primes")
        intervals.append(iv)
    return tuple(intervals)


def params_paper(q: int, eta: float, c0: float = 2.0) -> MollifierParams:
    """Asymptotic interval parameters theta_j = eta e^j / (log log q)^5.

    J is the smallest index with theta_J >= eta, which lands theta_J in
    [eta, e*eta).  Needs log log q > 1 (q >= 16) for that anchoring to
    make sense, and the resulting y = q**theta_0 must clear c0; at
    realistic desk moduli it never does, and the structured error says
    to use :func:`params_desk` instead.
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0,1), got {eta}")
    if c0 < 2:
        raise ValueError(f"c0 must be >= 2 in paper mode, got {c0}")
    llq = math.log(math.log(q)) if q > 2 else float("-inf")
    if llq <= 1.0:
        raise ParamsDegenerateError(
            f"log log q = {llq:.4g} <= 1: the asymptotic parameter ladder is undefined at q={q}"
        )
    J = max(0, math.ceil(5 * math.log(llq)))
    theta = tuple(eta * math.e**j / llq**5 for j in range(J + 1))
    y = float(q) ** theta[0]
    if y <= c0:
        raise ParamsDegenerateError(
            f"y = q^theta_0 = {y:.6g} <= c0 = {c0}: the first interval is empty at q={q}; "
            "use params_desk with explicit interval exponents"
        )
    ell = tuple(_ell_from_theta(t) for t in theta)
    intervals = _build_intervals(q, c0, theta, warn_empty=True)
    return MollifierParams(
        q=q, mode="paper", eta=eta, c0=c0, J=J, theta=theta, ell=ell,
        y=y, x=float(q) ** theta[J], intervals=intervals,
    )


def params_desk(
    q: int,
    theta_list: Iterable[float],
    c0: float = 1.0,
    theta_cap: float | None = 0.02,
) -> MollifierParams:
    """Desk-scale parameters with hand-picked interval exponents.

    The Omega caps still come from the asymptotic formula
    ell_j = 2*floor(theta_j^(-3/4)).  Exponents above ``theta_cap`` are
    legitimate at desk scale but far outside the asymptotic regime, so
    they draw a warning rather than an error (pass ``None`` to silence).
    """
    theta = tuple(float(t) for t in theta_list)
    if not theta:
        raise ValueError("need at least one interval exponent")
    if any(t <= 0 for t in theta):
        raise ValueError("interval exponents must be positive")
    if theta_cap is not None and theta[-1] > theta_cap:
        warnings.warn(
            f"theta_J = {theta[-1]} exceeds the asymptotic-regime cap {theta_cap}; "
            "desk-scale surrogate parameters in effect"
        )
    J = len(theta) - 1
    ell = tuple(_ell_from_theta(t) for t in theta)
    intervals = _build_intervals(q, c0, theta, warn_empty=True)
    return MollifierParams(
        q=q, mode="desk", eta=None, c0=c0, J=J, theta=theta, ell=ell,
        y=float(q) ** theta[0], x=float(q) ** theta[J], intervals=intervals,
    )


def w_weight(p: float | np.ndarray, j: int, params: MollifierParams, q: int | None = None):
    """Smoothing weight w_j(p) = p^(-1/(theta_j log q)) (1 - log p/(theta_j log q)).

    Clamped to 0 once log p reaches theta_j log q (the parenthesis has
    gone negative and the weight has left its design range).  Accepts a
    scalar or an array of primes.
    """
    if q is None:
        q = params.q
    tlq = params.theta[j] * math.log(q)
    logp = np.log(np.asarray(p, dtype=np.float64))
    out = np.exp(-logp / tlq) * (1.0 - logp / tlq)
    out = np.maximum(out, 0.0)
    if np.ndim(p) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class DirichletPolynomial:
    """Sparse coefficients of a sum  c(n) chi(n) / sqrt(n)  over a finite support.

    ``coeff`` stores c(n) itself; the 1/sqrt(n) is applied at evaluation
    time so coefficient identities stay exact.  For the pure Liouville
    mollifier the coefficients are exact rationals, kept in ``exact``
    alongside the float projection.
    """

    support: np.ndarray  # int64, ascending
    coeff: np.ndarray  # complex128, parallel to support
    exact: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.support) != len(self.coeff):
            raise ValueError("support and coeff lengths differ")
        if len(self.support) and np.any(np.diff(self.support) <= 0):
            raise ValueError("support must be strictly ascending")

    @property
    def length(self) -> int:
        """Largest support element."""
        return int(self.support[-1]) if len(self.support) else 0

    def coefficient(self, n: int) -> complex:
        i = int(np.searchsorted(self.support, n))
        if i < len(self.support) and self.support[i] == n:
            return complex(self.coeff[i])
        return 0.0j

    def as_map(self) -> dict[int, complex]:
        return {int(n): complex(c) for n, c in zip(self.support, self.coeff)}

    def evaluate(self, table: CharacterTable, a: int) -> complex:
        """Sum of c(n) chi_a(n)/sqrt(n) for one character."""
        values = table.chi_values(a, self.support)
        return complex(np.sum(self.coeff * values / np.sqrt(self.support.astype(np.float64))))

    def evaluate_all(self, table: CharacterTable, method: str = "auto") -> np.ndarray:
        """The same sum for every label at once (batch transform)."""
        w = self.coeff / np.sqrt(self.support.astype(np.float64))
        return batch_character_sums(table, self.support, w, method=method)

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,coeff_re,coeff_im\n")
            for n, c in zip(self.support, self.coeff):
                fh.write(f"{int(n)},{c.real!r},{c.imag!r}\n")


def _from_map(coeffs: Mapping[int, complex], exact: Mapping[int, Fraction] | None) -> DirichletPolynomial:
    support = np.array(sorted(coeffs), dtype=np.int64)
    values = np.array([coeffs[int(n)] for n in support], dtype=np.complex128)
    exact_tuple = tuple(exact[int(n)] for n in support) if exact is not None else None
    return DirichletPolynomial(support, values, exact_tuple)


def _interval_factor_exact(params: MollifierParams, j: int, max_count: int) -> dict[int, Fraction]:
    """lambda(n) nu(n) on the interval-j smooth support, as exact rationals."""
    out: dict[int, Fraction] = {}
    for n, omega in smooth_integers(params.intervals[j], params.ell[j], math.inf, max_count):
        sign = -1 if omega & 1 else 1
        out[n] = sign * nu(n)
    return out


def build_dirichlet_mollifier(params: MollifierParams, max_support: int = _SUPPORT_CAP) -> DirichletPolynomial:
    """Coefficients of the product over intervals of the Liouville-nu pieces.

    Interval prime sets are disjoint, so the product support is the set
    of products n = n_0 ... n_J (one factor per interval) and the
    coefficient of n is the product of the factors' coefficients, exact
    rationals throughout.  Raises when the support budget is hit.
    """
    acc: dict[int, Fraction] = {1: Fraction(1)}
    for j in range(params.J + 1):
        factor = _interval_factor_exact(params, j, max_support)
        if len(acc) * len(factor) > 20 * max_support:
            raise RuntimeError("mollifier support enumeration budget exceeded")
        nxt: dict[int, Fraction] = {}
        for n1, c1 in acc.items():
            for n2, c2 in factor.items():
                nxt[n1 * n2] = c1 * c2  # products unique: interval primes disjoint
        if len(nxt) > max_support:
            raise RuntimeError("mollifier support enumeration budget exceeded")
        acc = nxt
    floats = {n: complex(c) for n, c in acc.items()}
    return _from_map(floats, acc)


def dirichlet_interval_piece(
    params: MollifierParams, j: int, max_support: int = _SUPPORT_CAP
) -> DirichletPolynomial:
    """The single-interval factor of the product mollifier, as a polynomial.

    Needed on its own by the typical-set filter, which bounds the tail
    intervals (j >= 1) separately from the leading piece.
    """
    if not 0 <= j <= params.J:
        raise ValueError(f"interval index {j} outside 0..{params.J}")
    exact = _interval_factor_exact(params, j, max_support)
    floats = {n: complex(c) for n, c in exact.items()}
    return _from_map(floats, exact)


def hecke_interval_factor(
    params: MollifierParams,
    j: int,
    form,
    weight_fn: Callable[[int], float] | None = None,
    max_count: int = _SUPPORT_CAP,
) -> dict[int, float]:
    """Interval-j coefficients a(n) lambda(n) nu(n) on the capped smooth support.

    ``a`` is the completely multiplicative extension of
    a(p) = lambda_form(p) * weight(p); the default weight is the final
    interval's smoothing w_J.  ``form`` is anything with a
    ``lambda_p(p)`` method.  ``weight_fn`` overrides the per-prime
    weight (degeneration tests set it to 1).
    """
    if weight_fn is None:
        weight_fn = lambda p: w_weight(p, params.J, params)
    a_p = {int(p): form.lambda_p(int(p)) * weight_fn(int(p)) for p in params.intervals[j].primes}
    factor: dict[int, float] = {}
    for n, omega in smooth_integers(params.intervals[j], params.ell[j], math.inf, max_count):
        f = factorize(n)
        a_val = 1.0
        for p, e in zip(f.primes, f.exponents):
            a_val *= a_p[p] ** e
        sign = -1 if omega & 1 else 1
        factor[n] = sign * a_val * float(nu(n))
    return factor


def build_hecke_mollifier(
    params: MollifierParams,
    form,
    max_support: int = _SUPPORT_CAP,
    weight_fn: Callable[[int], float] | None = None,
) -> DirichletPolynomial:
    """Product over intervals of the Hecke-weighted pieces (float coefficients)."""
    acc: dict[int, complex] = {1: 1.0 + 0.0j}
    for j in range(params.J + 1):
        factor = hecke_interval_factor(params, j, form, weight_fn, max_support)
        if len(acc) * len(factor) > 20 * max_support:
            raise RuntimeError("mollifier support enumeration budget exceeded")
        nxt: dict[int, complex] = {}
        for n1, c1 in acc.items():
            for n2, c2 in factor.items():
                nxt[n1 * n2] = c1 * c2  # products unique: interval primes disjoint
        if len(nxt) > max_support:
            raise RuntimeError("mollifier support enumeration budget exceeded")
        acc = nxt
    return _from_map(acc, None)


def _resolve_weights(primes: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.ones(len(primes))
    if callable(weights):
        return np.array([float(weights(int(p))) for p in primes])
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != primes.shape:
        raise ValueError("weight array must match the prime list")
    return w


def prime_sum_S(table: CharacterTable, a: int, params: MollifierParams, weights=None) -> complex:
    """First-interval prime sum: sum over c0 < p <= y of weight(p) chi_a(p)/sqrt(p).

    ``weights`` is None (all ones), a callable p -> real, or an array
    parallel to the interval's prime list.  Callers wanting the real-part
    observable take Re afterwards.
    """
    primes = params.intervals[0].primes
    if len(primes) == 0:
        return 0.0j
    w = _resolve_weights(primes, weights)
    values = table.chi_values(a, primes)
    return complex(np.sum(w * values / np.sqrt(primes.astype(np.float64))))


def prime_sums_all(
    table: CharacterTable, params: MollifierParams, weights=None, method: str = "auto"
) -> np.ndarray:
    """The same prime sum for every character label (batch transform)."""
    primes = params.intervals[0].primes
    if len(primes) == 0:
        return np.zeros(table.m, dtype=np.complex128)
    w = _resolve_weights(primes, weights)
    return batch_character_sums(table, primes, w / np.sqrt(primes.astype(np.float64)), method=method)


def weight_W(table: CharacterTable, a: int, l_values, mol: DirichletPolynomial) -> complex:
    """Mollified central value W(chi) = L(1/2, chi) * M(chi) for one label.

    ``l_values`` is a CentralValueSet or a plain array indexed by label.
    """
    if a % table.m == 0:
        raise ValueError("principal character carries no weight")
    values = getattr(l_values, "values", l_values)
    return complex(values[a]) * mol.evaluate(table, a)


def weights_all(
    table: CharacterTable, l_values, mol: DirichletPolynomial, method: str = "auto"
) -> np.ndarray:
    """W(chi) for every label; the principal slot is set to 0."""
    values = np.asarray(getattr(l_values, "values", l_values), dtype=np.complex128)
    out = values * mol.evaluate_all(table, method=method)
    out[0] = 0.0
    return out


def _pair_budget_check(n: int) -> None:
    if n * n > 40_000_000:
        raise RuntimeError(f"support of {n} elements is too large for the pair sum")


def _m_direct(support: np.ndarray, gamma: np.ndarray, alpha: complex, beta: complex) -> complex:
    """Coprime double sum via the gcd bijection (A,B) = (hm, hn), h = gcd."""
    _pair_budget_check(len(support))
    s = support.astype(np.int64)
    g = np.gcd.outer(s, s).astype(np.float64)
    a_over = s.astype(np.float64)[:, None] / g  # m = A/h
    b_over = s.astype(np.float64)[None, :] / g  # n = B/h
    terms = (
        gamma[:, None]
        * gamma[None, :]
        * np.exp(-(1.0 + alpha) * np.log(a_over) - (1.0 + beta) * np.log(b_over))
        / g
    )
    return complex(terms.sum())


def _m_moebius(support: np.ndarray, gamma: np.ndarray, alpha: complex, beta: complex) -> complex:
    """Quadruple sum over (h, d, m, n), regrouped by v = hd.

    sum_{hd=v} mu(d)/(h d^(2+a+b)) = (1/v) sum_{d|v} mu(d) d^(-1-a-b),
    and the m- and n-sums factor per v.  The support is divisor-closed,
    so v ranges over the support itself.
    """
    total = 0.0j
    for v in (int(t) for t in support):
        f = factorize(v)
        c_v = 0.0j
        for d in f.divisors():
            fd = factorize(d)
            if any(e > 1 for e in fd.exponents):
                continue
            mu = -1 if len(fd.primes) & 1 else 1
            c_v += mu * d ** complex(-1.0 - alpha - beta)
        c_v /= v
        # divisor-closed support: every multiple of v carrying a nonzero
        # coefficient is itself a support element, so scan the support
        # rather than the (possibly enormous) integer range up to max n.
        mask = support % v == 0
        log_m = np.log((support[mask] // v).astype(np.float64))
        g = gamma[mask]
        s_alpha = np.sum(g * np.exp(log_m * (-1.0 - alpha)))
        s_beta = np.sum(g * np.exp(log_m * (-1.0 - beta)))
        total += c_v * s_alpha * s_beta
    return complex(total)


def m_alpha_beta_general(
    support: np.ndarray, gamma: np.ndarray, alpha: complex, beta: complex, variant: str = "direct"
) -> complex:
    """M(alpha, beta) for arbitrary real/complex twist coefficients.

    The direct and Moebius variants work for any divisor-closed support;
    the per-interval product additionally needs the mollifier's interval
    structure and lives on :func:`m_alpha_beta`.
    """
    support = np.asarray(support, dtype=np.int64)
    gamma = np.asarray(gamma, dtype=np.complex128)
    if variant == "direct":
        return _m_direct(support, gamma, alpha, beta)
    if variant == "moebius":
        return _m_moebius(support, gamma, alpha, beta)
    raise ValueError(f"unknown variant {variant!r}")


def _m_euler_interval(params: MollifierParams, j: int, alpha: complex, beta: complex) -> complex:
    """One interval's factor: the (h, d, m, n) sum with Omega caps on hdm, hdn."""
    members = smooth_integers(params.intervals[j], params.ell[j], math.inf)
    values = [n for n, _ in members]
    if len(values) ** 2 > 40_000_000:
        raise RuntimeError(f"interval {j} support of {len(values)} is too large for the quadruple sum")
    multiples: dict[int, list[int]] = {n: [] for n in values}
    for base in values:
        for v in values:
            if v % base == 0:
                multiples[base].append(v // base)
    # gamma(hdm) gamma(hdn) = lambda(m) nu(hdm) lambda(n) nu(hdn): the
    # lambda(h) lambda(d) factors square away between the two sides.
    total = 0.0j
    for u in values:  # u = h*d*m
        fu = factorize(u)
        nu_u = float(nu(u))
        for d in fu.divisors():
            fd = factorize(d)
            if any(e > 1 for e in fd.exponents):
                continue
            mu = -1 if len(fd.primes) & 1 else 1
            for h in factorize(u // d).divisors():
                hd = h * d
                m = u // hd
                pref = (
                    mu
                    * liouville(m)
                    * nu_u
                    / h
                    * d ** complex(-2.0 - alpha - beta)
                    * m ** complex(-1.0 - alpha)
                )
                for n in multiples[hd]:
                    total += (
                        pref
                        * liouville(n)
                        * float(nu(hd * n))
                        * n ** complex(-1.0 - beta)
                    )
    return complex(total)


def m_alpha_beta(params: MollifierParams, alpha: complex, beta: complex, variant: str = "direct") -> complex:
    """Second-moment main term M(alpha, beta) of the built mollifier.

    Three algebraically identical routes: ``direct`` (coprime double
    sum via gcd), ``moebius`` (the expanded (h,d,m,n) sum), ``euler``
    (per-interval product of capped quadruple sums).  They must agree
    to near machine precision; the test-suite holds them to 1e-12
    relative.
    """
    if variant in ("direct", "moebius"):
        mol = build_dirichlet_mollifier(params)
        return m_alpha_beta_general(mol.support, mol.coeff, alpha, beta, variant)
    if variant == "euler":
        out = 1.0 + 0.0j
        for j in range(params.J + 1):
            out *= _m_euler_interval(params, j, alpha, beta)
        return complex(out)
    raise ValueError(f"unknown variant {variant!r}")
