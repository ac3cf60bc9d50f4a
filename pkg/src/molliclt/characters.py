"""Dirichlet characters to prime modulus, indexed by discrete logarithm.

For prime ``q`` every character mod ``q`` is a power of the character
attached to a fixed primitive root ``g``: with ``ind`` the discrete log
base ``g``, the label ``a`` in ``0..q-2`` gives

    chi_a(n) = e(a * ind(n) / (q - 1)),   chi_a(n) = 0 for q | n.

Label 0 is the principal character; every other label is primitive, so
there are exactly ``q - 2`` primitive characters.  Conjugation flips the
label to ``q - 1 - a``, and chi_a(-1) = (-1)^a fixes the parity.

The workhorse is :func:`batch_character_sums`, which evaluates a sparse
coefficient sum against every character at once: after reindexing
n = g^k it is a single length-(q-1) discrete Fourier transform, done
either as a direct chunked matrix product (small q) or by a Bluestein
chirp transform (large q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arith import factorize, is_prime

__all__ = [
    "CharacterTable",
    "build_table",
    "primitive_root",
    "roots_of_unity",
    "chi",
    "parity",
    "batch_character_sums",
    "gauss_sum",
    "gauss_sums_all",
    "root_numbers",
]

# Below this modulus the direct O(m * nnz) path beats FFT setup costs.
_DIRECT_DEFAULT_CUTOFF = 20_000
_MAX_MODULUS = 10_000_000


def primitive_root(q: int) -> int:
    """Smallest primitive root modulo prime ``q``."""
    if q == 2:
        return 1
    if q < 2 or not is_prime(q):
        raise ValueError(f"modulus must be prime, got {q}")
    phi = q - 1
    prime_divisors = factorize(phi).primes
    g = 2
    while True:
        if all(pow(g, phi // p, q) != 1 for p in prime_divisors):
            return g
        g += 1


@dataclass(frozen=True)
class CharacterTable:
    """Discrete-log tables for the characters mod prime ``q``.

    ``index[n]`` is the discrete log of ``n`` base ``g`` for
    ``1 <= n < q`` (``index[0]`` is a -1 sentinel), ``power[k]`` is the
    inverse table g^k mod q, and ``roots[k] = e(k/(q-1))`` is the cached
    root-of-unity table every evaluation path shares.
    """

    q: int
    g: int
    index: np.ndarray  # int64, length q
    power: np.ndarray  # int64, length q-1
    roots: np.ndarray  # complex128, length q-1

    @property
    def m(self) -> int:
        """Group order q - 1."""
        return self.q - 1

    @property
    def primitive_count(self) -> int:
        return self.q - 2

    def delta(self, a: int) -> int:
        """Parity exponent: 0 for even characters (chi(-1)=+1), 1 for odd."""
        return a & 1

    def conjugate_label(self, a: int) -> int:
        return (self.m - a) % self.m

    def chi(self, a: int, n: int) -> complex:
        """chi_a(n) for a single argument."""
        n %= self.q
        if n == 0:
            return 0.0j
        return complex(self.roots[(a * int(self.index[n])) % self.m])

    def chi_values(self, a: int, ns: np.ndarray) -> np.ndarray:
        """chi_a evaluated at an integer array (entries divisible by q give 0)."""
        ns = np.asarray(ns, dtype=np.int64) % self.q
        res = np.zeros(len(ns), dtype=np.complex128)
        nz = ns != 0
        res[nz] = self.roots[(a * self.index[ns[nz]]) % self.m]
        return res


@lru_cache(maxsize=8)
def build_table(q: int) -> CharacterTable:
    """Build (and cache) the character table for prime ``3 <= q <= 10^7``.

    Smallest primitive root, then one pass filling the discrete-log and
    power tables.
    """
    if q < 3 or q > _MAX_MODULUS:
        raise ValueError(f"modulus must lie in [3, {_MAX_MODULUS}], got {q}")
    f = factorize(q)
    if f.primes != (q,):
        raise ValueError(f"modulus {q} is not prime")
    g = primitive_root(q)
    index = np.full(q, -1, dtype=np.int64)
    power = np.empty(q - 1, dtype=np.int64)
    value = 1
    for i in range(q - 1):
        index[value] = i
        power[i] = value
        value = value * g % q
    return CharacterTable(q, g, index, power, roots_of_unity(q - 1))


def chi(table: CharacterTable, a: int, n: int) -> complex:
    """chi_a(n); 0 when q divides n, 1 on the principal character otherwise."""
    return table.chi(a, n)


def parity(table: CharacterTable, a: int) -> str:
    """``"even"`` when chi_a(-1) = +1, else ``"odd"``.

    Since ind(-1) = (q-1)/2, the sign is exactly (-1)^a.
    """
    return "odd" if a & 1 else "even"


def roots_of_unity(m: int) -> np.ndarray:
    """e(k/m) for k = 0..m-1.

    Built from a fresh complex exponential every 64 entries with small
    precomputed offset factors in between, so the rounding error stays
    at the few-ulp level uniformly in k instead of drifting the way a
    single long recurrence would.
    """
    if m < 1:
        raise ValueError("m must be positive")
    block = 64
    offsets = np.exp(2j * np.pi * np.arange(block) / m)
    anchors = np.exp(2j * np.pi * np.arange(0, m, block) / m)
    out = (anchors[:, None] * offsets[None, :]).ravel()
    return out[:m]


def _fold_support(table: CharacterTable, support: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Collapse coefficients onto log classes: z[k] = sum of c(n) over ind(n) = k."""
    support = np.asarray(support, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if support.shape != coeffs.shape:
        raise ValueError("support and coeffs must have matching shapes")
    residues = support % table.q
    keep = residues != 0
    z = np.zeros(table.m, dtype=np.complex128)
    np.add.at(z, table.index[residues[keep]], coeffs[keep])
    return z


def _bluestein_dft(z: np.ndarray, sign: int) -> np.ndarray:
    """Exact-length DFT  S[a] = sum_k z[k] e(sign * a k / m)  via chirp-z.

    The quadratic phases are reduced mod 2m in integer arithmetic before
    the complex exponential, which keeps them accurate for large m.
    """
    m = len(z)
    k = np.arange(m, dtype=np.int64)
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * m)) / m)
    u = z * chirp
    j = np.arange(-(m - 1), m, dtype=np.int64)
    v = np.exp(-sign * 1j * np.pi * ((j * j) % (2 * m)) / m)
    L = 1 << (2 * m - 1).bit_length()
    conv = np.fft.ifft(np.fft.fft(u, L) * np.fft.fft(v, L))
    return chirp * conv[m - 1 : 2 * m - 1]


def batch_character_sums(
    table: CharacterTable,
    support: np.ndarray,
    coeffs: np.ndarray,
    method: str = "auto",
) -> np.ndarray:
    """S[a] = sum over the support of coeffs[i] * chi_a(support[i]), for every a.

    Support entries divisible by q contribute nothing (chi vanishes
    there).  ``method`` is ``"direct"``, ``"bluestein"``, or ``"auto"``
    (direct below a modulus cutoff, Bluestein above).  Both paths agree
    to near machine precision; Bluestein costs O(m log m) independent of
    support size and is the default only where the direct product gets
    expensive.
    """
    z = _fold_support(table, support, coeffs)
    m = table.m
    if method == "auto":
        method = "direct" if table.q < _DIRECT_DEFAULT_CUTOFF else "bluestein"
    if method == "bluestein":
        return _bluestein_dft(z, sign=+1)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    nz = np.nonzero(z)[0]
    if len(nz) == 0:
        return np.zeros(m, dtype=np.complex128)
    zv = z[nz]
    out = np.empty(m, dtype=np.complex128)
    chunk = max(1, 4_000_000 // max(len(nz), 1))
    for start in range(0, m, chunk):
        a = np.arange(start, min(start + chunk, m), dtype=np.int64)
        phase = (a[:, None] * nz[None, :]) % m
        out[start : start + len(a)] = table.roots[phase] @ zv
    return out


def gauss_sum(table: CharacterTable, a: int) -> complex:
    """tau(chi_a) = sum over n mod q of chi_a(n) e(n/q), computed directly."""
    if a % table.m == 0:
        raise ValueError("Gauss sum is defined here for primitive labels only (a != 0)")
    q = table.q
    n = np.arange(1, q, dtype=np.int64)
    values = table.chi_values(a, n)
    return complex(np.sum(values * np.exp(2j * np.pi * n / q)))


def gauss_sums_all(table: CharacterTable, method: str = "auto") -> np.ndarray:
    """Gauss sums for every label at once (one batch character sum).

    The principal entry S[0] equals -1 (it is not a primitive Gauss sum).
    """
    q = table.q
    n = np.arange(1, q, dtype=np.int64)
    return batch_character_sums(table, n, np.exp(2j * np.pi * n / q), method=method)


def root_numbers(table: CharacterTable, gauss: np.ndarray | None = None) -> np.ndarray:
    """Functional-equation root numbers eps[a] = tau(chi_a) / (i^delta sqrt(q)).

    For primitive labels these lie on the unit circle; the principal
    slot is meaningless and left as computed.
    """
    if gauss is None:
        gauss = gauss_sums_all(table)
    eps = np.array(gauss) / math.sqrt(table.q)
    odd = (np.arange(table.m) & 1) == 1
    eps[odd] /= 1j
    return eps
