"""Prime-field arithmetic, matrix polynomials and entrywise interpolation.

Field elements are plain Python ints in ``[0, p)``. Matrices are numpy arrays
of dtype ``int64`` when ``p < 2**31`` (so a product of two entries still fits
in 63 bits) and ``object`` arrays of Python ints otherwise.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DuplicatePoint, FieldError, InsufficientShares, InverseOfZero

DEFAULT_MODULUS = 2**31 - 1

_INT64_MAX = 2**63 - 1
_LIMB = 16
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    if n >= 3_317_044_064_679_887_385_961_981:
        raise FieldError("primality test is only deterministic below 3.3e24")
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so every run replays from its seed."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class PrimeField:
    modulus: int = DEFAULT_MODULUS

    def __post_init__(self):
        p = int(self.modulus)
        object.__setattr__(self, "modulus", p)
        if not is_prime(p):
            raise FieldError(f"modulus {p} is not prime")

    @property
    def dtype(self):
        return np.int64 if self.modulus < 2**31 else object

    # scalar ops

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.modulus

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.modulus

    def mul(self, a: int, b: int) -> int:
        return a * b % self.modulus

    def neg(self, a: int) -> int:
        return -a % self.modulus

    def inv(self, a: int) -> int:
        a %= self.modulus
        if a == 0:
            raise InverseOfZero("zero has no multiplicative inverse")
        return pow(a, self.modulus - 2, self.modulus)

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.modulus)

    # matrices

    def asarray(self, m) -> np.ndarray:
        """Validate ``m`` as a field matrix and return it with the field's dtype."""
        arr = np.asarray(m)
        if arr.dtype == object:
            if any(not isinstance(v, (int, np.integer)) for v in arr.flat):
                raise FieldError("matrix entries must be integers")
        elif not np.issubdtype(arr.dtype, np.integer):
            raise FieldError(f"matrix entries must be integers, got {arr.dtype}")
        arr = arr.astype(self.dtype)
        if arr.size and (arr.min() < 0 or arr.max() >= self.modulus):
            raise FieldError(f"matrix entries must lie in [0, {self.modulus})")
        return arr

    def zeros(self, shape) -> np.ndarray:
        z = np.zeros(shape, dtype=self.dtype)
        if self.dtype is object:
            z[...] = 0
        return z

    def random_matrix(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.dtype is object:
            flat = [int(v) for v in rng.integers(0, self.modulus, size=int(np.prod(shape)), dtype=np.uint64)]
            return np.array(flat, dtype=object).reshape(shape)
        return rng.integers(0, self.modulus, size=shape, dtype=np.int64)

    def reduce(self, m) -> np.ndarray:
        return np.asarray(m) % self.modulus

    def scale(self, m: np.ndarray, c: int) -> np.ndarray:
        return m * (c % self.modulus) % self.modulus

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Exact ``a @ b mod p`` without int64 overflow."""
        p = self.modulus
        k = a.shape[-1]
        if self.dtype is object:
            return np.dot(a.astype(object), b.astype(object)) % p
        if k == 0 or (p - 1) ** 2 * k <= _INT64_MAX:
            return a @ b % p
        # split b into 16-bit limbs; chunk the inner dimension so partial sums fit
        lo = b & ((1 << _LIMB) - 1)
        hi = b >> _LIMB
        step = max(1, _INT64_MAX // ((p - 1) * ((1 << _LIMB) - 1)))
        out_lo = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        out_hi = np.zeros_like(out_lo)
        for start in range(0, k, step):
            sl = slice(start, start + step)
            out_lo = (out_lo + a[..., sl] @ lo[sl] % p) % p
            out_hi = (out_hi + a[..., sl] @ hi[sl] % p) % p
        return (out_hi * (1 << _LIMB) + out_lo) % p


@dataclass(frozen=True)
class EvalPointSet:
    points: tuple

    def __post_init__(self):
        pts = tuple(int(z) for z in self.points)
        object.__setattr__(self, "points", pts)
        if any(z == 0 for z in pts):
            raise FieldError("evaluation points must be nonzero")
        if len(set(pts)) != len(pts):
            raise DuplicatePoint("evaluation points must be pairwise distinct")

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __iter__(self):
        return iter(self.points)


def sample_distinct_points(field: PrimeField, count: int, seed) -> EvalPointSet:
    """Draw ``count`` distinct nonzero field elements, reproducibly from ``seed``."""
    p = field.modulus
    if count < 0 or count >= p:
        raise FieldError(f"cannot draw {count} distinct nonzero points from a field of size {p}")
    rng = make_rng(seed)
    picks = rng.choice(p - 1, size=count, replace=False) + 1
    return EvalPointSet(tuple(int(z) for z in picks))


def _coefficient_items(coeffs):
    items = list(coeffs.items()) if isinstance(coeffs, Mapping) else list(coeffs)
    if not items:
        raise FieldError("polynomial has no coefficients")
    exps = [int(e) for e, _ in items]
    if min(exps) < 0:
        raise FieldError("exponents must be non-negative")
    if len(set(exps)) != len(exps):
        raise FieldError("exponents must be distinct")
    shape = np.shape(items[0][1])
    if any(np.shape(m) != shape for _, m in items):
        raise FieldError("coefficient matrices must share dimensions")
    return exps, [m for _, m in items], shape


def poly_eval_matrix(field: PrimeField, coeffs, z: int) -> np.ndarray:
    """Evaluate ``sum_e M_e z^e`` for a mapping (or pairs) exponent -> matrix."""
    exps, mats, shape = _coefficient_items(coeffs)
    p = field.modulus
    out = field.zeros(shape)
    for e, m in zip(exps, mats):
        out = (out + np.asarray(m) * pow(z, e, p)) % p
    return out


def poly_eval_many(field: PrimeField, coeffs, zs) -> np.ndarray:
    """Evaluate one matrix polynomial at many points; returns shape ``(len(zs),) + M.shape``."""
    exps, mats, shape = _coefficient_items(coeffs)
    p = field.modulus
    powers = np.array([[pow(int(z), e, p) for e in exps] for z in zs], dtype=field.dtype)
    stacked = np.stack([np.asarray(m, dtype=field.dtype).reshape(-1) for m in mats])
    return field.matmul(powers, stacked).reshape((len(zs),) + tuple(shape))


@lru_cache(maxsize=256)
def _inverse_vandermonde(p: int, xs: tuple) -> np.ndarray:
    """Matrix ``W`` with ``W[e, j]`` = coefficient of ``z^e`` in the j-th Lagrange basis polynomial."""
    n = len(xs)
    dtype = np.int64 if p < 2**31 else object
    x = np.array(xs, dtype=dtype)
    # master polynomial prod_j (z - x_j), lowest degree first
    master = np.zeros(n + 1, dtype=dtype)
    master[0] = 1
    for xj in xs:
        shifted = np.concatenate([np.zeros(1, dtype=dtype), master[:-1]])
        master = (shifted - xj * master) % p
    # synthetic division by (z - x_j) for every j at once
    quot = np.zeros((n, n), dtype=dtype)
    carry = np.full(n, master[n], dtype=dtype)
    for e in range(n - 1, -1, -1):
        quot[e] = carry
        carry = (master[e] + x * carry) % p
    denom = np.ones(n, dtype=dtype)
    for k in range(n):
        diff = (x - x[k]) % p
        diff[k] = 1
        denom = denom * diff % p
    weights = np.array([pow(int(d), p - 2, p) for d in denom], dtype=dtype)
    return quot * weights % p


def interpolate(field: PrimeField, points, degree_bound: int) -> dict:
    """Entrywise Lagrange interpolation of a matrix polynomial of degree <= ``degree_bound``.

    ``points`` is a sequence of ``(z, matrix)``. Only the first ``degree_bound + 1``
    points are used. Returns ``{exponent: coefficient matrix}`` for every exponent
    in ``0..degree_bound``.
    """
    points = list(points)
    need = degree_bound + 1
    zs = [int(z) % field.modulus for z, _ in points]
    if len(set(zs)) != len(zs):
        raise DuplicatePoint("interpolation points must be distinct")
    if len(points) < need:
        raise InsufficientShares(len(points), need)
    used = points[:need]
    shape = np.shape(used[0][1])
    if any(np.shape(m) != shape for _, m in used):
        raise FieldError("all value matrices must share a shape")
    w = _inverse_vandermonde(field.modulus, tuple(zs[:need]))
    values = np.stack([np.asarray(m, dtype=field.dtype).reshape(-1) for _, m in used])
    coeffs = field.matmul(w, values)
    return {e: coeffs[e].reshape(shape) for e in range(need)}
