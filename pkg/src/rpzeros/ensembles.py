"""Random sampling: coefficient laws, polynomial families, GAFs, Haar unitaries.

All randomness flows through :class:`SeedSpec`, which derives a Philox
(counter-based) generator from ``(master_seed, stream_id)``.  Two calls with
the same SeedSpec see the same stream no matter which thread runs them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import CoefficientProfile, PhaseClass, phase_classify, tail_sum

__all__ = [
    "LawKind",
    "CoefficientLaw",
    "parse_law",
    "SeedSpec",
    "ComplexPolynomial",
    "sample_polynomial",
    "sample_self_inversive",
    "p_infty_truncation",
    "sample_p_infty",
    "sample_gaf",
    "haar_unitary",
    "haar_log_charpoly",
]

_U64 = 1 << 64


class LawKind(str, enum.Enum):
    ICN = "icn"
    SPLIT = "split"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class CoefficientLaw:
    """Centred law of the coefficients ``xi``.

    ``sigma1``/``sigma2`` are the standard deviations of ``Re xi`` and
    ``Im xi``.  Use the constructors rather than filling fields by hand.
    """

    kind: LawKind
    sigma1: float
    sigma2: float
    # literal sigma of an isotropic law, kept so literals round-trip exactly
    sigma: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        s1, s2 = float(self.sigma1), float(self.sigma2)
        if s1 < 0 or s2 < 0 or not (math.isfinite(s1) and math.isfinite(s2)):
            raise ValueError("component scales must be finite and non-negative")
        if s1 * s1 + s2 * s2 <= 0:
            raise ValueError("degenerate law: xi = 0 almost surely")
        object.__setattr__(self, "sigma1", s1)
        object.__setattr__(self, "sigma2", s2)

    @classmethod
    def isotropic(cls, sigma: float = 1.0) -> "CoefficientLaw":
        """Isotropic complex normal with ``E|xi|^2 = sigma^2``."""
        s = float(sigma) / math.sqrt(2.0)
        return cls(LawKind.ICN, s, s, float(sigma))

    @classmethod
    def split(cls, sigma1: float, sigma2: float) -> "CoefficientLaw":
        return cls(LawKind.SPLIT, sigma1, sigma2)

    @classmethod
    def rademacher(cls) -> "CoefficientLaw":
        return cls(LawKind.RADEMACHER, 1.0, 0.0)

    @classmethod
    def uniform(cls) -> "CoefficientLaw":
        """Real uniform on ``[-sqrt 3, sqrt 3]`` (unit variance)."""
        return cls(LawKind.UNIFORM, 1.0, 0.0)

    @property
    def variance(self) -> float:
        """``sigma^2 = E|xi|^2``."""
        return self.sigma1 ** 2 + self.sigma2 ** 2

    @property
    def pseudo_variance(self) -> float:
        """``E[xi^2] = sigma1^2 - sigma2^2``."""
        return self.sigma1 ** 2 - self.sigma2 ** 2

    @property
    def is_real(self) -> bool:
        return self.sigma2 == 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind in (LawKind.ICN, LawKind.SPLIT):
            z = rng.standard_normal((2, size))
            return self.sigma1 * z[0] + 1j * (self.sigma2 * z[1])
        if self.kind is LawKind.RADEMACHER:
            return (2.0 * rng.integers(0, 2, size=size) - 1.0).astype(complex)
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=size).astype(complex)

    def literal(self) -> str:
        if self.kind is LawKind.ICN:
            return f"icn:{(self.sigma if self.sigma is not None else math.sqrt(self.variance))!r}"
        if self.kind is LawKind.SPLIT:
            return f"split:{self.sigma1!r},{self.sigma2!r}"
        return self.kind.value

    def __str__(self) -> str:
        return self.literal()


def parse_law(text: str) -> CoefficientLaw:
    """Parse ``icn:<sigma> | split:<s1>,<s2> | rademacher | uniform``."""
    text = text.strip()
    if text == "rademacher":
        return CoefficientLaw.rademacher()
    if text == "uniform":
        return CoefficientLaw.uniform()
    kind, sep, arg = text.partition(":")
    if kind == "icn" and sep:
        return CoefficientLaw.isotropic(float(arg))
    if kind == "split" and sep:
        parts = arg.split(",")
        if len(parts) != 2:
            raise ValueError("split law needs two scales: split:<s1>,<s2>")
        return CoefficientLaw.split(float(parts[0]), float(parts[1]))
    raise ValueError(f"unrecognised law literal {text!r}")


@dataclass(frozen=True)
class SeedSpec:
    """``(master_seed, stream_id)``, both unsigned 64-bit."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
            if not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")
            object.__setattr__(self, name, int(v))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence([self.master_seed, self.stream_id])
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


def _as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


@dataclass(frozen=True, eq=False)
class ComplexPolynomial:
    """``exp(log_scale) * sum_k coeffs[k] z**k``."""

    coeffs: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "log_scale", float(self.log_scale))

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, z):
        """Horner evaluation including the ``exp(log_scale)`` factor."""
        return self.eval_unscaled(z) * math.exp(self.log_scale)

    def eval_unscaled(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def eval_direct(self, z):
        """Term-by-term summation (reference for the Horner path)."""
        z = np.asarray(z, dtype=complex)
        k = np.arange(self.coeffs.size)
        return (self.coeffs * z[..., None] ** k).sum(axis=-1) * math.exp(self.log_scale)

    def normalized(self) -> "ComplexPolynomial":
        """Same polynomial with ``max |coeff| = 1``."""
        m = float(np.abs(self.coeffs).max())
        if m == 0.0:
            return self
        return ComplexPolynomial(self.coeffs / m, self.log_scale + math.log(m))

    def __len__(self) -> int:
        return self.coeffs.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComplexPolynomial):
            return NotImplemented
        return self.log_scale == other.log_scale and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


def _weights(profile, n: int, start: int = 0):
    lb = profile.log_b(np.arange(start, n + 1, dtype=float))
    shift = float(lb.max())
    return np.exp(lb - shift), shift


def sample_polynomial(profile, law: CoefficientLaw, n: int, seed, xi=None) -> ComplexPolynomial:
    """``P_n(z) = sum_{k=0}^n b(k) xi_k z^k`` with ``b(0) := b(1)``.

    ``xi`` (length ``n+1``) overrides the random draw; used in tests.
    """
    if n < 1:
        raise ValueError("degree must be >= 1")
    w, shift = _weights(profile, n)
    if xi is None:
        xi = law.sample(_as_seed(seed).rng(), n + 1)
    else:
        xi = np.asarray(xi, dtype=complex)
        if xi.shape != (n + 1,):
            raise ValueError("xi override must have length n+1")
    return ComplexPolynomial(w * xi, shift)


def sample_self_inversive(profile, law: CoefficientLaw, m: int, seed, xi=None) -> ComplexPolynomial:
    """``K_m(z) = 1 + P_m(z) + z^{2m+1} conj(P_m(1/conj z)) + z^{2m+1}`` without the ``k=0`` term.

    Coefficients: ``c_0 = c_{2m+1} = 1``; ``c_k = b(k) xi_k`` and
    ``c_{2m+1-k} = b(k) conj(xi_k)`` for ``1 <= k <= m``.  ``xi`` (length
    ``m``, holding ``xi_1..xi_m``) overrides the random draw.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    lb = profile.log_b(np.arange(1, m + 1, dtype=float))
    shift = max(0.0, float(lb.max()))
    w = np.exp(lb - shift)
    if xi is None:
        xi = law.sample(_as_seed(seed).rng(), m)
    else:
        xi = np.asarray(xi, dtype=complex)
        if xi.shape != (m,):
            raise ValueError("xi override must have length m")
    c = np.empty(2 * m + 2, dtype=complex)
    c[0] = c[-1] = math.exp(-shift)
    c[1:m + 1] = w * xi
    c[m + 1:2 * m + 1] = (w * np.conj(xi))[::-1]
    return ComplexPolynomial(c, shift)


def p_infty_truncation(profile: CoefficientProfile, rel_tail: float = 1e-8,
                       max_trunc: int = 10_000_000) -> int:
    """Smallest ``T`` with ``sum_{k>T} b(k)^2 < rel_tail * sum_{k>=0} b(k)^2``.

    Raises ``ValueError`` if ``T`` would exceed ``max_trunc`` (profiles very
    close to ``alpha = -1/2`` converge far too slowly for the rule).
    """
    total = tail_sum(profile, 2.0 * profile.alpha) + float(profile.b(0)) ** 2
    target = (1.0 - rel_tail) * total
    acc = 0.0
    k0 = 0
    chunk = 1 << 16
    while k0 <= max_trunc:
        k1 = min(k0 + chunk, max_trunc + 1)
        b2 = np.exp(2.0 * profile.log_b(np.arange(k0, k1, dtype=float)))
        cum = acc + np.cumsum(b2)
        hit = np.flatnonzero(cum > target)
        if hit.size:
            return int(k0 + hit[0])
        acc = float(cum[-1])
        k0 = k1
        chunk *= 2
    raise ValueError(
        f"tail rule needs more than {max_trunc} terms for {profile}; pass an explicit trunc")


def sample_p_infty(profile, law: CoefficientLaw, trunc, phis, seed, xi=None) -> np.ndarray:
    """``sum_{k=0}^{T} b(k) xi_k e^{i phi k}`` for each ``phi`` (one shared draw).

    ``trunc=None`` applies :func:`p_infty_truncation`.
    """
    if phase_classify(profile) is not PhaseClass.STRONG_CRYSTALLINE:
        raise ValueError("P_infinity lives on the unit circle only in the strong crystalline phase")
    T = p_infty_truncation(profile) if trunc is None else int(trunc)
    if T < 0:
        raise ValueError("trunc must be >= 0")
    b = np.exp(profile.log_b(np.arange(T + 1, dtype=float)))
    if xi is None:
        xi = law.sample(_as_seed(seed).rng(), T + 1)
    else:
        xi = np.asarray(xi, dtype=complex)
        if xi.shape != (T + 1,):
            raise ValueError("xi override must have length trunc+1")
    c = b * xi
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    out = np.empty(phis.size, dtype=complex)
    k = np.arange(T + 1, dtype=float)
    step = max(1, 4_000_000 // (T + 1))
    for i in range(0, phis.size, step):
        ph = phis[i:i + step]
        out[i:i + step] = np.exp(1j * np.outer(ph, k)) @ c
    return out


def _is_real_direction(psi: float) -> bool:
    r = math.remainder(psi, math.pi)
    return abs(r) < 1e-12


def sample_gaf(alpha: float, law: CoefficientLaw, psi: float, u_grid, n_disc: int = 10_000,
               seed=0) -> np.ndarray:
    """Discretised ``G_psi(u) = int_0^1 t^alpha e^{u t} dB(t)`` on ``u_grid``.

    ``B`` has independent real/imaginary parts with variances
    ``sigma1^2``/``sigma2^2`` per unit time when ``psi`` is in ``{0, pi}``,
    and ``sigma^2/2`` each otherwise.  Cells are uniform with midpoint nodes;
    for ``alpha < 0`` the first cell's weight is ``sqrt(int_0^h t^{2 alpha} dt / h)``.
    """
    if not alpha > -0.5:
        raise ValueError("the GAF integral needs alpha > -1/2")
    if n_disc < 100:
        raise ValueError("n_disc must be >= 100")
    u = np.atleast_1d(np.asarray(u_grid, dtype=complex))
    h = 1.0 / n_disc
    t = (np.arange(n_disc) + 0.5) * h
    w = t ** alpha
    if alpha < 0:
        w[0] = math.sqrt(h ** (2 * alpha) / (2 * alpha + 1))
    if _is_real_direction(psi):
        s1, s2 = law.sigma1, law.sigma2
    else:
        s1 = s2 = math.sqrt(law.variance / 2.0)
    z = _as_seed(seed).rng().standard_normal((2, n_disc))
    db = math.sqrt(h) * (s1 * z[0] + 1j * s2 * z[1])
    c = w * db
    out = np.empty(u.size, dtype=complex)
    step = max(1, 2_000_000 // n_disc)
    for i in range(0, u.size, step):
        out[i:i + step] = np.exp(np.outer(u[i:i + step], t)) @ c
    return out


def haar_unitary(n: int, seed) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary: QR of complex Ginibre, phases of ``diag R`` removed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _as_seed(seed).rng()
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[None, :]


def haar_log_charpoly(n: int, k_max: int, seed) -> np.ndarray:
    """``[Tr U, Tr U^2, ..., Tr U^k_max]`` for one Haar unitary ``U``.

    These are the coefficients of ``-log det(I - zU) = sum_k Tr(U^k) z^k / k``.
    """
    if not 1 <= k_max <= n:
        raise ValueError("need 1 <= k_max <= n")
    u = haar_unitary(n, seed)
    out = np.empty(k_max, dtype=complex)
    p = u
    for k in range(k_max):
        out[k] = np.trace(p)
        if k + 1 < k_max:
            p = p @ u
    return out
