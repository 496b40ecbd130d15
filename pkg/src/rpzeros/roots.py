"""Zeros of polynomials and of analytic functions on rectangles."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigvals
from scipy.spatial import cKDTree

from . import _aberth
from .ensembles import ComplexPolynomial

__all__ = [
    "RootConfig",
    "ZeroSet",
    "RootFindingError",
    "polynomial_zeros",
    "newton_polygon_guesses",
    "companion_zeros",
    "refine_zeros",
    "window_zeros",
    "CircleCount",
    "count_on_unit_circle",
    "circle_sign_changes",
]

_EPS = np.finfo(float).eps


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RootConfig:
    """Root-finder settings.

    ``tol`` bounds the backward error ``|p(z)| / sum_k |c_k||z|^k``; it is
    raised to ``4 (n+1) eps`` for large degrees, where Horner evaluation
    itself cannot certify anything smaller.
    """

    max_iters: int = 400
    tol: float = 1e-12
    fallback: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def effective_tol(self, degree: int) -> float:
        return max(self.tol, 4.0 * (degree + 1) * _EPS)


@dataclass
class ZeroSet:
    zeros: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    diagnostic: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.zeros.size

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def to_csv(self, fh=None) -> str | None:
        """Write ``re,im,residual,converged`` rows; returns the text if ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "residual", "converged"])
        for z, r, c in zip(self.zeros, self.residuals, self.converged):
            w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(r)), int(bool(c))])
        return buf.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, text: str) -> "ZeroSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        z = np.array([complex(float(r["re"]), float(r["im"])) for r in rows], dtype=complex)
        res = np.array([float(r["residual"]) for r in rows])
        conv = np.array([bool(int(r["converged"])) for r in rows], dtype=bool)
        return cls(z, res, conv)


# ---------------------------------------------------------------------------
# polynomial zeros
# ---------------------------------------------------------------------------

def _upper_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # drop i1 unless it lies strictly above the chord i0 -> i
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def newton_polygon_guesses(c: np.ndarray) -> np.ndarray:
    """Initial guesses on circles whose radii come from the Newton polygon.

    For each edge ``(i, j)`` of the upper convex hull of ``(k, log|c_k|)``,
    ``j - i`` points are placed on the circle of radius
    ``(|c_i|/|c_j|)**(1/(j-i))`` with evenly spaced, deterministically
    offset angles.
    """
    n = c.size - 1
    mag = np.abs(c)
    idx = np.flatnonzero(mag > 0)
    x = idx.astype(float)
    y = np.log(mag[idx])
    hull = _upper_hull(x, y)
    out = np.empty(n, dtype=complex)
    pos = 0
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    for e, (i0, i1) in enumerate(zip(hull[:-1], hull[1:])):
        k0, k1 = idx[i0], idx[i1]
        cnt = int(k1 - k0)
        rad = math.exp((y[i0] - y[i1]) / (k1 - k0))
        offset = 2.0 * math.pi * ((e * golden) % 1.0) + 0.4
        ang = offset + 2.0 * math.pi * np.arange(cnt) / cnt
        out[pos:pos + cnt] = rad * np.exp(1j * ang)
        pos += cnt
    return out


def companion_zeros(c: np.ndarray) -> np.ndarray:
    """Eigenvalues of the (LAPACK-balanced) companion matrix of ascending ``c``."""
    n = c.size - 1
    mon = c[:-1] / c[-1]
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -mon
    return eigvals(comp, overwrite_a=True, check_finite=False)


def _trim(c: np.ndarray) -> tuple[np.ndarray, int]:
    """Drop vanishing top coefficients and factor out zeros at the origin."""
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise ValueError("the zero polynomial has no well-defined zero set")
    c = c[: nz[-1] + 1]
    low = int(nz[0])
    return c[low:], low


def polynomial_zeros(p: ComplexPolynomial | np.ndarray, cfg: RootConfig | None = None) -> ZeroSet:
    """All zeros of a polynomial by Aberth-Ehrlich iteration.

    Coefficients are normalised by their largest modulus; initial guesses
    come from :func:`newton_polygon_guesses`.  If some zeros fail to meet the
    backward-error tolerance and ``cfg.fallback`` is set, the companion
    matrix eigenvalues are used as new starting points and the iteration is
    repeated.

    Parameters
    ----------
    p : ComplexPolynomial or array_like
        Ascending coefficients (the ``log_scale`` is irrelevant for zeros).
    cfg : RootConfig, optional

    Returns
    -------
    ZeroSet
        ``degree`` zeros with backward errors and convergence flags.
    """
    cfg = cfg or RootConfig()
    coeffs = p.coeffs if isinstance(p, ComplexPolynomial) else np.asarray(p, dtype=complex)
    c, n_origin = _trim(np.asarray(coeffs, dtype=complex))
    n = c.size - 1
    if n + n_origin < 1:
        raise ValueError("degree must be >= 1")
    c = c / np.abs(c).max()
    tol = cfg.effective_tol(n)
    diag = ""
    if n == 0:
        z = np.empty(0, dtype=complex)
        conv = np.empty(0, dtype=bool)
        res = np.empty(0)
        iters = 0
    elif n == 1:
        z = np.array([-c[0] / c[1]])
        res = _aberth.residuals(c, z)
        conv = res <= tol
        iters = 0
    else:
        z = newton_polygon_guesses(c)
        iters, conv, res = _aberth.aberth(c, z, tol, cfg.max_iters)
        if not conv.all() and cfg.fallback:
            z2 = companion_zeros(c)
            iters2, conv2, res2 = _aberth.aberth(c, z2, tol, cfg.max_iters)
            if conv2.sum() >= conv.sum():
                z, conv, res = z2, conv2, res2
            iters += iters2
            diag = "companion-matrix fallback used"
        if not conv.all():
            diag = (diag + "; " if diag else "") + (
                f"{int((~conv).sum())} of {n} zeros above backward-error tolerance {tol:.2e}")
    if n_origin:
        z = np.concatenate([np.zeros(n_origin, dtype=complex), z])
        res = np.concatenate([np.zeros(n_origin), res])
        conv = np.concatenate([np.ones(n_origin, dtype=bool), conv])
    return ZeroSet(z, res, conv, diag, {"iterations": int(iters), "tol": float(tol)})


def refine_zeros(p: ComplexPolynomial | np.ndarray, zeros: np.ndarray, steps: int = 20) -> np.ndarray:
    """Apply ``steps`` plain Newton steps to each zero (returns a new array)."""
    coeffs = p.coeffs if isinstance(p, ComplexPolynomial) else np.asarray(p, dtype=complex)
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.abs(c).max()
    return _aberth.newton_polish(c, np.array(zeros, dtype=complex), int(steps))


# ---------------------------------------------------------------------------
# argument principle on rectangles
# ---------------------------------------------------------------------------

def _edge_phase(f, a: complex, b: complex, scale: float, depth: int = 0):
    """Accumulated ``arg f`` along segment ``[a, b]``; returns ``(dtheta, min |f|)``."""
    m = 16
    t = np.linspace(0.0, 1.0, m + 1)
    pts = a + (b - a) * t
    vals = np.asarray(f(pts), dtype=complex)
    mins = float(np.abs(vals).min())
    if mins == 0.0:
        # a sample hit a zero: the phase is undefined and the caller rejects the contour
        return math.nan, 0.0
    d = np.angle(vals[1:] / vals[:-1])
    if np.all(np.abs(d) < math.pi / 4) or depth > 14:
        return float(d.sum()), mins
    total = 0.0
    for k in range(m):
        dk, mk = _edge_phase(f, pts[k], pts[k + 1], scale, depth + 1) if abs(d[k]) >= math.pi / 4 \
            else (float(d[k]), mins)
        total += dk
        mins = min(mins, mk)
    return total, mins


def _winding(f, x0, x1, y0, y1, scale):
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = 0.0
    fmin = math.inf
    for a, b in zip(corners, corners[1:] + corners[:1]):
        d, m = _edge_phase(f, a, b, scale)
        total += d
        fmin = min(fmin, m)
    w = total / (2.0 * math.pi)
    return w, fmin


def _newton(f, df, z0, x0, x1, y0, y1, tol, scale, iters=60):
    z = z0
    pad_x = 0.05 * (x1 - x0)
    pad_y = 0.05 * (y1 - y0)
    for _ in range(iters):
        fz = complex(f(np.array([z]))[0])
        dfz = complex(df(np.array([z]))[0])
        if dfz == 0:
            return None
        step = fz / dfz
        z = z - step
        if not (x0 - pad_x <= z.real <= x1 + pad_x and y0 - pad_y <= z.imag <= y1 + pad_y):
            return None
        if abs(step) <= 4 * _EPS * max(1.0, abs(z)):
            break
    fz = abs(complex(f(np.array([z]))[0]))
    if fz <= tol * scale and x0 <= z.real <= x1 and y0 <= z.imag <= y1:
        return z
    if fz <= tol * scale:
        return z
    return None


def window_zeros(f: Callable, df: Callable, rect, cfg: RootConfig | None = None,
                 scale: float | None = None, max_depth: int = 40) -> ZeroSet:
    """Zeros of an analytic ``f`` inside ``rect = (x0, x1, y0, y1)``.

    The winding number of ``f`` around the rectangle counts the zeros; boxes
    with a nonzero count are quartered until each holds one zero, which
    Newton's method (``df`` is the derivative) then pins down.  ``f`` and
    ``df`` must accept numpy arrays.

    Raises
    ------
    RootFindingError
        If a zero sits on the boundary even after five jittered retries, or
        the winding numbers of sub-boxes stop adding up.
    """
    cfg = cfg or RootConfig()
    x0, x1, y0, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("rectangle needs x0 < x1 and y0 < y1")
    if scale is None:
        grid = (np.linspace(x0, x1, 9)[:, None] + 1j * np.linspace(y0, y1, 9)[None, :]).ravel()
        scale = float(np.abs(f(grid)).max()) or 1.0
    tol = max(cfg.tol, 1e-12)

    base = (x0, x1, y0, y1)
    for attempt in range(6):
        w, fmin = _winding(f, *base, scale)
        if fmin > 1e-9 * scale and abs(w - round(w)) < 1e-3:
            break
        j = 1e-6 * (attempt + 1) * max(x1 - x0, y1 - y0)
        base = (x0 - j * 0.7, x1 + j * 1.3, y0 - j * 1.1, y1 + j * 0.9)
    else:
        raise RootFindingError("zero on (or numerically at) the rectangle boundary after 5 jitters")
    total = int(round(w))

    found: list[complex] = []
    stack = [(base, total, 0)]
    while stack:
        (a0, a1, b0, b1), cnt, depth = stack.pop()
        if cnt <= 0:
            continue
        if cnt == 1:
            z = _newton(f, df, complex(0.5 * (a0 + a1), 0.5 * (b0 + b1)), a0, a1, b0, b1, tol, scale)
            if z is not None and a0 <= z.real <= a1 and b0 <= z.imag <= b1:
                found.append(z)
                continue
        if depth >= max_depth:
            found.extend([complex(0.5 * (a0 + a1), 0.5 * (b0 + b1))] * cnt)
            continue
        # split slightly off-centre so sub-box edges rarely hit a zero; shift if one does
        for fx, fy in ((0.5017, 0.4983), (0.4761, 0.5239), (0.5303, 0.4597)):
            xm = a0 + fx * (a1 - a0)
            ym = b0 + fy * (b1 - b0)
            subs = [(a0, xm, b0, ym), (xm, a1, b0, ym), (a0, xm, ym, b1), (xm, a1, ym, b1)]
            ws = [_winding(f, *sb, scale) for sb in subs]
            if all(math.isfinite(w) and m > 0.0 for w, m in ws):
                break
        else:
            raise RootFindingError(f"zero on every trial split of box {(a0, a1, b0, b1)}")
        counts = [int(round(w)) for w, _ in ws]
        if sum(counts) != cnt:
            raise RootFindingError(
                f"winding mismatch: parent {cnt}, children {counts} in box {(a0, a1, b0, b1)}")
        for sb, cs in zip(subs, counts):
            stack.append((sb, cs, depth + 1))

    z = np.array(sorted(found, key=lambda v: (v.imag, v.real)), dtype=complex)
    res = np.abs(f(z)) / scale if z.size else np.empty(0)
    conv = res <= max(tol, 1e-9)
    return ZeroSet(z, res, conv, "", {"winding": total, "rect": base})


# ---------------------------------------------------------------------------
# zeros on the unit circle (self-inversive polynomials)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleCount:
    nu: int
    threshold_count: int
    paired: bool
    pairs: int
    diagnostic: str = ""


def _default_circle_tol(zs: ZeroSet) -> float:
    n = max(1, len(zs))
    amp = max(1.0, float(np.max(zs.residuals)) / _EPS) if len(zs) else 1.0
    return max(10.0 * n * _EPS * amp, 1e-9)


def count_on_unit_circle(zs: ZeroSet, tol_circle: float | None = None,
                         pair_tol: float = 1e-6) -> CircleCount:
    """Number of zeros on ``|z| = 1``, cross-checked by inversion pairing.

    Off-circle zeros of a self-inversive polynomial come in pairs
    ``(z, 1/conj z)``.  Each zero inside the disk is matched to the nearest
    unused image outside; if every off-circle zero is matched the count is
    ``total - 2 * pairs``, otherwise the plain threshold count is returned
    with ``paired = False``.
    """
    tol = _default_circle_tol(zs) if tol_circle is None else float(tol_circle)
    z = np.asarray(zs.zeros, dtype=complex)
    dev = np.abs(z) - 1.0
    on = np.abs(dev) <= tol
    thresh = int(on.sum())
    inside = z[(~on) & (dev < 0)]
    outside = z[(~on) & (dev > 0)]
    if inside.size != outside.size:
        return CircleCount(thresh, thresh, False, 0,
                           f"unbalanced off-circle zeros: {inside.size} inside, {outside.size} outside")
    if inside.size == 0:
        return CircleCount(thresh, thresh, True, 0)
    images = 1.0 / np.conj(inside)
    tree = cKDTree(np.column_stack([outside.real, outside.imag]))
    used = np.zeros(outside.size, dtype=bool)
    pairs = 0
    kq = min(8, outside.size)
    for zi in images:
        dist, idx = tree.query([zi.real, zi.imag], k=kq)
        dist = np.atleast_1d(dist)
        idx = np.atleast_1d(idx)
        for d, j in zip(dist, idx):
            if not used[j] and d <= pair_tol * max(1.0, abs(zi)):
                used[j] = True
                pairs += 1
                break
    if pairs != inside.size:
        return CircleCount(thresh, thresh, False, pairs,
                           f"pairing failed for {inside.size - pairs} off-circle zeros")
    nu = z.size - 2 * pairs
    return CircleCount(nu, thresh, True, pairs)


def circle_sign_changes(coeffs: np.ndarray, n_grid: int | None = None) -> int:
    """Sign changes of ``t -> e^{-i n t/2} K(e^{it})`` on ``[0, 2 pi)``.

    For a self-inversive ``K`` of degree ``n`` this function is real, and
    its sign changes are a lower bound for the number of zeros on the circle.
    """
    c = np.asarray(coeffs, dtype=complex)
    n = c.size - 1
    if n_grid is None:
        n_grid = 64 * (n + 1)
    if n_grid < c.size:
        raise ValueError("grid must have at least degree+1 points")
    t = 2.0 * math.pi * np.arange(n_grid) / n_grid
    # K(e^{i t_j}) = sum_k c_k e^{i k t_j}, all grid points at once
    vals = np.fft.ifft(np.concatenate([c, np.zeros(n_grid - c.size)])) * n_grid
    h = (np.exp(-0.5j * n * t) * vals).real
    s = np.sign(h)
    s = s[s != 0]
    if s.size == 0:
        return 0
    # for odd n the function is 2 pi-antiperiodic, so the wrap-around compares with a flip
    last = -s[-1] if n % 2 else s[-1]
    return int(np.count_nonzero(s[1:] != s[:-1]) + (s[0] != last))
