"""Monte Carlo experiment harness.

Every trial draws from its own :class:`~rpzeros.ensembles.SeedSpec` stream
``(master_seed, trial_id)``, so results do not depend on how trials are
scheduled over threads.  Trial results are committed in trial order and all
reductions use a fixed-order pairwise sum.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from scipy.stats import ks_2samp

from . import theory
from .ensembles import (CoefficientLaw, SeedSpec, haar_log_charpoly, parse_law, sample_gaf,
                        sample_polynomial, sample_self_inversive)
from .profiles import CoefficientProfile, PhaseClass, parse_profile, phase_classify
from .roots import RootConfig, circle_sign_changes, count_on_unit_circle, polynomial_zeros
from .scaling import make_window

__all__ = [
    "ExperimentKind",
    "ExperimentConfig",
    "ExperimentResult",
    "ExperimentAborted",
    "TrialFailure",
    "run",
    "write_outputs",
    "pairwise_sum",
    "summarize",
    "SpacingResult",
    "spacing_stats",
    "window_histogram",
    "cross_window_independence",
    "strong_weak_crossover_clt",
    "outside_disk_universality",
    "si_real_zeros",
]

Z_THRESHOLD = 4.0
MAX_FAILURE_RATE = 0.05
_STREAM_STRIDE = 1 << 32


class ExperimentKind(str, enum.Enum):
    ANNULUS_COUNT = "AnnulusCount"
    WINDOW_PROCESS = "WindowProcess"
    SPACING_STATS = "SpacingStats"
    SELF_INVERSIVE_FRACTION = "SelfInversiveFraction"
    CIRCLE_COUNTING_MEASURE = "CircleCountingMeasure"
    HAAR_TRACE_MOMENTS = "HaarTraceMoments"
    OUTSIDE_DISK_UNIVERSALITY = "OutsideDiskUniversality"
    STRONG_WEAK_CROSSOVER_CLT = "StrongWeakCrossoverCLT"
    SELF_INVERSIVE_REAL_ZEROS = "SelfInversiveRealZeros"

    def __str__(self) -> str:
        return self.value


class ExperimentAborted(RuntimeError):
    """More than 5% of the trials failed."""


class TrialFailure(RuntimeError):
    """A single trial could not be reduced (e.g. unconverged zeros)."""


_NEEDS_N = {ExperimentKind.ANNULUS_COUNT, ExperimentKind.WINDOW_PROCESS, ExperimentKind.SPACING_STATS,
            ExperimentKind.OUTSIDE_DISK_UNIVERSALITY, ExperimentKind.HAAR_TRACE_MOMENTS}
_NEEDS_M = {ExperimentKind.SELF_INVERSIVE_FRACTION, ExperimentKind.CIRCLE_COUNTING_MEASURE,
            ExperimentKind.SELF_INVERSIVE_REAL_ZEROS}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment; JSON files mirror these field names.

    Kind-specific fields are ignored by kinds that do not use them.
    ``window`` is ``(re_lo, re_hi, im_extent)`` in window coordinates.
    """

    kind: ExperimentKind
    profile: str = "alpha=0.0,slow=const:1.0,sigma=1.0"
    law: str = "icn:1.0"
    n: int | None = None
    m: int | None = None
    trials: int = 100
    master_seed: int = 0
    s1: float = -1.0
    s2: float = 1.0
    psis: tuple[float, ...] = (0.0,)
    window: tuple[float, float, float] = (-3.0, 3.0, 2.0 * math.pi * 5)
    bins: int = 12
    band: float = 8.0
    k_max: int = 8
    trunc: int | None = None
    alphas: tuple[float, ...] = ()
    radii: tuple[float, float] = (1.05, 1.5)
    x: float = math.pi / 2
    t_max: float = 2.0 * math.pi
    t_grid: int = 1000
    n_disc: int = 4000
    threads: int = field(default=1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        for name in ("psis", "window", "alphas", "radii"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        self.profile_obj  # validates the literal
        self.law_obj
        k = self.kind
        if k in _NEEDS_N and (self.n is None or self.n < 1):
            raise ValueError(f"{k} needs n >= 1")
        if k in _NEEDS_M and (self.m is None or self.m < 1):
            raise ValueError(f"{k} needs m >= 1")
        if k in (ExperimentKind.ANNULUS_COUNT,) and not self.s1 < self.s2:
            raise ValueError("need s1 < s2")
        if k is ExperimentKind.WINDOW_PROCESS:
            lo, hi, ext = self.window
            if not (lo < hi and ext > 0) or self.bins < 1 or not self.psis:
                raise ValueError("window needs re_lo < re_hi, im_extent > 0, bins >= 1, psis non-empty")
        if k is ExperimentKind.HAAR_TRACE_MOMENTS and not 1 <= self.k_max <= self.n:
            raise ValueError("need 1 <= k_max <= n")
        if k is ExperimentKind.OUTSIDE_DISK_UNIVERSALITY:
            if len(self.alphas) < 2 or not 0 <= self.radii[0] <= self.radii[1] or len(self.radii) != 2:
                raise ValueError("need >= 2 alphas and 0 <= r1 <= r2")
        if k is ExperimentKind.STRONG_WEAK_CROSSOVER_CLT:
            if not self.alphas or any(a >= -0.5 for a in self.alphas):
                raise ValueError("the crossover sweep needs alphas < -1/2")
        if k is ExperimentKind.SPACING_STATS and not self.band > 0:
            raise ValueError("band must be positive")

    @property
    def profile_obj(self) -> CoefficientProfile:
        return parse_profile(self.profile)

    @property
    def law_obj(self) -> CoefficientLaw:
        return parse_law(self.law)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        for name in ("psis", "window", "alphas", "radii"):
            d[name] = list(d[name])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[dict]
    summary: dict
    histogram: list[dict] | None = None

    def records_csv(self) -> str:
        return _rows_to_csv(self.records)

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True, default=_json_default) + "\n"

    def histogram_csv(self) -> str | None:
        return None if self.histogram is None else _rows_to_csv(self.histogram)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def pairwise_sum(values) -> float:
    """Fixed-order pairwise (tree) summation."""
    v = [float(x) for x in values]
    if not v:
        return 0.0
    while len(v) > 1:
        nxt = [v[i] + v[i + 1] for i in range(0, len(v) - 1, 2)]
        if len(v) % 2:
            nxt.append(v[-1])
        v = nxt
    return v[0]


def summarize(values, theory_value: float | None = None) -> dict:
    """Mean, standard error (``sd/sqrt(n)``), theory value and z-score."""
    v = [float(x) for x in values]
    n = len(v)
    out = {"n": n, "mean": math.nan, "se": math.nan, "theory": theory_value, "z": None}
    if n == 0:
        return out
    mean = pairwise_sum(v) / n
    se = math.sqrt(pairwise_sum((x - mean) ** 2 for x in v) / (n - 1) / n) if n > 1 else math.nan
    out["mean"] = mean
    out["se"] = se
    if theory_value is not None and math.isfinite(theory_value) and se > 0:
        out["z"] = (mean - theory_value) / se
    return out


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    cols: list[str] = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) if c in r and r[c] is not None else "" for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# statistics helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpacingResult:
    mean_gap: float
    cv: float
    count: int
    skipped: bool = False


def spacing_stats(angles, period: float | None = 2.0 * math.pi, min_count: int = 10) -> SpacingResult:
    """Mean gap and coefficient of variation of sorted angular gaps.

    With ``period`` set, the wrap-around gap is included (angles on a
    circle); ``period=None`` treats the points as lying on a line.
    """
    a = np.sort(np.asarray(angles, dtype=float).ravel())
    if a.size < min_count:
        return SpacingResult(math.nan, math.nan, int(a.size), True)
    if period is not None:
        a = np.mod(a, period)
        a.sort()
        gaps = np.diff(np.concatenate([a, [a[0] + period]]))
    else:
        gaps = np.diff(a)
    mean = float(np.mean(gaps))
    return SpacingResult(mean, float(np.std(gaps) / mean), int(a.size))


def window_histogram(re_u_per_trial, im_extent: float, edges, theory_fn: Callable | None = None):
    """Empirical intensity per unit area over bins of ``Re u``.

    ``re_u_per_trial`` is a sequence (one entry per trial) of arrays of
    ``Re u`` for the window zeros.  Density per bin is
    ``counts / (trials * im_extent * bin_width)``; z-scores use the
    across-trial standard error.
    """
    edges = np.asarray(edges, dtype=float)
    nb = edges.size - 1
    trials = len(re_u_per_trial)
    per = np.zeros((trials, nb))
    for i, r in enumerate(re_u_per_trial):
        r = np.asarray(r, dtype=float)
        if r.size:
            per[i] = np.histogram(r, bins=edges)[0]
    width = np.diff(edges)
    rows = []
    for j in range(nb):
        dens = per[:, j] / (im_extent * width[j])
        st = summarize(dens)
        mid = 0.5 * (edges[j] + edges[j + 1])
        th = None if theory_fn is None else float(theory_fn(mid))
        z = None
        if th is not None and trials > 1 and st["se"] > 0:
            z = (st["mean"] - th) / st["se"]
        rows.append({"bin_lo": float(edges[j]), "bin_hi": float(edges[j + 1]),
                     "empirical": st["mean"] if trials else 0.0, "se": st["se"] if trials > 1 else 0.0,
                     "theory": th, "z": z})
    return rows


def cross_window_independence(counts, psis) -> list[dict]:
    """Pairwise correlations of per-trial window counts.

    ``counts`` has shape ``(trials, len(psis))``.  SE is the null-hypothesis
    ``sqrt((1 - r^2)/(trials - 2))``.  Constant columns give ``corr = nan``.
    """
    c = np.asarray(counts, dtype=float)
    out = []
    if len(psis) < 2:
        return out
    t = c.shape[0]
    for i in range(len(psis)):
        for j in range(i + 1, len(psis)):
            x, y = c[:, i], c[:, j]
            sx, sy = x.std(), y.std()
            if t < 3 or sx == 0 or sy == 0:
                r, se = math.nan, math.nan
            else:
                r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
                if abs(r) > 1.0 - 1e-12:
                    r = math.copysign(1.0, r)
                se = math.sqrt(max(1.0 - r * r, 0.0) / (t - 2))
            conj = abs(math.remainder(psis[i] + psis[j], 2.0 * math.pi)) < 1e-12
            # |r| = 1 (e.g. conjugate windows of a real polynomial) has se = 0 and no finite z
            exact = math.isfinite(r) and se == 0.0
            out.append({"psi_i": float(psis[i]), "psi_j": float(psis[j]), "corr": r, "se": se,
                        "z": (r / se) if se > 0 else None, "exact_dependence": exact,
                        "conjugate_pair": conj})
    return out


def _sample_kurtosis(x) -> float:
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    v = np.mean(d * d)
    return float(np.mean(d ** 4) / (v * v)) if v > 0 else math.nan


def strong_weak_crossover_clt(alphas, law: CoefficientLaw, trials: int, master_seed: int = 0,
                              trunc: int | None = None, psi: float = 0.0, slow=None,
                              max_trunc: int = 200_000) -> list[dict]:
    """Normality statistics of ``sum_k b(k) xi_k e^{i psi k} / sqrt(S)`` per alpha.

    ``S = sum_{k<=T} b(k)^2`` over the same truncation, so ``E|X|^2 = sigma^2``
    exactly.  Reports mean ``|X|^2``, mean ``X^2`` (pseudo-variance), the
    sample kurtosis of ``Re X`` and the concentration ratio ``max b^2 / S``.
    """
    cfg = ExperimentConfig(ExperimentKind.STRONG_WEAK_CROSSOVER_CLT, trials=trials, law=law.literal(),
                           master_seed=master_seed, alphas=tuple(alphas), trunc=trunc,
                           psis=(psi,))
    res = run(cfg, slow=slow, max_trunc=max_trunc)
    return res.summary["statistics"]["per_alpha"]


def outside_disk_universality(alphas, law: CoefficientLaw, n: int, trials: int, master_seed: int = 0,
                              radii=(1.05, 1.5), threads: int = 1) -> dict:
    """Mean counts of zeros in ``r1 <= |z| <= r2`` per alpha, with pairwise z-scores."""
    if n < 500:
        raise ValueError("n must be >= 500")
    cfg = ExperimentConfig(ExperimentKind.OUTSIDE_DISK_UNIVERSALITY, law=law.literal(), n=n,
                           trials=trials, master_seed=master_seed, alphas=tuple(alphas),
                           radii=tuple(radii), threads=threads)
    return run(cfg).summary


def si_real_zeros(profile, law: CoefficientLaw, m: int, trials: int, master_seed: int = 0,
                  t_max: float = 2.0 * math.pi, threads: int = 1) -> dict:
    """Real zeros of ``t -> K_m(e^{i t/m})`` on ``[0, t_max]``; see :func:`run`."""
    cfg = ExperimentConfig(ExperimentKind.SELF_INVERSIVE_REAL_ZEROS, profile=profile.literal(),
                           law=law.literal(), m=m, trials=trials, master_seed=master_seed,
                           t_max=t_max, threads=threads)
    return run(cfg).summary


# ---------------------------------------------------------------------------
# per-kind trial functions
# ---------------------------------------------------------------------------

def _zeros(poly) -> np.ndarray:
    zs = polynomial_zeros(poly, RootConfig())
    if not zs.all_converged:
        raise TrialFailure(zs.diagnostic)
    return zs.zeros


def _window_coords(w, z) -> np.ndarray:
    """``u`` for each zero, with ``Im u`` measured from ``n psi`` and wrapped."""
    z = z[z != 0]
    re = w.n * (np.log(np.abs(z)) - w.log_radius)
    ang = np.angle(z * np.exp(-1j * w.psi))
    return re + 1j * w.n * ang


class _Context:
    """Per-experiment precomputations shared (read-only) by all trials."""

    def __init__(self, cfg: ExperimentConfig, **opts):
        self.cfg = cfg
        self.profile = cfg.profile_obj
        self.law = cfg.law_obj
        self.opts = opts
        k = cfg.kind
        if k in (ExperimentKind.ANNULUS_COUNT, ExperimentKind.SPACING_STATS):
            self.window = make_window(self.profile, cfg.n, 0.0)
        if k is ExperimentKind.WINDOW_PROCESS:
            self.windows = [make_window(self.profile, cfg.n, p) for p in cfg.psis]
        if k is ExperimentKind.STRONG_WEAK_CROSSOVER_CLT:
            self._prep_clt()
        if k is ExperimentKind.OUTSIDE_DISK_UNIVERSALITY:
            base = self.profile
            self.profiles = [CoefficientProfile(a, base.slow, base.sigma) for a in cfg.alphas]
        if k is ExperimentKind.SELF_INVERSIVE_REAL_ZEROS:
            m = cfg.m
            self.t = np.linspace(0.0, cfg.t_max, cfg.t_grid)
            theta = self.t / m
            # rows: e^{i k theta_j}, k = 1..m, for K(e^{i theta}); built once
            self.phase_half = np.exp(-0.5j * (2 * m + 1) * theta)
            self.theta = theta

    def _prep_clt(self):
        cfg = self.cfg
        slow = self.opts.get("slow") or self.profile.slow
        max_trunc = self.opts.get("max_trunc", 200_000)
        from .ensembles import p_infty_truncation
        self.clt = []
        for a in cfg.alphas:
            prof = CoefficientProfile(a, slow, self.profile.sigma)
            tail_rule = True
            if cfg.trunc is not None:
                T = int(cfg.trunc)
                tail_rule = False
            else:
                try:
                    T = p_infty_truncation(prof, max_trunc=max_trunc)
                except ValueError:
                    T = max_trunc
                    tail_rule = False
            b2 = np.exp(2.0 * prof.log_b(np.arange(T + 1, dtype=float)))
            S = math.fsum(b2)
            self.clt.append((a, T, tail_rule, np.sqrt(b2 / S), float(b2.max() / S)))


def _trial_annulus(ctx: _Context, seed: SeedSpec) -> dict:
    cfg, w = ctx.cfg, ctx.window
    poly = sample_polynomial(ctx.profile, ctx.law, cfg.n, seed)
    z = _zeros(poly)
    s = cfg.n * (np.log(np.abs(z[z != 0])) - w.log_radius)
    n_origin = int(np.count_nonzero(z == 0))
    inside = int(np.count_nonzero((s >= cfg.s1) & (s <= cfg.s2)))
    below = int(np.count_nonzero(s < cfg.s1)) + n_origin
    above = int(np.count_nonzero(s > cfg.s2))
    rec = {"count": inside, "below": below, "above": above, "count_over_n": inside / cfg.n}
    if w.phase is PhaseClass.STRONG_CRYSTALLINE:
        # matched P_infinity: same coefficients, evaluated on the circle
        phis = 2.0 * math.pi * np.arange(512) / 512
        vals = _eval_circle(poly.coeffs, phis)
        p_sq = np.abs(vals) ** 2 * math.exp(2.0 * poly.log_scale)
        rec["functional"] = theory.strong_annulus(p_sq, cfg.s1, cfg.s2, ctx.law.variance)
    return rec


def _eval_circle(c, phis):
    """``sum_k c_k e^{i k phi}`` for each ``phi`` (FFT when the grid is fine enough)."""
    n_grid = phis.size
    if c.size <= n_grid:
        return np.fft.ifft(np.concatenate([c, np.zeros(n_grid - c.size)])) * n_grid
    # alias-fold coefficients onto the grid: e^{i k phi_j} only depends on k mod n_grid
    folded = np.zeros(n_grid, dtype=complex)
    np.add.at(folded, np.arange(c.size) % n_grid, c)
    return np.fft.ifft(folded) * n_grid


def _trial_window(ctx: _Context, seed: SeedSpec) -> dict:
    cfg = ctx.cfg
    lo, hi, ext = cfg.window
    poly = sample_polynomial(ctx.profile, ctx.law, cfg.n, seed)
    z = _zeros(poly)
    rec: dict = {}
    re_lists = []
    for i, w in enumerate(ctx.windows):
        u = _window_coords(w, z)
        sel = (u.real >= lo) & (u.real <= hi) & (np.abs(u.imag) <= 0.5 * ext)
        rec[f"count_{i}"] = int(np.count_nonzero(sel))
        re_lists.append(u.real[sel])
    rec["_re_u"] = re_lists
    return rec


def _trial_spacing(ctx: _Context, seed: SeedSpec) -> dict:
    cfg, w = ctx.cfg, ctx.window
    z = _zeros(sample_polynomial(ctx.profile, ctx.law, cfg.n, seed))
    z = z[z != 0]
    s = cfg.n * (np.log(np.abs(z)) - w.log_radius)
    band = np.abs(s) < cfg.band
    sp = spacing_stats(np.angle(z[band]))
    return {"in_band_fraction": float(np.count_nonzero(band)) / cfg.n, "cv": sp.cv,
            "mean_gap": sp.mean_gap, "spacing_skipped": sp.skipped}


def _circle_nu(poly) -> tuple[np.ndarray, int]:
    zs = polynomial_zeros(poly, RootConfig())
    if not zs.all_converged:
        raise TrialFailure(zs.diagnostic)
    cc = count_on_unit_circle(zs)
    if cc.paired:
        return zs.zeros, cc.nu
    sc = circle_sign_changes(poly.coeffs)
    if sc == cc.threshold_count:
        return zs.zeros, sc
    raise TrialFailure(f"circle count not certified: {cc.diagnostic}; sign changes {sc}")


def _on_circle_mask(z, nu):
    """The ``nu`` zeros closest to the unit circle."""
    order = np.argsort(np.abs(np.abs(z) - 1.0), kind="stable")
    mask = np.zeros(z.size, dtype=bool)
    mask[order[:nu]] = True
    return mask


def _trial_si_fraction(ctx: _Context, seed: SeedSpec) -> dict:
    m = ctx.cfg.m
    _, nu = _circle_nu(sample_self_inversive(ctx.profile, ctx.law, m, seed))
    return {"nu": nu, "fraction": nu / (2 * m + 1)}


def _trial_counting(ctx: _Context, seed: SeedSpec) -> dict:
    m, x = ctx.cfg.m, ctx.cfg.x
    z, nu = _circle_nu(sample_self_inversive(ctx.profile, ctx.law, m, seed))
    ang = np.mod(np.angle(z[_on_circle_mask(z, nu)]), 2.0 * math.pi)
    cnt = int(np.count_nonzero(ang <= x))
    return {"nu": nu, "arc_count": cnt, "arc_fraction": cnt / (2 * m + 1)}


def _trial_haar(ctx: _Context, seed: SeedSpec) -> dict:
    tr = haar_log_charpoly(ctx.cfg.n, ctx.cfg.k_max, seed)
    return {f"abs_tr_sq_{k + 1}": float(abs(t) ** 2) for k, t in enumerate(tr)}


def _trial_outside(ctx: _Context, seed: SeedSpec) -> dict:
    cfg = ctx.cfg
    r1, r2 = cfg.radii
    rec = {}
    for j, prof in enumerate(ctx.profiles):
        sd = seed.child(j * _STREAM_STRIDE + seed.stream_id)
        z = _zeros(sample_polynomial(prof, ctx.law, cfg.n, sd))
        a = np.abs(z)
        rec[f"count_{j}"] = int(np.count_nonzero((a >= r1) & (a <= r2)))
        rec[f"beyond2_{j}"] = int(np.count_nonzero(a > 2.0))
    return rec


def _trial_clt(ctx: _Context, seed: SeedSpec) -> dict:
    psi = ctx.cfg.psis[0]
    rec = {}
    for j, (a, T, _, w, _) in enumerate(ctx.clt):
        rng = seed.child(j * _STREAM_STRIDE + seed.stream_id).rng()
        xi = ctx.law.sample(rng, T + 1)
        if psi == 0.0:
            x = complex(math.fsum((w * xi.real).tolist()), math.fsum((w * xi.imag).tolist()))
        else:
            x = complex(np.sum(w * xi * np.exp(1j * psi * np.arange(T + 1))))
        rec[f"re_{j}"] = x.real
        rec[f"im_{j}"] = x.imag
        rec[f"abs_sq_{j}"] = abs(x) ** 2
        rec[f"sq_re_{j}"] = (x * x).real
    return rec


def _sign_changes(h) -> np.ndarray:
    s = np.sign(h)
    return np.flatnonzero(s[1:] * s[:-1] < 0)


def _trial_si_real(ctx: _Context, seed: SeedSpec) -> dict:
    cfg = ctx.cfg
    m = cfg.m
    poly = sample_self_inversive(ctx.profile, ctx.law, m, seed)
    c = poly.coeffs
    k = np.arange(c.size, dtype=float)
    vals = np.exp(1j * np.outer(ctx.theta, k)) @ c
    h = (ctx.phase_half * vals).real
    idx = _sign_changes(h)
    # linear interpolation of the crossings
    t = ctx.t
    roots = t[idx] - h[idx] * (t[idx + 1] - t[idx]) / (h[idx + 1] - h[idx])
    rec = {"real_zeros": int(idx.size), "_roots": roots}
    if phase_classify(ctx.profile) is PhaseClass.LIQUID:
        g = sample_gaf(ctx.profile.alpha, ctx.law, 0.0, 1j * t, n_disc=cfg.n_disc,
                       seed=seed.child(_STREAM_STRIDE + seed.stream_id))
        hg = 2.0 * (np.exp(-1j * t) * g).real
        rec["gaf_real_zeros"] = int(_sign_changes(hg).size)
    return rec


_TRIALS = {
    ExperimentKind.ANNULUS_COUNT: _trial_annulus,
    ExperimentKind.WINDOW_PROCESS: _trial_window,
    ExperimentKind.SPACING_STATS: _trial_spacing,
    ExperimentKind.SELF_INVERSIVE_FRACTION: _trial_si_fraction,
    ExperimentKind.CIRCLE_COUNTING_MEASURE: _trial_counting,
    ExperimentKind.HAAR_TRACE_MOMENTS: _trial_haar,
    ExperimentKind.OUTSIDE_DISK_UNIVERSALITY: _trial_outside,
    ExperimentKind.STRONG_WEAK_CROSSOVER_CLT: _trial_clt,
    ExperimentKind.SELF_INVERSIVE_REAL_ZEROS: _trial_si_real,
}


# ---------------------------------------------------------------------------
# summaries per kind
# ---------------------------------------------------------------------------

def _col(recs, name):
    return [r[name] for r in recs]


def _is_gaussian(law: CoefficientLaw) -> bool:
    return law.kind.value == "icn"


def _summary_annulus(ctx, recs):
    cfg, prof, w = ctx.cfg, ctx.profile, ctx.window
    out = {}
    th = None
    if w.phase is PhaseClass.LIQUID:
        th = theory.liquid_annulus(prof.alpha, cfg.s1, cfg.s2)
    elif w.phase is PhaseClass.WEAK_CRYSTALLINE:
        th = theory.weak_annulus(cfg.s1, cfg.s2)
    out["count_over_n"] = summarize(_col(recs, "count_over_n"), th)
    if _is_gaussian(ctx.law):
        r1 = math.exp(w.log_radius + cfg.s1 / cfg.n)
        r2 = math.exp(w.log_radius + cfg.s2 / cfg.n)
        out["finite_n_expectation"] = theory.expected_annulus_count(prof, cfg.n, r1, r2) / cfg.n
    out["conservation_ok"] = all(r["count"] + r["below"] + r["above"] == cfg.n for r in recs)
    if w.phase is PhaseClass.STRONG_CRYSTALLINE and recs:
        f = _col(recs, "functional")
        out["functional"] = summarize(f)
        out["count_over_n"]["theory"] = out["functional"]["mean"]
        ks = float(ks_2samp(_col(recs, "count_over_n"), f).statistic)
        out["ks_distance"] = ks
        out["ks_soft_pass"] = ks < 0.15
    return out


def _summary_window(ctx, recs):
    cfg, prof = ctx.cfg, ctx.profile
    lo, hi, ext = cfg.window
    w0 = ctx.windows[0]
    edges = np.linspace(lo, hi, cfg.bins + 1)
    if w0.phase is PhaseClass.LIQUID:
        theory_fn = (lambda s: theory.rho1(prof.alpha, s))
    elif w0.phase is PhaseClass.WEAK_CRYSTALLINE:
        theory_fn = theory.weak_intensity
    else:
        m_a, _ = theory.m_alpha(prof, include_zero_term=True)
        theory_fn = (lambda s: theory.strong_intensity(s, m_a))
    hist = window_histogram([r["_re_u"][0] for r in recs], ext, edges, theory_fn)
    if _is_gaussian(ctx.law):
        for row in hist:
            mid = 0.5 * (row["bin_lo"] + row["bin_hi"])
            row["theory_finite_n"] = theory.window_intensity_finite(prof, cfg.n, mid, w0.log_radius)
    counts = np.array([[r[f"count_{i}"] for i in range(len(cfg.psis))] for r in recs], dtype=float)
    out = {f"count_{i}": summarize(counts[:, i]) for i in range(len(cfg.psis))}
    out["cross_window"] = cross_window_independence(counts, cfg.psis)
    zs = [row["z"] for row in hist if row["z"] is not None]
    out["histogram_max_abs_z"] = max((abs(z) for z in zs), default=None)
    return out, hist


def _summary_spacing(ctx, recs):
    cvs = [r["cv"] for r in recs if not r["spacing_skipped"]]
    return {
        "cv": summarize(cvs),
        "cv_median": float(np.median(cvs)) if cvs else math.nan,
        "in_band_fraction": summarize(_col(recs, "in_band_fraction")),
        "in_band_fraction_min": float(min(_col(recs, "in_band_fraction"))) if recs else math.nan,
        "spacing_skipped": sum(bool(r["spacing_skipped"]) for r in recs),
    }


def _si_sigma2(law) -> float:
    # the self-inversive formulas take the variance of each real component
    return law.variance / 2.0


def _summary_si_fraction(ctx, recs):
    th = theory.si_expected_fraction(ctx.profile, ctx.cfg.m, _si_sigma2(ctx.law))
    return {"fraction": summarize(_col(recs, "fraction"), th)}


def _summary_counting(ctx, recs):
    th = theory.si_counting_measure(ctx.profile, ctx.cfg.m, ctx.cfg.x, _si_sigma2(ctx.law))
    return {"arc_fraction": summarize(_col(recs, "arc_fraction"), th),
            "uniform_limit": ctx.cfg.x / (2.0 * math.pi) * theory.si_expected_fraction(
                ctx.profile, ctx.cfg.m, _si_sigma2(ctx.law))}


def _summary_haar(ctx, recs):
    return {f"abs_tr_sq_{k}": summarize(_col(recs, f"abs_tr_sq_{k}"), float(k))
            for k in range(1, ctx.cfg.k_max + 1)}


def _summary_outside(ctx, recs):
    cfg = ctx.cfg
    per = []
    for j, a in enumerate(cfg.alphas):
        per.append({"alpha": a, "count": summarize(_col(recs, f"count_{j}")),
                    "beyond2": summarize(_col(recs, f"beyond2_{j}"))})
    pairs = []
    for i in range(len(per)):
        for j in range(i + 1, len(per)):
            a, b = per[i]["count"], per[j]["count"]
            # same trial index shares no randomness across alphas (separate streams)
            se = math.sqrt(a["se"] ** 2 + b["se"] ** 2)
            diff = a["mean"] - b["mean"]
            pairs.append({"alpha_i": cfg.alphas[i], "alpha_j": cfg.alphas[j], "diff": diff, "se": se,
                          "z": diff / se if se > 0 else None})
    return {"per_alpha": per, "pairs": pairs}


def _summary_clt(ctx, recs):
    law = ctx.law
    per = []
    for j, (a, T, tail_rule, _, conc) in enumerate(ctx.clt):
        per.append({
            "alpha": a, "trunc": T, "tail_rule_met": tail_rule, "concentration": conc,
            "abs_sq": summarize(_col(recs, f"abs_sq_{j}"), law.variance),
            "pseudo": summarize(_col(recs, f"sq_re_{j}"),
                                law.pseudo_variance if ctx.cfg.psis[0] in (0.0, math.pi) else 0.0),
            "kurtosis_re": _sample_kurtosis(_col(recs, f"re_{j}")),
        })
    return {"per_alpha": per}


def _summary_si_real(ctx, recs):
    cfg = ctx.cfg
    gaps = np.concatenate([np.diff(r["_roots"]) for r in recs]) if recs else np.empty(0)
    out = {"real_zeros": summarize(_col(recs, "real_zeros")),
           "gap_mean": float(gaps.mean()) if gaps.size else math.nan,
           "gap_cv": float(gaps.std() / gaps.mean()) if gaps.size > 1 else math.nan,
           "gap_count": int(gaps.size)}
    if recs and "gaf_real_zeros" in recs[0]:
        g = summarize(_col(recs, "gaf_real_zeros"))
        out["gaf_real_zeros"] = g
        a = out["real_zeros"]
        se = math.sqrt(a["se"] ** 2 + g["se"] ** 2)
        out["cross_z"] = (a["mean"] - g["mean"]) / se if se > 0 else None
    if phase_classify(ctx.profile) is not PhaseClass.LIQUID:
        out["lattice_gap"] = math.pi
    return out


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def run(cfg: ExperimentConfig, threads: int | None = None, **opts) -> ExperimentResult:
    """Run all trials of ``cfg`` and reduce them.

    Trials that raise :class:`TrialFailure` (or a numerical error) are
    excluded and counted; more than 5% failures raise
    :class:`ExperimentAborted`.  The result is identical for any ``threads``.
    """
    threads = cfg.threads if threads is None else int(threads)
    ctx = _Context(cfg, **opts)
    fn = _TRIALS[cfg.kind]

    def one(i: int):
        try:
            return fn(ctx, SeedSpec(cfg.master_seed, i)), None
        except (TrialFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if threads == 1:
        outcomes = [one(i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            outcomes = list(ex.map(one, range(cfg.trials)))

    recs, failures, rows = [], [], []
    for i, (rec, err) in enumerate(outcomes):
        if rec is None:
            failures.append({"trial_id": i, "error": err})
            rows.append({"trial_id": i, "failed": True})
            continue
        recs.append(rec)
        rows.append({"trial_id": i, "failed": False,
                     **{k: v for k, v in rec.items() if not k.startswith("_")}})
    n_fail = len(failures)
    if n_fail > MAX_FAILURE_RATE * cfg.trials:
        raise ExperimentAborted(f"{n_fail} of {cfg.trials} trials failed; first: {failures[0]['error']}")

    hist = None
    k = cfg.kind
    if k is ExperimentKind.ANNULUS_COUNT:
        stats = _summary_annulus(ctx, recs)
    elif k is ExperimentKind.WINDOW_PROCESS:
        stats, hist = _summary_window(ctx, recs)
    elif k is ExperimentKind.SPACING_STATS:
        stats = _summary_spacing(ctx, recs)
    elif k is ExperimentKind.SELF_INVERSIVE_FRACTION:
        stats = _summary_si_fraction(ctx, recs)
    elif k is ExperimentKind.CIRCLE_COUNTING_MEASURE:
        stats = _summary_counting(ctx, recs)
    elif k is ExperimentKind.HAAR_TRACE_MOMENTS:
        stats = _summary_haar(ctx, recs)
    elif k is ExperimentKind.OUTSIDE_DISK_UNIVERSALITY:
        stats = _summary_outside(ctx, recs)
    elif k is ExperimentKind.STRONG_WEAK_CROSSOVER_CLT:
        stats = _summary_clt(ctx, recs)
    else:
        stats = _summary_si_real(ctx, recs)

    summary = {
        "kind": k.value,
        "trials": cfg.trials,
        "included": len(recs),
        "failures": n_fail,
        "failed_trials": failures,
        "z_threshold": Z_THRESHOLD,
        "statistics": stats,
    }
    return ExperimentResult(cfg, rows, summary, hist)


def write_outputs(result: ExperimentResult, out_dir: str) -> list[str]:
    """Write ``records.csv``, ``summary.json`` and (if any) ``histogram.csv``."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, text in (("records.csv", result.records_csv()),
                       ("summary.json", result.summary_json()),
                       ("histogram.csv", result.histogram_csv())):
        if text is None:
            continue
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        written.append(path)
    return written
