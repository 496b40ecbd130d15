"""``rpz`` command-line front end.

Every command emits CSV (to ``--out/<command>.csv`` or standard output) and
writes ``manifest.json`` into ``--out`` (default: the working directory)
echoing the fully resolved arguments; ``rpz replay manifest.json``
reproduces the run byte for byte.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import re
import sys

import numpy as np

from . import __version__, theory
from .ensembles import (SeedSpec, haar_log_charpoly, parse_law, sample_polynomial,
                        sample_self_inversive)
from .mc import ExperimentAborted, ExperimentConfig, run, summarize, write_outputs
from .profiles import CoefficientProfile, MagnitudeError, PhaseClass, parse_profile, phase_classify
from .quadrature import QuadratureError
from .roots import RootConfig, RootFindingError, polynomial_zeros
from .scaling import make_window

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class _UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sub = self.prog.partition(" ")[2]
        raise _UsageError(f"{sub}: {message}" if sub else message)


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_number(text: str) -> float:
    """A float, or a small arithmetic expression such as ``-0.5+1e-9``."""
    try:
        return float(text)
    except ValueError:
        pass

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text, mode="eval").body)
    except SyntaxError:
        raise ValueError(f"not a number: {text!r}") from None


def _numbers(text: str) -> list[float]:
    return [parse_number(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _default_seed() -> int:
    env = os.environ.get("RPZ_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise _UsageError(f"RPZ_SEED must be an integer, got {env!r}") from None


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands: each returns CSV text
# ---------------------------------------------------------------------------

def cmd_phase(a) -> str:
    prof = parse_profile(a.profile)
    w = make_window(prof, a.n)
    return _csv_text(["phase", "n", "radius", "log_radius_times_2n", "normalizer"],
                     [[w.phase.value, a.n, w.radius, 2 * a.n * w.log_radius, w.normalizer]])


def cmd_sample(a) -> str:
    prof, law = parse_profile(a.profile), parse_law(a.law)
    seed = SeedSpec(a.seed, a.stream)
    if a.m is not None:
        p = sample_self_inversive(prof, law, a.m, seed)
    else:
        p = sample_polynomial(prof, law, _need(a.n, "--n"), seed)
    rows = [[k, c.real, c.imag, p.log_scale] for k, c in enumerate(p.coeffs)]
    return _csv_text(["k", "re", "im", "log_scale"], rows)


def _need(v, flag):
    if v is None:
        raise _UsageError(f"{flag} is required")
    return v


def cmd_zeros(a) -> str:
    prof, law = parse_profile(a.profile), parse_law(a.law)
    seed = SeedSpec(a.seed, a.stream)
    if a.m is not None:
        p = sample_self_inversive(prof, law, a.m, seed)
    else:
        p = sample_polynomial(prof, law, _need(a.n, "--n"), seed)
    zs = polynomial_zeros(p, RootConfig())
    if not zs.all_converged:
        raise RootFindingError(zs.diagnostic)
    return zs.to_csv()


def cmd_intensity(a) -> str:
    prof = parse_profile(a.profile)
    lo, hi, cnt = _numbers(a.s_range)
    s_vals = np.linspace(lo, hi, int(cnt))
    phase = phase_classify(prof)
    header = ["s", "limit"]
    log_r = 0.0
    if a.n is not None:
        header.append("finite_n")
        log_r = make_window(prof, a.n).log_radius
    if phase is PhaseClass.LIQUID:
        lim = [theory.rho1(prof.alpha, s) for s in s_vals]
    elif phase is PhaseClass.WEAK_CRYSTALLINE:
        lim = [theory.weak_intensity(s) for s in s_vals]
    else:
        m_a, _ = theory.m_alpha(prof, include_zero_term=a.n is not None)
        lim = [theory.strong_intensity(s, m_a) for s in s_vals]
    if prof.alpha == 0.0 and phase is PhaseClass.LIQUID:
        header.append("kac_closed_form")
    rows = []
    for s, L in zip(s_vals, lim):
        row = [float(s), float(L)]
        if a.n is not None:
            row.append(theory.window_intensity_finite(prof, a.n, s, log_r))
        if "kac_closed_form" in header:
            row.append(theory.kac_intensity(s))
        rows.append(row)
    return _csv_text(header, rows)


def cmd_si_fraction(a) -> str:
    prof = parse_profile(a.profile)
    ms = _ints(a.ms)
    al = prof.alpha
    limit = 1.0 / math.sqrt((1 + al) * (3 + 2 * al)) if al > -0.5 else 1.0
    rows = []
    for m in ms:
        exact = theory.si_expected_fraction(prof, m)
        asym = theory.si_fraction_asymptotic(prof, m) if al <= -0.5 else float("nan")
        rows.append([m, exact, asym, limit, theory.g_ratio(prof, m)])
    return _csv_text(["m", "exact", "asymptotic", "limit", "g_ratio"], rows)


def cmd_crossover(a) -> str:
    alphas = _numbers(a.alphas)
    lo, hi, cnt = _numbers(a.s_range)
    s_vals = np.linspace(lo, hi, int(cnt))
    rows = []
    for al in alphas:
        try:
            shift = theory.crossover_shift(al)
        except ValueError:
            print(f"note: shift undefined for alpha={al!r}; curve emitted unshifted", file=sys.stderr)
            shift = 0.0
        for s in s_vals:
            rows.append([al, shift, float(s), float(theory.rho1(al, s + shift)),
                         theory.weak_intensity(s)])
    return _csv_text(["alpha", "shift", "s", "rho1_shifted", "target"], rows)


def cmd_haar(a) -> str:
    vals = np.array([np.abs(haar_log_charpoly(a.n, a.k_max, SeedSpec(a.seed, t))) ** 2
                     for t in range(a.trials)])
    rows = []
    for k in range(1, a.k_max + 1):
        st = summarize(vals[:, k - 1], float(k))
        rows.append([k, st["mean"], st["se"], float(k), st["z"]])
    return _csv_text(["k", "mean_abs_trace_sq", "se", "theory", "z"], rows)


def cmd_fig1(a) -> str:
    law = parse_law(a.law)
    rows = []
    for al in _numbers(a.alphas):
        prof = CoefficientProfile(al)
        zs = polynomial_zeros(sample_polynomial(prof, law, a.n, SeedSpec(a.seed, 0)), RootConfig())
        for z in zs.zeros:
            rows.append([al, float(z.real), float(z.imag)])
    return _csv_text(["alpha", "re", "im"], rows)


def cmd_fig2(a) -> str:
    prof = CoefficientProfile(a.alpha)
    law = parse_law(a.law)
    x0, x1, y0, y1 = _numbers(a.window)
    w = make_window(prof, a.n)
    zs = polynomial_zeros(sample_polynomial(prof, law, a.n, SeedSpec(a.seed, 0)), RootConfig())
    z = zs.zeros
    sel = (z.real >= x0) & (z.real <= x1) & (z.imag >= y0) & (z.imag <= y1)
    return _csv_text(["re", "im", "r_n"], [[float(v.real), float(v.imag), w.radius] for v in z[sel]])


def cmd_experiment(a) -> str | None:
    with open(a.config) as fh:
        d = json.load(fh)
    for flag, key in (("profile", "profile"), ("law", "law"), ("n", "n"), ("m", "m"),
                      ("seed", "master_seed"), ("trials", "trials"), ("threads", "threads")):
        v = getattr(a, flag, None)
        if v is not None:
            d[key] = v
    cfg = ExperimentConfig.from_dict(d)
    a._resolved_config = cfg.to_dict()
    res = run(cfg)
    if a.out:
        write_outputs(res, a.out)
        print(f"{cfg.kind.value}: {res.summary['included']} trials, {res.summary['failures']} failed",
              file=sys.stderr)
        return None
    return res.summary_json()


_COMMANDS = {
    "phase": cmd_phase, "sample": cmd_sample, "zeros": cmd_zeros, "intensity": cmd_intensity,
    "si-fraction": cmd_si_fraction, "crossover": cmd_crossover, "fig3": cmd_crossover,
    "haar": cmd_haar, "fig1": cmd_fig1, "fig2": cmd_fig2, "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rpz", description="Zeros of random polynomials with regularly varying coefficients.")
    p.add_argument("--version", action="version", version=f"rpz {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def common(sp, n=True, m=False, law=True, seed=True):
        sp.add_argument("--profile", default="alpha=0.0,slow=const:1.0,sigma=1.0",
                        help="profile literal alpha=<f>,slow=<kind:param>,sigma=<f>")
        if law:
            sp.add_argument("--law", default="icn:1.0", help="icn:<s> | split:<s1>,<s2> | rademacher | uniform")
        if n:
            sp.add_argument("--n", type=int, help="degree")
        if m:
            sp.add_argument("--m", type=int, help="self-inversive half degree (degree 2m+1)")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="master seed (default $RPZ_SEED or 0)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--threads", type=int, default=None, help="thread cap")

    sp = sub.add_parser("phase", help="phase class, r_n and c_n of a profile at degree n")
    common(sp, law=False, seed=False)
    sp = sub.add_parser("sample", help="emit random coefficients")
    common(sp, m=True)
    sp.add_argument("--stream", type=int, default=0)
    sp = sub.add_parser("zeros", help="emit the zeros of one random polynomial")
    common(sp, m=True)
    sp.add_argument("--stream", type=int, default=0)
    sp = sub.add_parser("intensity", help="limit and finite-n zero intensities over Re u")
    common(sp, law=False, seed=False)
    sp.add_argument("--s-range", default="-3,3,61", help="lo,hi,count")
    sp = sub.add_parser("si-fraction", help="expected fraction of unit-circle zeros of self-inversive polynomials")
    common(sp, n=False, law=False, seed=False)
    sp.add_argument("--ms", default="10,100,1000,10000")
    for name, helptext in (("crossover", "shifted rho1 curves vs the 1/(4 pi cosh^2) target"),
                           ("fig3", "plot data: intensity curves approaching the crossover limit")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--alphas", default="-0.4,-0.49,-0.499,-0.5+1e-4,-0.5+1e-9")
        sp.add_argument("--s-range", default="-3,3,121")
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=None)
    sp = sub.add_parser("haar", help="mean |Tr U^k|^2 for Haar unitaries")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--k-max", type=int, default=8)
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp = sub.add_parser("fig1", help="plot data: zeros of one polynomial per alpha")
    sp.add_argument("--alphas", default="-2,-0.5,0,1")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--law", default="icn:1.0")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp = sub.add_parser("fig2", help="plot data: zeros in a rectangle plus the r_n circle radius")
    sp.add_argument("--alpha", type=parse_number, default=-3.0)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--window", default="0.9,1.1,-0.2,0.2", help="x0,x1,y0,y1")
    sp.add_argument("--law", default="icn:1.0")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp = sub.add_parser("experiment", help="Monte Carlo experiments")
    esub = sp.add_subparsers(dest="action", metavar="ACTION", parser_class=_Parser)
    ep = esub.add_parser("run", help="run an experiment config (JSON)")
    ep.add_argument("config")
    ep.add_argument("--profile", default=None)
    ep.add_argument("--law", default=None)
    ep.add_argument("--n", type=int, default=None)
    ep.add_argument("--m", type=int, default=None)
    ep.add_argument("--seed", type=int, default=None)
    ep.add_argument("--trials", type=int, default=None)
    ep.add_argument("--out", default=None)
    ep.add_argument("--threads", type=int, default=None)
    sp = sub.add_parser("replay", help="re-run the command recorded in a manifest.json")
    sp.add_argument("manifest")
    sp.add_argument("--out", default=None)
    return p


def _resolve(a) -> dict:
    d = {k: v for k, v in vars(a).items() if not k.startswith("_")}
    if "seed" in d and d["seed"] is None and a.command != "experiment":
        d["seed"] = _default_seed()
    return d


def _execute(a) -> int:
    if a.command == "experiment" and a.action != "run":
        raise _UsageError("usage: rpz experiment run <config.json>")
    resolved = _resolve(a)
    for k, v in resolved.items():
        setattr(a, k, v)
    text = _COMMANDS[a.command](a)
    out_dir = a.out or "."
    os.makedirs(out_dir, exist_ok=True)
    manifest = {"version": __version__, "command": a.command,
                "args": {k: v for k, v in resolved.items() if k != "out"}}
    if getattr(a, "_resolved_config", None) is not None:
        manifest["config"] = a._resolved_config
    if text is not None:
        if a.out:
            with open(os.path.join(a.out, f"{a.command}.csv"), "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _replay(a) -> int:
    with open(a.manifest) as fh:
        man = json.load(fh)
    ns = argparse.Namespace(**man["args"])
    ns.out = a.out
    ns.command = man["command"]
    if ns.command == "experiment" and "config" in man:
        # run exactly the resolved config, not whatever the original file says now
        import tempfile
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as tf:
            json.dump(man["config"], tf)
        ns.config = tf.name
        for k in ("profile", "law", "n", "m", "seed", "trials", "threads"):
            setattr(ns, k, None)
        try:
            return _execute(ns)
        finally:
            os.unlink(tf.name)
    return _execute(ns)


_NEG_VALUE = re.compile(r"^-[\d.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--opt -1,2`` into ``--opt=-1,2`` so lists may start with a minus sign."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEG_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run_cli(argv=None) -> int:
    """Entry point returning the exit code (0 ok, 1 invalid input, 2 numerical failure)."""
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            parser.print_help()
            return EXIT_INVALID
        if a.command == "replay":
            return _replay(a)
        return _execute(a)
    except (QuadratureError, RootFindingError, ExperimentAborted, MagnitudeError,
            FloatingPointError, ArithmeticError) as exc:
        print(f"rpz: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"rpz: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
