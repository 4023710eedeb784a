"""Command-line front end: orbit expansion, Lyapunov tables, LLL
approximation, Markov-partition verification, ergodic statistics.

Identical configurations (including the seed) produce byte-identical CSV
output.  Exit codes: 0 success, 1 verification failure, 2 domain error,
3 budget error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from gmpy2 import mpq

from . import ergodic_stats as stats
from .cf_algorithms import AlgorithmId, expand, parse_algorithm
from .convergents import ConvergentProduct, accumulate, convergence_metrics, \
    extract_approximations
from .core_numerics import rat
from .errors import BudgetError, DomainError, OrbitHalt, VerificationError
from .lattice_lll import LllParams, iterated_approx
from .lyapunov import estimate_lyapunov
from .nijp_markov import render_partition, verify_partition

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_DOMAIN = 2
EXIT_BUDGET = 3


def _fmt(x) -> str:
    if isinstance(x, mpq):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, str)):
        return str(x)
    if x is None:
        return ""
    return f"{float(x):.17g}"


def _write_csv(path, header, rows):
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _budget() -> int | None:
    raw = os.environ.get("MDCF_BUDGET")
    return int(raw) if raw else None


def _check_budget(steps: int):
    cap = _budget()
    if cap is not None and steps > cap:
        raise BudgetError(f"requested {steps} steps > MDCF_BUDGET={cap}")


def _parse_x(text: str) -> tuple:
    return tuple(rat(part) for part in text.split(","))


def _algorithm(args) -> AlgorithmId:
    if not args.alg:
        raise DomainError("--alg is required")
    return parse_algorithm(args.alg, args.dim)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_expand(args) -> int:
    alg = _algorithm(args)
    if args.x is None:
        raise DomainError("--x is required for expand")
    x = _parse_x(args.x)
    if len(x) != alg.d:
        raise DomainError(f"--x has {len(x)} entries, algorithm wants {alg.d}")
    n = args.n or 10
    _check_budget(n)
    record = expand(alg, x, n, precision=args.precision or 256)
    d = alg.d
    header = (["n", "digits", "q"] + [f"p{i+1}" for i in range(d)]
              + ["error", "dirichlet_ratio", "weak_metric", "strong_metric",
                 "halted"])
    rows = []
    product = ConvergentProduct.identity(d, alg)
    prev_strong = None
    for i, step in enumerate(record.steps):
        product = accumulate(product, step)
        recs = extract_approximations(product, x, norm=args.norm or "sup")
        metrics = convergence_metrics(product, x, prev_strong)
        prev_strong = metrics.strong
        newest = recs[-1] if recs else None
        halted = record.halted_at is not None and i == len(record.steps) - 1
        if newest is None:
            rows.append([i + 1, ";".join(map(str, step.digits)), 0]
                        + [""] * d + ["", "", metrics.weak, metrics.strong,
                                      halted])
        else:
            rows.append([i + 1, ";".join(map(str, step.digits)), newest.q]
                        + list(newest.p)
                        + [newest.error, newest.dirichlet_ratio,
                           metrics.weak, metrics.strong, halted])
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    alg = _algorithm(args)
    if args.seed is None:
        raise DomainError("--seed is mandatory for stochastic commands")
    n = args.n or 1_000_000
    trials = args.trials or 100
    if n < 10_000:
        raise DomainError("reported Lyapunov estimates need n >= 10^4")
    _check_budget((n + 1000) * trials)
    est = estimate_lyapunov(alg, n, trials, args.seed,
                            mode=args.mode or "double",
                            precision=args.precision or 256,
                            threads=args.threads, budget=_budget())
    header = ["alg", "d", "n", "trials", "seed", "lambda1", "stderr1",
              "lambda2", "stderr2", "eta_star"]
    rows = [[alg.family.value, alg.d, n, trials, args.seed, est.lambda1,
             est.stderr1, est.lambda2, est.stderr2, est.eta_star]]
    _write_csv(args.out, header, rows)
    if args.lognorm_out and est.log_norm_hist is not None:
        # empirical distribution of log of the step-matrix norm bound, so
        # heavy digit tails are visible
        _write_csv(args.lognorm_out, ["log_norm_bin", "count"],
                   [[i, int(c)] for i, c in enumerate(est.log_norm_hist)])
    return EXIT_OK


def cmd_lll(args) -> int:
    if args.x is None:
        raise DomainError("--x is required for lll")
    alpha = _parse_x(args.x)
    t0 = rat(args.t0 or "1e-3")
    ratio = rat(args.ratio or "0.1")
    steps = args.steps or 10
    params = LllParams(delta=rat(args.delta or "3/4"))
    approxs = iterated_approx(alpha, t0, ratio, steps, params,
                              norm=args.norm or "sup")
    d = len(alpha)
    header = (["t", "q"] + [f"p{i+1}" for i in range(d)]
              + ["error", "certified_bound", "dirichlet_ratio"])
    rows = []
    for ap in approxs:
        rows.append([ap.t, ap.record.q] + list(ap.record.p)
                    + [ap.record.error, ap.comp_bound,
                       ap.record.dirichlet_ratio])
    _write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_markov_verify(args) -> int:
    amax = args.amax or 40
    if amax < 6:
        sys.stderr.write(
            f"warning: amax={amax} < 6 gives only partial coverage of the "
            "image families\n")
    report = verify_partition(amax)
    header = ["type_id", "a", "b", "piece", "residual_numerator",
              "residual_denominator", "pass"]
    rows = []
    for inst in report.instances():
        rows.append([inst.type_id, inst.a, inst.b, f"{inst.letter}1",
                     int(inst.residual.numerator),
                     int(inst.residual.denominator), inst.passed])
    _write_csv(args.out, header, rows)
    if not report.passed:
        for inst in report.instances():
            if not inst.passed:
                sys.stderr.write(
                    f"FAIL type {inst.type_id} cell ({inst.a},{inst.b},"
                    f"{inst.letter}1): residual {inst.residual}\n")
        if not report.cells_covered:
            sys.stderr.write("FAIL: enumerated cells do not match the image "
                             "families\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_render_partition(args) -> int:
    if not args.out:
        raise DomainError("-o/--out is required for render-partition")
    count = render_partition(args.what or "markov", args.out,
                             a_max=args.amax or 8)
    sys.stderr.write(f"wrote {count} polygons to {args.out}\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.seed is None:
        raise DomainError("--seed is mandatory for stochastic commands")
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    orbits = args.trials or 100
    n = args.n or 100_000
    theta_n = args.theta_steps or 10_000
    _check_budget(orbits * (n + theta_n))
    ens = stats.gauss_digit_ensemble(orbits, n, args.seed)
    rows = []
    for j in range(1, 21):
        freq, se = stats.digit_frequency(ens, j)
        rows.append([j, freq, se, stats.gauss_digit_density(j)])
    _write_csv(os.path.join(outdir, "digit_freq.csv"),
               ["digit", "frequency", "stderr", "theory"], rows)
    lv, lv_se = stats.levy_exponent(ens)
    _write_csv(os.path.join(outdir, "levy.csv"),
               ["estimate", "stderr", "theory"],
               [[lv, lv_se, stats.LEVY_EXPONENT]])
    tens = stats.theta_ensemble(orbits, theta_n, args.seed + 1)
    zs = [i / 20 for i in range(21)]
    rows = []
    for z in zs:
        val, se = stats.doeblin_lenstra(tens, z)
        rows.append([z, val, se, stats.doeblin_lenstra_cdf(z)])
    _write_csv(os.path.join(outdir, "doeblin_lenstra.csv"),
               ["z", "empirical", "stderr", "theory"], rows)
    viol = sum(stats.borel_tong_check(s) for s in tens.orbits)
    _write_csv(os.path.join(outdir, "borel_tong.csv"),
               ["orbits", "steps", "violations"], [[orbits, theta_n, viol]])
    ln = args.lochs_digits or 1000
    lsamp = args.lochs_samples or 100
    mean, se, _ = stats.lochs_ensemble(lsamp, ln, args.seed + 2)
    _write_csv(os.path.join(outdir, "lochs.csv"),
               ["n", "samples", "mean", "stderr", "theory"],
               [[ln, lsamp, mean, se, stats.LOCHS_LIMIT]])
    sample = tens.orbits[0]
    _write_csv(os.path.join(outdir, "theta_sample.csv"),
               ["j", "digit", "theta"],
               [[j, int(sample.digits[j - 1]) if j else "",
                 sample.entries[j]] for j in range(len(sample.entries))])
    rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed + 4))
    target = float(rng.uniform(0.01, 0.99))
    ba = stats.best_approximations(target, 10_000, norm=args.norm or "sup")
    _write_csv(os.path.join(outdir, "best_approx.csv"),
               ["alpha", "q", "p", "dist"],
               [[target, q, p[0], d]
                for q, p, d in zip(ba.qs, ba.ps, ba.dists)])
    alg = parse_algorithm(args.alg or "gauss", args.dim)
    dh = stats.empirical_density(alg, args.bins or 100,
                                 min(n, 100_000), min(orbits, 50),
                                 args.seed + 3)
    if dh.density.ndim == 1:
        rows = [[i, dh.density[i], dh.stderr[i]]
                for i in range(len(dh.density))]
        _write_csv(os.path.join(outdir, "density.csv"),
                   ["bin", "density", "stderr"], rows)
    else:
        rows = [[i, j, dh.density[i, j], dh.stderr[i, j]]
                for i in range(dh.density.shape[0])
                for j in range(dh.density.shape[1])]
        _write_csv(os.path.join(outdir, "density.csv"),
                   ["bin1", "bin2", "density", "stderr"], rows)
    if viol != 0:
        sys.stderr.write(f"FAIL: {viol} Borel/Tong violations\n")
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--alg", help="algorithm family "
                   "(gauss|nig|farey|jp|nijp|brun|selmer|poincare|fullsub)")
    p.add_argument("-d", "--dim", type=int, help="state dimension")
    p.add_argument("--x", help="start / target vector, comma-separated rationals")
    p.add_argument("-n", type=int, help="steps per orbit")
    p.add_argument("--trials", type=int, help="number of orbits")
    p.add_argument("--seed", type=int, help="RNG seed (mandatory when stochastic)")
    p.add_argument("--precision", type=int, help="binary precision (default 256)")
    p.add_argument("--t0", help="initial t of the LLL schedule")
    p.add_argument("--ratio", help="geometric ratio of the t schedule")
    p.add_argument("--steps", type=int, help="LLL schedule length")
    p.add_argument("--delta", help="LLL delta (default 3/4)")
    p.add_argument("--amax", type=int, help="largest |a| digit to verify/draw")
    p.add_argument("--norm", choices=["sup", "euclid"], help="norm for |||.|||")
    p.add_argument("--threads", type=int, help="worker threads (default: cores)")
    p.add_argument("--mode", choices=["double", "highprec"])
    p.add_argument("--what", choices=["cylinders", "markov", "types"])
    p.add_argument("--theta-steps", dest="theta_steps", type=int)
    p.add_argument("--lochs-digits", dest="lochs_digits", type=int)
    p.add_argument("--lochs-samples", dest="lochs_samples", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("-o", "--out", help="output file (CSV/SVG) or directory")
    p.add_argument("--lognorm-out", dest="lognorm_out",
                   help="also write the log-matrix-norm histogram CSV")
    p.add_argument("--config", help="JSON config file; flags override it")


COMMANDS = {
    "expand": cmd_expand,
    "lyapunov": cmd_lyapunov,
    "lll": cmd_lll,
    "markov-verify": cmd_markov_verify,
    "render-partition": cmd_render_partition,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdcf",
        description="multidimensional continued fraction laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common(sub.add_parser(name))
    return parser


def _apply_config(args):
    if not args.config:
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise DomainError(f"unknown config key {key!r}")
        if getattr(args, dest) is None:
            setattr(args, dest, val)
    return args


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args = _apply_config(args)
        return COMMANDS[args.command](args)
    except BudgetError as exc:
        sys.stderr.write(f"budget error: {exc}\n")
        return EXIT_BUDGET
    except (DomainError, OrbitHalt, ValueError) as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN
    except VerificationError as exc:
        sys.stderr.write(f"verification failure: {exc}\n")
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
