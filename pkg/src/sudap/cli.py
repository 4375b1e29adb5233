"""Command-line interface.

Four subcommands:

* simulate: build a synthetic cube plus ground truth from a library.
* unmix: run one solver on a cube and write the abundance file.
* benchmark: sweep m, pixel count, or SNR; measure time to an RE
  threshold against an exact reference.
* validate: seeded self-checks (projector equivalence, oracle
  equivalence, sum-constraint confinement) with a pass/fail table.

Every command is deterministic given its seed: rerunning writes
byte-identical data files. The exceptions are measured timings
(benchmark summaries, curve time columns), which are genuine
measurements and vary run to run.

Exit codes: 0 success; 1 validation failure; 2 usage error; otherwise
one distinct code per error class, see EXIT_CODES.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import errors
from . import io as sio
from .dykstra import DykstraConfig
from .metrics import (
    ConvergenceCurve,
    build_curve,
    nmse_db,
    objective,
    relative_error_db,
)
from .model import AbundanceMatrix, EndmemberMatrix, column_feasibility
from .projectors import (
    project_intersection_geometric,
    project_intersection_kkt,
)
from .simdata import (
    NoiseSpec,
    SpectralLibrary,
    make_synthetic_library,
    measured_snr_db,
    sample_abundances,
    select_endmember_indices,
    synthesize_cube,
)
from .solver import (
    MAX_ORACLE_ENDMEMBERS,
    clip_negatives,
    solve_ls,
    solve_ls_sum1,
    solve_oracle_activeset,
    solve_sudap,
)
from .subspace import build_transform, inverse_transform

EXIT_CODES = {
    errors.DimensionMismatch: 10,
    errors.ShapeMismatch: 11,
    errors.RankDeficient: 12,
    errors.DegenerateProblem: 13,
    errors.IndexOutOfRange: 14,
    errors.NonFinite: 15,
    errors.TooManyEndmembers: 16,
    errors.NoKKTPoint: 17,
    errors.InsufficientCandidates: 18,
    errors.ZeroReference: 19,
    errors.ParseError: 20,
    errors.EmptyFile: 21,
    errors.BadMagic: 22,
    errors.TruncatedFile: 23,
    errors.VersionUnsupported: 24,
}
OS_ERROR_CODE = 30

# Hook point for the self-check machinery; tests may swap it for a
# deliberately broken builder to confirm validate actually detects
# faults.
_make_transform = build_transform


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SUDAP_THREADS", "1")))
    except ValueError:
        return 1


def _child_seeds(seed: int, count: int) -> list:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=count)]


def _grid(n: int) -> tuple:
    side = math.isqrt(n)
    return (side, side) if side * side == n else (1, n)


# ------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    lib = sio.read_library_csv(args.library)
    seed_sel, seed_ab, seed_noise = _child_seeds(args.seed, 3)
    idx = select_endmember_indices(lib, args.m, args.min_angle, seed_sel)
    names = tuple(lib.names[i] for i in idx)
    e = EndmemberMatrix(
        lib.signatures[:, idx].copy(), wavelengths=lib.wavelengths
    )
    n = args.rows * args.cols
    a = sample_abundances(args.m, n, seed_ab)
    a = AbundanceMatrix(a.data, (args.rows, args.cols), feasible=True)
    cube = synthesize_cube(
        e, a, NoiseSpec(args.snr_db, seed_noise), (args.rows, args.cols)
    )
    sio.write_cube(f"{args.out_prefix}.cube", cube)
    sio.write_abundance(f"{args.out_prefix}.truth", a)
    sio.write_library_csv(
        f"{args.out_prefix}.endmembers.csv",
        SpectralLibrary(e.data, names, wavelengths=lib.wavelengths),
    )
    print(f"selected endmembers: {', '.join(names)}")
    snr = measured_snr_db(cube, e, a)
    print(f"measured SNR: {snr:.2f} dB" if np.isfinite(snr)
          else "measured SNR: inf (noiseless)")
    print(f"wrote {args.out_prefix}.cube, .truth, .endmembers.csv")
    return 0


# ---------------------------------------------------------------- unmix


def _load_reference(path, m: int, n: int, what: str) -> AbundanceMatrix:
    ref = sio.read_abundance(path)
    if ref.data.shape != (m, n):
        raise errors.ShapeMismatch(
            f"{what} {path} has shape {ref.data.shape}, "
            f"expected ({m}, {n})"
        )
    return ref


def cmd_unmix(args) -> int:
    cube = sio.read_cube(args.cube)
    elib = sio.read_library_csv(args.endmembers)
    e = EndmemberMatrix(elib.signatures, wavelengths=elib.wavelengths)
    m, n = e.n_endmembers, cube.n_pixels
    a_ref = (
        _load_reference(args.reference, m, n, "reference")
        if args.reference
        else None
    )
    a_true = (
        _load_reference(args.truth, m, n, "truth") if args.truth else None
    )

    if args.solver == "sudap":
        cfg = DykstraConfig(
            max_sweeps=args.max_sweeps,
            rel_tol=args.rel_tol,
            track_per_pixel=bool(args.curve),
            snapshot_every=args.snapshot_every if args.curve else 0,
            threads=args.threads,
        )
        result = solve_sudap(e, cube, cfg)
    elif args.solver == "ls":
        result = solve_ls(e, cube)
    elif args.solver == "ls-sum1":
        result = solve_ls_sum1(e, cube)
    else:
        result = solve_oracle_activeset(e, cube)

    a_out = clip_negatives(result.a_hat) if args.clip else result.a_hat
    sio.write_abundance(args.out, a_out)

    if args.curve:
        if result.trace.snapshots:
            t = build_transform(e)
            curve = build_curve(
                result.trace, t, e, cube, a_star=a_ref, a_true=a_true
            )
        else:
            empty = np.zeros(0)
            curve = ConvergenceCurve(
                sweep=np.zeros(0, dtype=np.int64),
                time_s=empty, objective=empty, re_db=empty, nmse_db=empty,
            )
        sio.write_curve_csv(curve, args.curve)

    report = column_feasibility(a_out)
    print(f"solver: {result.solver_id}")
    print(f"objective |X - EA|_F^2: {objective(e, cube, a_out):.10e}")
    print(f"wall time: {result.wall_time:.3f} s")
    print(
        f"feasibility: max column-sum deviation {report.max_sum_violation:.3e}, "
        f"min abundance {report.min_entry:.3e}, "
        f"{'feasible' if report.feasible else 'NOT feasible'}"
    )
    if a_ref is not None:
        print(f"final RE vs reference: {relative_error_db(a_out, a_ref):.2f} dB")
    if a_true is not None:
        print(f"final NMSE vs truth: {nmse_db(a_out, a_true):.2f} dB")
    sweeps = result.trace.n_sweeps
    if sweeps:
        print(f"sweeps: {sweeps} (converged: {result.trace.converged})")
    return 0


# ------------------------------------------------------------ benchmark


def _benchmark_instance(lib, m, n, snr_db, min_angle, stop_re_db,
                        max_sweeps, threads, seed):
    seed_sel, seed_ab, seed_noise = _child_seeds(seed, 3)
    shape = _grid(n)
    idx = select_endmember_indices(lib, m, min_angle, seed_sel)
    e = EndmemberMatrix(
        lib.signatures[:, idx].copy(), wavelengths=lib.wavelengths
    )
    a_true = sample_abundances(m, n, seed_ab)
    a_true = AbundanceMatrix(a_true.data, shape, feasible=True)
    cube = synthesize_cube(e, a_true, NoiseSpec(snr_db, seed_noise), shape)

    if m <= MAX_ORACLE_ENDMEMBERS:
        ref = solve_oracle_activeset(e, cube)
    else:
        ref = solve_sudap(
            e, cube, DykstraConfig(max_sweeps=4 * max_sweeps,
                                   rel_tol=1e-13, threads=threads)
        )
    a_star = ref.a_hat.data

    t = build_transform(e)
    re_per_sweep: list = []

    def watch(_sweep, u):
        a_k = inverse_transform(t, u)
        err = float(np.linalg.norm(a_k - a_star) ** 2)
        ref_power = float(np.linalg.norm(a_star) ** 2)
        re_per_sweep.append(
            -np.inf if err == 0.0 else 10.0 * np.log10(err / ref_power)
        )

    cfg = DykstraConfig(
        max_sweeps=max_sweeps, rel_tol=1e-12, threads=threads
    )
    result = solve_sudap(e, cube, cfg, on_sweep=watch)

    res = np.asarray(re_per_sweep)
    below = np.flatnonzero(res <= stop_re_db)
    hit = below.size > 0
    return {
        "oracle_time_s": ref.wall_time,
        "sweeps_to_threshold": int(below[0]) + 1 if hit else -1,
        "time_to_threshold_s": float(result.trace.elapsed_s[below[0]])
        if hit
        else np.nan,
        "final_re_db": float(res[-1]),
        "status": "ok" if hit else "threshold-not-reached",
    }


def cmd_benchmark(args) -> int:
    lib = sio.read_library_csv(args.library)
    if args.sweep_var == "snr":
        values = [float(v) for v in args.values.split(",")]
    else:
        values = [int(v) for v in args.values.split(",")]
    if not values:
        raise errors.EmptyFile("no sweep values given")
    os.makedirs(args.out_dir, exist_ok=True)
    out_path = os.path.join(args.out_dir, f"benchmark_{args.sweep_var}.csv")

    rng = np.random.default_rng(args.seed)
    header = [
        "kind", "variable", "value", "repeat", "seed", "oracle_time_s",
        "sweeps_to_threshold", "time_to_threshold_s", "final_re_db",
        "status",
    ]
    rows = []
    per_value: dict = {v: [] for v in values}
    for value in values:
        m, n, snr = 5, 1024, 30.0
        if args.sweep_var == "m":
            m = value
        elif args.sweep_var == "pixels":
            n = value
        else:
            snr = value
        for repeat in range(args.repeats):
            seed = int(rng.integers(0, 2**63 - 1))
            try:
                rec = _benchmark_instance(
                    lib, m, n, snr, args.min_angle, args.stop_re_db,
                    args.max_sweeps, args.threads, seed,
                )
            except errors.SudapError as exc:
                rows.append([
                    "run", args.sweep_var, value, repeat, seed,
                    "", "", "", "", f"failed:{type(exc).__name__}",
                ])
                print(f"value={value} repeat={repeat}: FAILED {exc}",
                      file=sys.stderr)
                continue
            rows.append([
                "run", args.sweep_var, value, repeat, seed,
                f"{rec['oracle_time_s']:.6f}",
                rec["sweeps_to_threshold"],
                "" if np.isnan(rec["time_to_threshold_s"])
                else f"{rec['time_to_threshold_s']:.6f}",
                f"{rec['final_re_db']:.4f}",
                rec["status"],
            ])
            if rec["status"] == "ok":
                per_value[value].append(rec)
            print(
                f"value={value} repeat={repeat}: "
                f"{rec['sweeps_to_threshold']} sweeps, "
                f"{rec['time_to_threshold_s']:.4f} s to "
                f"{args.stop_re_db:.0f} dB, final RE "
                f"{rec['final_re_db']:.1f} dB"
            )

    for value in values:
        recs = per_value[value]
        if not recs:
            continue
        times = np.array([r["time_to_threshold_s"] for r in recs])
        sweeps = np.array([r["sweeps_to_threshold"] for r in recs],
                          dtype=float)
        for kind, reduce in (("mean", np.mean), ("std", np.std)):
            rows.append([
                kind, args.sweep_var, value, "", "", "",
                f"{reduce(sweeps):.2f}", f"{reduce(times):.6f}", "", "",
            ])

    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {out_path}")
    return 0


# ------------------------------------------------------------- validate


def _check_projector_equivalence(rng, n_triples: int) -> float:
    worst = 0.0
    for _ in range(n_triples):
        m = int(rng.integers(2, 9))
        n_bands = m + int(rng.integers(0, 21))
        e = EndmemberMatrix(rng.standard_normal((n_bands, m)))
        t = _make_transform(e)
        n = int(rng.integers(1, 33))
        scale = 10.0 ** rng.uniform(-2, 2)
        z = scale * rng.standard_normal((m, n))
        i = int(rng.integers(0, m))
        geo = project_intersection_geometric(t, i, z)
        kkt = project_intersection_kkt(t, i, z)
        worst = max(worst, float(np.max(np.abs(geo - kkt))))
    return worst


def _check_oracle_equivalence(rng, n_instances: int):
    worst_re = -np.inf
    worst_sum = 0.0
    for k in range(n_instances):
        lib = make_synthetic_library(
            n_bands=64, n_signatures=24, seed=int(rng.integers(2**63 - 1))
        )
        m = int(rng.integers(3, 9))
        idx = select_endmember_indices(
            lib, m, 10.0, int(rng.integers(2**63 - 1))
        )
        e = EndmemberMatrix(lib.signatures[:, idx].copy())
        n = int(rng.integers(16, 65))
        a = sample_abundances(m, n, int(rng.integers(2**63 - 1)))
        cube = synthesize_cube(
            e, a, NoiseSpec(30.0, int(rng.integers(2**63 - 1))), (1, n)
        )
        oracle = solve_oracle_activeset(e, cube)
        sudap = solve_sudap(
            e, cube, DykstraConfig(max_sweeps=5000, rel_tol=1e-12)
        )
        re = relative_error_db(sudap.a_hat, oracle.a_hat)
        worst_re = max(worst_re, re)
        worst_sum = max(
            worst_sum,
            column_feasibility(sudap.a_hat).max_sum_violation,
        )
    return worst_re, worst_sum


def cmd_validate(args) -> int:
    rng = np.random.default_rng(args.seed)
    checks = []
    worst_proj = _check_projector_equivalence(rng, 10 * args.instances)
    checks.append(
        ("projector-equivalence", worst_proj, 1e-12, worst_proj <= 1e-12)
    )
    worst_re, worst_sum = _check_oracle_equivalence(rng, args.instances)
    checks.append(
        ("oracle-equivalence", worst_re, -120.0, worst_re <= -120.0)
    )
    checks.append(
        ("column-sum-confinement", worst_sum, 1e-9, worst_sum <= 1e-9)
    )
    all_ok = True
    print(f"{'property':<26} {'worst':>14} {'threshold':>12}  verdict")
    for name, worst, threshold, ok in checks:
        all_ok &= ok
        print(
            f"{name:<26} {worst:>14.4e} {threshold:>12.1e}  "
            f"{'pass' if ok else 'FAIL'}"
        )
    return 0 if all_ok else 1


# ----------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sudap",
        description="Fully constrained spectral unmixing by subspace "
        "projection.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="generate a synthetic cube from a library"
    )
    sim.add_argument("--library", required=True,
                     help="spectral library CSV")
    sim.add_argument("--m", type=int, required=True,
                     help="number of endmembers to select")
    sim.add_argument("--min-angle", type=float, required=True,
                     help="pairwise angle floor in degrees")
    sim.add_argument("--rows", type=int, required=True)
    sim.add_argument("--cols", type=int, required=True)
    sim.add_argument("--snr-db", type=float, required=True,
                     help="target SNR in dB; inf for noiseless")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out-prefix", required=True)
    sim.set_defaults(func=cmd_simulate)

    un = sub.add_parser("unmix", help="estimate abundances for a cube")
    un.add_argument("--cube", required=True)
    un.add_argument("--endmembers", required=True,
                    help="endmember library CSV (all columns used)")
    un.add_argument("--solver", required=True,
                    choices=["sudap", "ls", "ls-sum1", "oracle"])
    un.add_argument("--out", required=True, help="abundance output file")
    un.add_argument("--rel-tol", type=float, default=1e-10)
    un.add_argument("--max-sweeps", type=int, default=2000)
    un.add_argument("--reference",
                    help="abundance file of the exact optimizer, for RE")
    un.add_argument("--truth",
                    help="ground-truth abundance file, for NMSE")
    un.add_argument("--curve", help="write per-sweep metrics CSV here")
    un.add_argument("--snapshot-every", type=int, default=1,
                    help="sweeps between curve rows")
    un.add_argument("--clip", action="store_true",
                    help="zero tiny negative abundances and renormalize")
    un.add_argument("--threads", type=int, default=_default_threads())
    un.set_defaults(func=cmd_unmix)

    be = sub.add_parser(
        "benchmark", help="sweep a variable and time convergence"
    )
    be.add_argument("--library", required=True)
    be.add_argument("--sweep-var", required=True,
                    choices=["m", "pixels", "snr"])
    be.add_argument("--values", required=True,
                    help="comma-separated sweep values")
    be.add_argument("--repeats", type=int, default=3)
    be.add_argument("--stop-re-db", type=float, default=-100.0)
    be.add_argument("--seed", type=int, required=True)
    be.add_argument("--out-dir", required=True)
    be.add_argument("--min-angle", type=float, default=10.0)
    be.add_argument("--max-sweeps", type=int, default=2000)
    be.add_argument("--threads", type=int, default=_default_threads())
    be.set_defaults(func=cmd_benchmark)

    va = sub.add_parser("validate", help="run seeded self-checks")
    va.add_argument("--seed", type=int, default=0)
    va.add_argument("--instances", type=int, default=50)
    va.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate" and args.instances < 1:
        parser.error("--instances must be at least 1")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except errors.SudapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in EXIT_CODES.items():
            if isinstance(exc, klass):
                return code
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return OS_ERROR_CODE


if __name__ == "__main__":
    sys.exit(main())
