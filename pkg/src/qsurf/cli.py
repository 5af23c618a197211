"""Command-line interface.

Subcommands:
    build-code  construct a surface code and emit its matrices
    audit       gate counts and the hook-error report for a code
    simulate    run a memory experiment, write a JSON report (+ CSV)
    decode      decode a shots file against a DEM file, write CSV
    fit         fit the exponential decay model to a report
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import gf2
from .circuits import cnot_count, hook_audit, memory_circuit
from .codes import metacheck_code_distance, surface_code
from .decoder import BpConfig, WindowConfig, WindowDecoder, postselect
from .dem import dem_from_text
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    fit_decay,
    run_memory,
)
from .noise import (
    SAMPLE_MAGIC,
    NoiseModel,
    load_samples_packed,
    load_samples_text,
)


def parse_code_spec(spec: str):
    """'4d:2' or '3d:2:1' -> (dimension, length, grade)."""
    parts = spec.lower().split(":")
    dim = int(parts[0].rstrip("d"))
    length = int(parts[1])
    grade = int(parts[2]) if len(parts) > 2 else None
    return dim, length, grade


def parse_rounds(spec: str) -> tuple[int, ...]:
    """'0..4' (inclusive range) or '0,1,3'."""
    if ".." in spec:
        lo, hi = spec.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in spec.split(","))


def parse_window(spec: str) -> WindowConfig:
    w, c = spec.split(",")
    return WindowConfig(int(w), int(c))


def _cmd_build_code(args) -> int:
    code = surface_code(args.dim, args.L, args.grade)
    out = Path(args.emit)
    out.mkdir(parents=True, exist_ok=True)
    matrices = {"h_x": code.h_x, "h_z": code.h_z,
                "m_x": code.m_x, "m_z": code.m_z,
                "logicals_x": code.logicals_x, "logicals_z": code.logicals_z}
    for name, mat in matrices.items():
        if mat is None:
            continue
        (out / f"{name}.txt").write_text(gf2.matrix_to_text(mat))
    if args.boundaries:
        from .chain import tensor_product
        from .codes import repetition_complex

        c = repetition_complex(args.L)
        d = repetition_complex(args.L, transposed=True)
        cx = tensor_product(c, d)
        if args.dim >= 3:
            cx = tensor_product(cx, d)
        if args.dim == 4:
            cx = tensor_product(cx, c)
        for i in range(1, cx.length + 1):
            (out / f"d_{i}.txt").write_text(
                gf2.matrix_to_text(cx.boundary(i)))
    summary = {
        "n": code.n, "k": code.k, "d": code.d,
        "counts": {
            "x_checks": code.num_x_checks,
            "z_checks": code.num_z_checks,
            "x_metachecks": 0 if code.m_x is None else code.m_x.shape[0],
            "z_metachecks": 0 if code.m_z is None else code.m_z.shape[0],
        },
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    print(f"[[{code.n},{code.k},{code.d}]] written to {out}")
    return 0


def _cmd_audit(args) -> int:
    code = surface_code(args.dim, args.L, args.grade)
    circ = memory_circuit(code, "z", 1)
    per_round = cnot_count(circ)
    print(f"code [[{code.n},{code.k},{code.d}]]")
    print(f"qubits with shared ancillas: {circ.num_qubits}")
    print(f"CNOTs per extraction round: {per_round}")
    if args.dim == 2:
        print(f"CNOTs per FT cycle (d rounds): {per_round * code.d}")
    for side in ("z", "x"):
        if code.metacheck(side) is not None:
            dist = metacheck_code_distance(code, side)
            print(f"{side.upper()}-side metacheck code distance: {dist}")
    report = hook_audit(code)
    print(f"hook audit: max generator/logical overlap = {report.max_overlap} "
          f"over {report.num_generators} generators x "
          f"{report.num_logicals} minimum-weight logicals")
    print(f"hook audit: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def _load_shots(path: str, detector_count: int, observable_count: int):
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == SAMPLE_MAGIC:
        return load_samples_packed(path)
    return load_samples_text(path, detector_count, observable_count)


def _cmd_decode(args) -> int:
    dem = dem_from_text(Path(args.dem).read_text())
    dets, obs = _load_shots(args.shots, dem.detector_count,
                            dem.observable_count)
    wcfg = parse_window(args.window)
    cfg = BpConfig(max_iter=args.bp_iters, osd_order=args.osd_order)
    kept = np.ones(dets.shape[0], dtype=bool)
    if args.postselect != "off":
        if args.code is None:
            print("--postselect needs --code (and --basis) to rebuild the "
                  "detector layout", file=sys.stderr)
            return 2
        dim, length, grade = parse_code_spec(args.code)
        code = surface_code(dim, length, grade)
        rounds = dem.num_rounds - 1
        circ = memory_circuit(code, args.basis, rounds)
        if len(circ.detectors) != dem.detector_count:
            print("code/basis/rounds do not match the DEM, refusing",
                  file=sys.stderr)
            return 2
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if args.postselect == "discard":
                kept = postselect(dets, code, circ, "discard")
            else:
                dets = postselect(dets, code, circ, "repair")
    decoder = WindowDecoder(dem, wcfg, cfg)
    rows = ["shot,predicted,actual,kept,converged"]
    for s in range(dets.shape[0]):
        if kept[s]:
            out = decoder.decode(dets[s])
            pred = "".join(map(str, out.observables))
            conv = int(out.converged)
        else:
            pred = "-" * dem.observable_count
            conv = 0
        actual = "".join(map(str, obs[s]))
        rows.append(f"{s},{pred},{actual},{int(kept[s])},{conv}")
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_simulate(args) -> int:
    dim, length, grade = parse_code_spec(args.code)
    noise = NoiseModel()
    if args.noise:
        noise = NoiseModel.from_json(Path(args.noise).read_text())
    config = ExperimentConfig(
        dimension=dim, length=length, grade=grade, basis=args.basis,
        rounds=parse_rounds(args.rounds), shots=args.shots, noise=noise,
        window=parse_window(args.window),
        bp=BpConfig(max_iter=args.bp_iters, osd_order=args.osd_order),
        postselect=args.postselect, seed=args.seed,
    )
    report = run_memory(config)
    for point in report.points:
        if not (point.failures <= point.kept <= point.shots):
            print("invariant violation in report", file=sys.stderr)
            return 3
    Path(args.out).write_text(report.to_json() + "\n")
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    for point in report.points:
        print(f"r={point.r}: kept {point.kept}/{point.shots}, "
              f"p_log={point.p_log:.3e} +- {point.sigma:.1e}")
    if report.fit:
        print(f"fit: p_spam={report.fit.p_spam:.3e} "
              f"p_cycle={report.fit.p_cycle:.3e}")
    return 0


def _cmd_fit(args) -> int:
    report = ExperimentReport.from_json(Path(args.infile).read_text())
    points = [(p.r, p.p_log, p.sigma) for p in report.points if p.kept > 0]
    fit = fit_decay(points)
    print(f"p_spam  = {fit.p_spam:.6e} +- {fit.sigma_p_spam:.2e}")
    print(f"p_cycle = {fit.p_cycle:.6e} +- {fit.sigma_p_cycle:.2e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsurf",
        description="surface-code construction, simulation, and decoding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-code", help="construct a code, emit matrices")
    p.add_argument("--dim", type=int, required=True, choices=(2, 3, 4))
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--grade", type=int, default=None)
    p.add_argument("--emit", required=True, help="output directory")
    p.add_argument("--boundaries", action="store_true",
                   help="also emit every boundary map of the complex")
    p.set_defaults(func=_cmd_build_code)

    p = sub.add_parser("audit", help="gate counts and hook report")
    p.add_argument("--dim", type=int, required=True, choices=(2, 3, 4))
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--grade", type=int, default=None)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("simulate", help="run a memory experiment")
    p.add_argument("--code", required=True, help="e.g. 4d:2 or 3d:2:1")
    p.add_argument("--basis", default="z", choices=("z", "x"))
    p.add_argument("--rounds", required=True, help="e.g. 0..4 or 1,2,4")
    p.add_argument("--shots", type=int, default=20_000)
    p.add_argument("--noise", default=None, help="noise config JSON file")
    p.add_argument("--window", default="1,1", help="w,c")
    p.add_argument("--bp-iters", type=int, default=1000)
    p.add_argument("--osd-order", type=int, default=10)
    p.add_argument("--postselect", default="off",
                   choices=("off", "discard", "repair"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", default=None, help="optional CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decode", help="decode a shots file against a DEM")
    p.add_argument("--dem", required=True)
    p.add_argument("--shots", required=True)
    p.add_argument("--window", default="1,1", help="w,c")
    p.add_argument("--bp-iters", type=int, default=1000)
    p.add_argument("--osd-order", type=int, default=10)
    p.add_argument("--postselect", default="off",
                   choices=("off", "discard", "repair"))
    p.add_argument("--code", default=None, help="needed for postselect")
    p.add_argument("--basis", default="z", choices=("z", "x"))
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("fit", help="fit the decay model to a report")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_fit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
