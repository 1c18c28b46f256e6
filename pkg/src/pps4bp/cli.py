"""Command-line interface: ``pps4bp <command> [flags]``.

Commands
--------
solve-equal-mass   shooting result and the equal-mass baseline orbit
sweep              continuation in the mass ratio (CSV + one orbit JSON per mass)
stability          multipliers and verdicts for a set of orbit files
export-trajectory  physical positions along an orbit for plotting

Every output file starts with a manifest (command, configuration, version,
paths).  Wall-clock time is reported on stderr only, so repeated runs with the
same flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import continuation as ct
from . import equalmass as em
from . import orbitrep as orp
from . import stability as st
from .coords import reg_to_phys, reg_to_positions
from .errors import BracketFailure, PPS4BPError, SeedFailure
from .integrate import MONODROMY_STEP, TWO_PI, rk4_path
from .symmetry import scale_state

SCHEMA_VERSION = 1
EXIT_BRACKET = 2
EXIT_SEED = 3
EXIT_INTEGRATION = 4
EXIT_MISSING_ORBIT = 5

log = logging.getLogger("pps4bp")


# -- manifest ----------------------------------------------------------------------


def manifest(command: str, config: dict, inputs=(), outputs=()) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "pps4bp",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }


def manifest_lines(man: dict) -> list[str]:
    return [f"manifest: {json.dumps(man, sort_keys=True)}"]


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")


def orbit_payload(orb: orp.TrigOrbit, man: dict) -> dict:
    data = orb.to_dict()
    data["manifest"] = man
    return data


def orbit_filename(m: float) -> str:
    return f"orbit_m{m:.3f}.json"


def resolve_jobs(flag: int | None) -> int:
    env = os.environ.get("SBC_ORBITS_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer SBC_ORBITS_JOBS=%r", env)
    if flag is not None:
        return max(1, flag)
    return os.cpu_count() or 1


# -- commands ---------------------------------------------------------------------


def cmd_solve_equal_mass(args) -> int:
    out = Path(args.out)
    try:
        res = em.solve_equal_mass()
    except BracketFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    orb = em.baseline_orbit(res, n=args.terms)
    _, e_scaled, eps = em.baseline_trajectory(res)
    shoot_path = out / "equal_mass.json"
    orbit_path = out / orbit_filename(1.0)
    man = manifest("solve-equal-mass", {"terms": args.terms}, outputs=[shoot_path, orbit_path])
    write_json(
        shoot_path,
        {
            "theta": res.theta,
            "sigma0": res.sigma0,
            "energy_E": res.energy_E,
            "e_hat": res.e_hat,
            "period_T": res.period,
            "s0": res.full_s0,
            "mu": em.MU,
            "scale_to_2pi": eps,
            "e_hat_2pi": e_scaled,
            "endpoint": res.endpoint.tolist(),
            "manifest": man,
        },
    )
    write_json(orbit_path, orbit_payload(orb, man))
    if args.report:
        print(f"theta   = {res.theta:.14f}")
        print(f"sigma0  = {res.sigma0:.14f}")
        print(f"E       = {res.energy_E:.10f}")
        print(f"E_hat   = {res.e_hat:.10f}")
        print(f"T       = {res.period:.10f}")
        print(f"E_hat(T=2pi) = {e_scaled:.10f}")
        print(f"L(baseline, n={orb.n}) = {orp.residual_L(orb):.3e}")
    return 0


def cmd_sweep(args) -> int:
    out = Path(args.out)
    cfg = ct.ContinuationConfig(
        n_end=args.n_max, dm=args.dm, L_target=args.l_target if args.l_target > 0 else None
    )
    seed = orp.TrigOrbit.load(args.seed) if args.seed else None
    csv_path = out / "sweep.csv"
    config = {
        "m_from": args.m_from,
        "m_to": args.m_to,
        "seed": args.seed,
        "continuation": dataclasses.asdict(cfg),
    }
    man = manifest("sweep", config, inputs=[args.seed] if args.seed else [], outputs=[csv_path])

    def progress(rec: ct.SweepRecord) -> None:
        flag = "" if rec.converged else f"  FLAGGED: {rec.message}"
        log.info("m=%.4f n=%d e_hat=%.10f L=%.2e%s", rec.m, rec.orbit.n, rec.e_hat, rec.final_L, flag)
        if rec.converged:
            write_json(out / "orbits" / orbit_filename(rec.m), orbit_payload(rec.orbit, man))

    try:
        records = ct.sweep(args.m_from, args.m_to, cfg, seed=seed, progress=progress)
    except SeedFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEED
    out.mkdir(parents=True, exist_ok=True)
    ct.write_sweep_csv(records, csv_path, manifest_lines(man))
    return 0


def _orbit_files(pattern: str) -> list[Path]:
    p = Path(pattern)
    if p.is_dir():
        return sorted(p.glob("*.json"))
    return sorted(Path().glob(pattern)) if any(ch in pattern for ch in "*?[") else [p]


def _analyze_path(path: str):
    try:
        orb = orp.TrigOrbit.load(path)
        return orb.m, st.analyze_orbit(orb), None
    except (PPS4BPError, ValueError, KeyError, OSError) as exc:
        return None, None, f"{path}: {exc}"


def cmd_stability(args) -> int:
    files = [str(p) for p in _orbit_files(args.orbits)]
    out = Path(args.out)
    jobs = resolve_jobs(args.jobs)
    man = manifest("stability", {"tol_unit": 1e-4, "n_trivial": st.N_TRIVIAL}, inputs=files, outputs=[out])
    if jobs > 1 and len(files) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_analyze_path, files))
    else:
        results = [_analyze_path(f) for f in files]
    failed = False
    reports = []
    rows_failed = []
    for path, (m, rep, err) in zip(files, results):
        if err is not None:
            failed = True
            rows_failed.append(path)
            log.error("%s", err)
            continue
        reports.append(rep)
    reports.sort(key=lambda r: -r.m)
    out.parent.mkdir(parents=True, exist_ok=True)
    st.write_stability_csv(reports, out, manifest_lines(man))
    if rows_failed:
        with open(out, "a") as fh:
            for path in rows_failed:
                fh.write(f"# integration failure: {path}\n")
    for rep in reports:
        log.info("m=%.4f max|lambda|=%.8f %s", rep.m, rep.max_modulus, rep.verdict)
    return EXIT_INTEGRATION if failed else 0


def physical_trajectory(orb: orp.TrigOrbit, periods: float, normalize: bool, stride: int = 50):
    """Integrate from the reversing-symmetric point ``s = -pi/4`` (between collisions).

    With ``normalize`` the orbit is rescaled so that ``x1 = 1`` there.  Returns
    ``(s, t, positions, eps, start_phys)``.
    """
    start = orp.eval(orb, -0.25 * np.pi)
    eps = 1.0
    if normalize:
        x1 = reg_to_positions(start)[0]
        if x1 <= 0:
            raise ValueError("cannot normalize: x1 is not positive at the start point")
        eps = 1.0 / np.sqrt(x1)
    start = scale_state(start, eps)
    period = TWO_PI / eps
    e_hat = orb.e_hat / eps**2
    steps_per_period = round(TWO_PI / MONODROMY_STEP)
    nsteps = int(round(periods * steps_per_period))
    h = period / steps_per_period
    states, t, status = rk4_path(np.ascontiguousarray(start), orb.m, e_hat, h, nsteps, stride)
    if status != 0:
        raise PPS4BPError("trajectory integration hit an unregularized collision")
    s = h * stride * np.arange(len(t))
    pos = np.array([reg_to_positions(r) for r in states])
    return s, t, pos, eps, reg_to_phys(start), period


def cmd_export_trajectory(args) -> int:
    orbit_dir = Path(args.orbits)
    path = orbit_dir / orbit_filename(args.m) if orbit_dir.is_dir() else orbit_dir
    if not path.exists():
        print(f"error: no orbit file for m={args.m} at {path}", file=sys.stderr)
        return EXIT_MISSING_ORBIT
    orb = orp.TrigOrbit.load(path)
    if abs(orb.m - args.m) > 1e-9:
        print(f"error: {path} holds m={orb.m}, not m={args.m}", file=sys.stderr)
        return EXIT_MISSING_ORBIT
    try:
        s, t, pos, eps, phys0, period = physical_trajectory(orb, args.periods, args.normalize, args.stride)
    except PPS4BPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    # Physical period: positions repeat after half the regularized period.
    _, t_half, _, _, _, _ = physical_trajectory(orb, 0.5, args.normalize, stride=round(TWO_PI / MONODROMY_STEP) // 2)
    R = float(t_half[-1])
    out = Path(args.out)
    man = manifest(
        "export-trajectory",
        {"m": args.m, "periods": args.periods, "normalize": args.normalize, "stride": args.stride},
        inputs=[path],
        outputs=[out],
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        for line in manifest_lines(man):
            fh.write(f"# {line}\n")
        fh.write(f"# scale_eps: {eps!r}\n")
        fh.write(f"# regularized_period: {period!r}\n")
        fh.write(f"# physical_period_R: {R!r}\n")
        fh.write("# initial_state x1 x2 x3 x4 w1 w2 w3 w4: " + " ".join(repr(float(v)) for v in phys0) + "\n")
        fh.write(f"# omega2_0: {float(phys0[5])!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "t", "x1", "x2", "x3", "x4", "mx1", "mx2", "mx3", "mx4"])
        for si, ti, p in zip(s, t, pos):
            w.writerow([repr(float(si)), repr(float(ti))] + [repr(float(v)) for v in p] + [repr(float(-v)) for v in p])
    return 0


# -- argument parsing -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pps4bp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-equal-mass", help="shoot the equal-mass orbit and build the baseline")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--terms", type=int, default=em.BASELINE_TERMS, help="trig terms of the baseline orbit")
    p.add_argument("--report", action="store_true", help="print the computed constants")
    p.set_defaults(func=cmd_solve_equal_mass)

    p = sub.add_parser("sweep", help="continue the orbit in the mass ratio")
    p.add_argument("--m-from", type=float, default=1.0)
    p.add_argument("--m-to", type=float, default=0.5)
    p.add_argument("--dm", type=float, default=0.01)
    p.add_argument("--seed", help="orbit JSON to start from (default: equal-mass baseline)")
    p.add_argument("--n-max", type=int, default=ct.ContinuationConfig.n_end, help="largest term count")
    p.add_argument("--l-target", type=float, default=ct.ContinuationConfig.L_target,
                   help="add terms while L exceeds this (0 disables)")
    p.add_argument("--out", default="results", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stability", help="multipliers and verdicts for orbit files")
    p.add_argument("--orbits", default="results/orbits", help="directory, file or glob of orbit JSONs")
    p.add_argument("--out", default="results/stability.csv")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (env SBC_ORBITS_JOBS wins)")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("export-trajectory", help="physical positions along an orbit")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--orbits", default="results/orbits", help="orbit directory or a single orbit JSON")
    p.add_argument("--periods", type=float, default=1.0, help="regularized periods to integrate")
    p.add_argument("--stride", type=int, default=50, help="keep every stride-th RK4 step")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True,
                   help="rescale so that x1 = 1 at the start point")
    p.add_argument("--out", default="results/trajectory.csv")
    p.set_defaults(func=cmd_export_trajectory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    t0 = time.perf_counter()
    code = args.func(args)
    log.info("%s finished in %.1f s (exit %d)", args.command, time.perf_counter() - t0, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
