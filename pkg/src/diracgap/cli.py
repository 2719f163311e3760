"""Command-line front end.

    diracgap spectrum|pes|verify|bsnorm|oracle --config run.toml [--out DIR] [--seed N] [--threads N]

Exit codes: 0 ok, 2 validation or configuration error, 3 solver failure,
4 verification violation.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import numpy as np

from .config import COMMANDS, load_config, load_config_file
from .errors import ConfigError, SolverError, ValidationError
from .inequalities import KATO_CONSTANT
from .measure import measure_from_tables

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VIOLATION = 0, 2, 3, 4
PES_SUCCESS_FRACTION = 0.8


@contextmanager
def _pool(threads: int):
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        yield ex


def _out(cfg: dict, name: str) -> str:
    return os.path.join(cfg["output"]["dir"], name)


def _measure(cfg: dict):
    comps = cfg["measure"]["components"]
    if not isinstance(comps, list):
        raise ConfigError("ConfigError: measure.components must be an array of tables")
    return measure_from_tables(comps)


def run_spectrum(cfg: dict) -> int:
    from .minmax import spectrum_in_gap
    from .output import write_csv, write_json

    mu = _measure(cfg)
    mu.validate("solver")
    r = cfg["radial"]
    cap = r["cap"] if r["cap"] > 0 else None
    with _pool(cfg["threads"]) as pool:
        res = spectrum_in_gap(mu, tuple(r["kappas"]), r["levels"], r["tol"], r["r_max"], r["n_intervals"],
                              r["order"], r["grading"], cap, pool)
    rows = [(lv.k, lv.value, lv.channel, lv.within_channel_index, lv.degeneracy, lv.residual,
             lv.bracket_width, lv.basis_dimension) for lv in res.levels]
    write_csv(_out(cfg, "levels.csv"), ("k", "value", "channel", "within_channel_index", "degeneracy",
                                        "residual", "bracket_width", "basis_dimension"), rows, cfg)
    write_json(_out(cfg, "spectrum.json"), {
        "levels": [lv.value for lv in res.levels],
        "per_channel": {str(k): [lv.value for lv in v] for k, v in res.per_channel.items()},
        "truncated": {str(k): v for k, v in res.truncated.items()},
        "diagnostics": res.diagnostics}, cfg)
    return EXIT_OK


def _separations(p: dict) -> list[float]:
    if p["separations"]:
        return [float(d) for d in p["separations"]]
    if not (0 < p["d_min"] < p["d_max"]) or p["points"] < 2:
        raise ConfigError("ConfigError: pes needs 0 < d_min < d_max and points >= 2")
    return [float(d) for d in np.geomspace(p["d_min"], p["d_max"], p["points"])]


def run_pes(cfg: dict) -> int:
    from .molecule import MoleculeSpec, conjecture_gap, continuity_flags, pes_sweep
    from .output import write_csv, write_json, write_plot_data

    m = cfg["molecule"]
    spec = MoleculeSpec(m["centers"], m["weights"])
    seps = _separations(cfg["pes"])
    with _pool(cfg["threads"]) as pool:
        recs = pes_sweep(spec, seps, m["basis"], m["grid"], cfg["pes"]["tol"], pool)
    header = ("d", "lambda1", "u_nuc", "total", "basis_dim", "residual", "status")
    write_csv(_out(cfg, "pes.csv"), header,
              [(r.d, r.lambda1, r.u_nuc, r.total, r.basis_dim, r.residual, r.status) for r in recs], cfg)
    ok = [r for r in recs if r.status == "ok"]
    write_plot_data(_out(cfg, "pes.dat"), [("lambda1", [(r.d, r.lambda1) for r in ok]),
                                           ("lambda1+u_nuc", [(r.d, r.total) for r in ok])], cfg)
    limits = {"far": float(np.sqrt(1.0 - spec.weights.max() ** 2))}
    if spec.total_charge < 1.0:
        limits["united"] = float(np.sqrt(1.0 - spec.total_charge**2))
    write_json(_out(cfg, "pes.json"), {
        "points": len(recs), "succeeded": len(ok),
        "conjecture_observation": conjecture_gap(recs, spec),
        "continuity_flags": continuity_flags(recs),
        "limits": limits}, cfg)
    for r in recs:
        if r.status != "ok":
            print(f"pes: d={r.d:g} failed with {r.status}", file=sys.stderr)
    return EXIT_OK if len(ok) >= PES_SUCCESS_FRACTION * len(recs) else EXIT_SOLVER


def run_verify(cfg: dict, kato_constant: float = KATO_CONSTANT) -> int:
    """Full inequality suite; ``kato_constant`` is a test hook for deliberate violations."""
    from .output import write_csv, write_json
    from .verify import ROW_HEADER, run_suite

    opts = cfg["verify"]
    if opts["trials"] < 1:
        raise ConfigError("ConfigError: verify.trials must be at least 1")
    with _pool(cfg["threads"]) as pool:
        rows = run_suite(opts, cfg["seed"], kato_constant=kato_constant, pool=pool)
    write_csv(_out(cfg, "verify.csv"), ROW_HEADER, [r.as_row() for r in rows], cfg)
    bad = [r for r in rows if not r.passed]
    summary = {}
    for r in rows:
        s = summary.setdefault(r.inequality, {"rows": 0, "violations": 0, "min_margin": float("inf")})
        s["rows"] += 1
        s["violations"] += int(not r.passed)
        if np.isfinite(r.margin):
            s["min_margin"] = min(s["min_margin"], r.margin)
    write_json(_out(cfg, "verify.json"), {"summary": summary, "violations": len(bad),
                                          "violating_seeds": [[r.inequality, r.seed] for r in bad]}, cfg)
    for r in bad:
        print(f"violation: {r.inequality} trial {r.trial} seed {r.seed} {r.param} margin {r.margin:.3e}",
              file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def run_bsnorm(cfg: dict) -> int:
    from .birman_schwinger import SpinorGrid, TruncatedPotentialField, norm_estimate
    from .output import write_csv, write_json

    g = cfg["grid"]
    mu = _measure(cfg)
    mu.validate("solver")
    grid = SpinorGrid(float(g["L"]), int(g["N"]), cfg["threads"])
    cap = g["cap"] if g["cap"] > 0 else np.inf
    pot = TruncatedPotentialField.from_measure(grid, mu, cap)
    est = norm_estimate(grid, float(g["lambda"]), pot, int(g["iterations"]), int(g["seed"]))
    write_csv(_out(cfg, "bsnorm.csv"), ("cycle", "estimate"), list(enumerate(est.trace)), cfg)
    write_json(_out(cfg, "bsnorm.json"), {"estimate": est.estimate, "residual": est.residual,
                                          "trace": est.trace, "matvecs": est.matvecs,
                                          "mass": mu.total_charge}, cfg)
    return EXIT_OK


def run_oracle(cfg: dict) -> int:
    from .output import write_csv, write_json
    from .shooting import point_charge_reference_levels, shoot_levels

    mu = _measure(cfg)
    mu.validate("solver")
    o = cfg["oracle"]
    atoms = mu.atom_weights()
    pure_point = len(mu.components) == 1 and len(atoms) == 1
    rows = []
    for kappa in o["kappas"]:
        levels = shoot_levels(mu, int(kappa), int(o["count"]))
        first = 0 if kappa < 0 else 1
        closed = (point_charge_reference_levels(atoms[0][1], int(kappa), first + len(levels) - 1)
                  if pure_point else [float("nan")] * len(levels))
        rows += [(int(kappa), first + n, e, c) for n, (e, c) in enumerate(zip(levels, closed))]
    write_csv(_out(cfg, "oracle.csv"), ("kappa", "n_r", "energy", "closed_form"), rows, cfg)
    write_json(_out(cfg, "oracle.json"), {"levels": [[r[0], r[1], r[2]] for r in rows]}, cfg)
    return EXIT_OK


RUNNERS = {"spectrum": run_spectrum, "pes": run_pes, "verify": run_verify,
           "bsnorm": run_bsnorm, "oracle": run_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diracgap", description="Dirac-Coulomb gap eigenvalue workbench")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    return p


def main(argv=None, kato_constant: float = KATO_CONSTANT) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "threads": args.threads, "command": args.command}
    try:
        cfg = load_config_file(args.config, overrides) if args.config else load_config(None, overrides)
        if args.out:
            cfg["output"]["dir"] = args.out
        if args.command == "verify":
            return run_verify(cfg, kato_constant)
        return RUNNERS[args.command](cfg)
    except (SolverError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"error: {_describe(exc)}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, ValueError) as exc:
        print(f"error: {_describe(exc)}", file=sys.stderr)
        return EXIT_VALIDATION


def _describe(exc: Exception) -> str:
    name = type(exc).__name__
    msg = str(exc)
    return msg if msg.startswith(name) else f"{name}: {msg}"


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
