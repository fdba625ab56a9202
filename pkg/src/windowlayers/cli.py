"""Command-line front end: reproducible experiments with paired outputs.

Every command writes a machine-readable JSON artifact and an aligned-text
report into the output directory.  JSON artifacts are byte-deterministic
for a fixed configuration and thread count 1: they embed the config echo,
its hash, and the tool version, but no wall-clock (timestamps go to the
text report only).  Exit status: 0 success, 1 numerical failure, 2
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from . import bracketing as br
from . import layer_solver as ls
from . import window_eigs as we
from .config import ConfigFileError, RunConfig, load_config

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def _provenance(cfg: RunConfig) -> dict:
    return {"config": cfg.raw, "config_hash": cfg.hash, "version": __version__}


def _write_outputs(outdir: Path, name: str, payload: dict, text: str) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{name}.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n")
    stamp = time.strftime("%Y-%m-%d %H:%M:%S")
    head = (f"# {name} | {stamp} | config {payload.get('config_hash', '?')} "
            f"| windowlayers {__version__}")
    (outdir / f"{name}.txt").write_text(f"{head}\n{text}\n")


def _write_csv(outdir: Path, name: str, header: list[str], rows: list[list]) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / f"{name}.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _table(headers: list[str], rows: list[list], fmt: str = "{:>14}") -> str:
    head = "".join(fmt.format(h) for h in headers)
    body = []
    for row in rows:
        cells = []
        for c in row:
            if isinstance(c, float):
                cells.append(fmt.format(f"{c:.8g}"))
            else:
                cells.append(fmt.format(str(c)))
        body.append("".join(cells))
    return head + "\n" + "\n".join(body)


def _window_spectra(cfg: RunConfig, count: int):
    shape = cfg.window
    if shape.is_disk:
        R = shape.scale * shape.cos_coeffs[0]
        return (we.disk_window_spectrum(R, "neumann", count),
                we.disk_window_spectrum(R, "dirichlet", count))
    mesh = we.mesh_window(shape, cfg.numerics.h_rho / 2)
    return (we.fem_window_spectrum(mesh, "neumann", count),
            we.fem_window_spectrum(mesh, "dirichlet", count))


def _require_disk(cfg: RunConfig) -> float:
    if not cfg.window.is_disk:
        raise ConfigFileError("this command needs a circular window "
                              "(the 3D solver separates angular sectors)")
    return cfg.window.scale * cfg.window.cos_coeffs[0]


def cmd_bounds(cfg: RunConfig, outdir: Path) -> int:
    block = cfg.command_block("solve")
    count = block.get("count", 16)
    neumann, dirichlet = _window_spectra(cfg, count)
    brackets = br.brackets(cfg.layers, neumann, dirichlet)
    counts = br.count_bounds(cfg.layers, neumann, dirichlet)
    payload = _provenance(cfg) | {
        "threshold_shift": br.threshold_shift(cfg.layers),
        "count_threshold": counts.threshold_used,
        "backend": neumann.backend,
        "brackets": [{"index": b.index, "lower": b.lower, "upper": b.upper,
                      "mu_neumann": b.mu_neumann, "mu_dirichlet": b.mu_dirichlet}
                     for b in brackets],
        "count_bounds": {"min": counts.min_count, "max": counts.max_count,
                         "undecided_dirichlet": counts.undecided_dirichlet,
                         "undecided_neumann": counts.undecided_neumann},
    }
    rows = [[b.index, b.lower, b.upper, b.mu_neumann, b.mu_dirichlet]
            for b in brackets]
    text = (f"threshold shift  {br.threshold_shift(cfg.layers):.12f}\n"
            f"count threshold  {counts.threshold_used:.12f}\n"
            f"count bounds     [{counts.min_count}, {counts.max_count}]\n\n"
            + _table(["index", "lower", "upper", "mu_N", "mu_D"], rows))
    _write_outputs(outdir, "bounds", payload, text)
    return EXIT_OK


def cmd_window_eigs(cfg: RunConfig, outdir: Path, dump_mesh: bool = False) -> int:
    block = cfg.command_block("window_eigs")
    count = block.get("count", 8)
    h = block.get("h", cfg.numerics.h_rho / 2)
    shape = cfg.window
    if shape.is_disk:
        R = shape.scale * shape.cos_coeffs[0]
        neumann = we.disk_window_spectrum(R, "neumann", count)
        dirichlet = we.disk_window_spectrum(R, "dirichlet", count)
    else:
        mesh = we.mesh_window(shape, h)
        neumann = we.fem_window_spectrum(mesh, "neumann", count)
        dirichlet = we.fem_window_spectrum(mesh, "dirichlet", count)
        if dump_mesh or block.get("dump_mesh", False):
            _write_csv(outdir, "mesh_vertices", ["x", "y", "boundary"],
                       [[float(v[0]), float(v[1]), int(bd)]
                        for v, bd in zip(mesh.vertices, mesh.boundary)])
            _write_csv(outdir, "mesh_triangles", ["a", "b", "c"],
                       mesh.triangles.tolist())
    payload = _provenance(cfg) | {
        "backend": neumann.backend,
        "neumann": {"values": list(neumann.values), "errors": list(neumann.errors)},
        "dirichlet": {"values": list(dirichlet.values),
                      "errors": list(dirichlet.errors)},
    }
    rows = [[i + 1, nv, ne, dv, de_]
            for i, (nv, ne, dv, de_) in enumerate(zip(
                neumann.values, neumann.errors, dirichlet.values, dirichlet.errors))]
    text = _table(["index", "mu_N", "err_N", "mu_D", "err_D"], rows)
    _write_outputs(outdir, "window_eigs", payload, text)
    return EXIT_OK


def cmd_solve(cfg: RunConfig, outdir: Path, half_domain: bool = False,
              export: bool = False) -> int:
    block = cfg.command_block("solve")
    R = _require_disk(cfg)
    half = half_domain or block.get("half_domain", False)
    export = export or block.get("export_eigenfunctions", False)
    if half:
        if cfg.layers.d != math.pi:
            raise ConfigFileError("half-domain parity reduction needs equal "
                                  "layer widths (d = pi)")
        spectrum = ls.half_domain_solve(R, cfg.numerics)
    else:
        spectrum = ls.solve_all(cfg.layers, R, cfg.numerics)

    count = max(16, spectrum.resolved_count + spectrum.unresolved_count + 4)
    neumann, dirichlet = _window_spectra(cfg, count)
    brackets = br.brackets(cfg.layers, neumann, dirichlet)
    counts = br.count_bounds(cfg.layers, neumann, dirichlet)

    verdicts = []
    expanded = []
    for s in spectrum.states:
        expanded.extend([s] * s.multiplicity)
    for i, s in enumerate(expanded):
        inside = (brackets[i].contains(s.lam, slack=2e-3)
                  if i < len(brackets) else None)
        verdicts.append(inside)

    states_payload = [{
        "lam": s.lam, "m": s.m, "multiplicity": s.multiplicity,
        "residual": s.residual, "resolved": s.resolved,
        "gap": s.gap, "gap_disc": s.gap_disc,
    } for s in spectrum.states]
    payload = _provenance(cfg) | {
        "half_domain": half,
        "theta_disc": spectrum.theta_disc,
        "states": states_payload,
        "resolved_count": spectrum.resolved_count,
        "unresolved_count": spectrum.unresolved_count,
        "count_bounds": {"min": counts.min_count, "max": counts.max_count},
        "count_consistent": counts.consistent_with(
            spectrum.resolved_count, spectrum.unresolved_count),
        "bracket_verdicts": verdicts,
    }
    rows = [[s.m, s.lam, s.multiplicity, f"{s.residual:.1e}",
             "yes" if s.resolved else "near-threshold"]
            for s in spectrum.states]
    text = (_table(["m", "lambda", "mult", "residual", "resolved"], rows)
            + f"\n\ncount bounds [{counts.min_count}, {counts.max_count}]"
            + f"  solver count {spectrum.resolved_count}"
            + (f" (+{spectrum.unresolved_count} unresolved)"
               if spectrum.unresolved_count else "")
            + f"\nbracket containment: "
            + ", ".join(str(v) for v in verdicts))
    _write_outputs(outdir, "solve", payload, text)
    if export:
        for idx, s in enumerate(spectrum.states):
            rows = [[float(r), float(z), float(u)] for r, z, u in
                    zip(s.op.node_rho, s.op.node_z, s.u)]
            _write_csv(outdir, f"eigenfunction_{idx}", ["rho", "z", "u"], rows)
            meta = outdir / f"eigenfunction_{idx}.csv"
            body = meta.read_text()
            meta.write_text(f"# lam={s.lam!r} m={s.m} R={R!r} "
                            f"d={cfg.layers.d!r}\n" + body)
    return EXIT_OK


def cmd_critical(cfg: RunConfig, outdir: Path) -> int:
    block = cfg.command_block("critical")
    R = _require_disk(cfg)
    n = block.get("n", 2)
    t_lo = block.get("t_lo", max(0.5, 0.2 * R))
    t_hi = block.get("t_hi", 2.0 * R)
    report = an.critical_scale(cfg.layers, n, (t_lo, t_hi), cfg.numerics,
                               sector=block.get("sector"),
                               rel_tol=block.get("rel_tol", 1e-4),
                               gap_floor=block.get("gap_floor", 5e-3))
    payload = _provenance(cfg) | {
        "n": n, "t_n": report.t_n, "interval": list(report.interval),
        "interval_width": report.final_interval_width,
        "sector": report.sector, "L": report.L,
        "trace": [[t, c, amb] for t, c, amb in report.bisection_trace],
    }
    rows = [[f"{t:.8f}", c, "ambiguous" if amb else ""]
            for t, c, amb in report.bisection_trace]
    text = (f"t_{n} = {report.t_n:.8f} in [{report.interval[0]:.8f}, "
            f"{report.interval[1]:.8f}]\n\n"
            + _table(["t", "count", "flag"], rows))
    _write_outputs(outdir, "critical", payload, text)
    _write_csv(outdir, "critical_trace", ["t", "count", "ambiguous"],
               [[t, c, int(amb)] for t, c, amb in report.bisection_trace])
    return EXIT_OK


def cmd_gap_law(cfg: RunConfig, outdir: Path) -> int:
    block = cfg.command_block("gap_law")
    if "t_n" not in block:
        raise ConfigFileError("[gap_law] needs t_n (run `critical` first)")
    curve = an.gap_curve(cfg.layers, block["t_n"],
                         block.get("eps", [0.10, 0.08, 0.06, 0.05]),
                         cfg.numerics, beta=block.get("beta", 1.0),
                         sector=block.get("sector"),
                         index_in_sector=block.get("index", 0),
                         n_index=None if block.get("sector") is not None
                         else block.get("index", 2))
    fit = an.fit_exponential_law(curve)
    payload = _provenance(cfg) | {
        "t_n": curve.t_n,
        "points": [{"eps": p.eps, "radius": p.radius, "lam": p.lam,
                    "gap": p.gap, "gap_disc": p.gap_disc, "L": p.L}
                   for p in curve.points],
        "dropped_eps": list(curve.dropped),
        "fit": {"slope": fit.slope, "intercept": fit.intercept,
                "r2": fit.linearity_r2,
                "coupling_from_slope": fit.coupling_from_slope,
                "accepted": fit.accepted, "reject_reason": fit.reject_reason},
    }
    rows = [[p.eps, p.lam, p.gap, p.gap_disc, p.L] for p in curve.points]
    text = (_table(["eps", "lambda", "gap", "gap_disc", "L"], rows)
            + f"\n\nslope {fit.slope:.6f}  r2 {fit.linearity_r2:.5f}"
            + f"  coupling {fit.coupling_from_slope:.4f}"
            + f"  accepted {fit.accepted}")
    _write_outputs(outdir, "gap_law", payload, text)
    _write_csv(outdir, "gap_curve", ["eps", "radius", "lambda", "gap", "gap_disc", "L"],
               [[p.eps, p.radius, p.lam, p.gap, p.gap_disc, p.L]
                for p in curve.points])
    return EXIT_OK


def cmd_edge(cfg: RunConfig, outdir: Path) -> int:
    block = cfg.command_block("edge")
    if "t_n" not in block:
        raise ConfigFileError("[edge] needs t_n (run `critical` first)")
    eps = block.get("eps", 0.05)
    sector = block.get("sector", 0)
    index = block.get("index", 0)
    radius = block["t_n"] * (1.0 + eps)
    sol = ls.solve_sector(cfg.layers, radius, sector, cfg.numerics)
    resolved = [s for s in sol.states if s.resolved]
    if len(resolved) <= index:
        raise an.AnalysisError(
            f"sector {sector} has no resolved state of index {index} at "
            f"radius {radius!r}")
    state = resolved[index]
    prof = an.edge_amplitude(state, cfg.layers,
                             envelope_corrected=block.get(
                                 "envelope_correction", True))
    svals = np.linspace(0.0, 2 * math.pi * radius, 33)[:-1]
    lofs = prof.amplitude_of_arclength(svals, radius)
    payload = _provenance(cfg) | {
        "radius": radius, "lam": state.lam, "sector": sector,
        "amplitude": prof.amplitude, "exponent": prof.exponent,
        "coupling_direct": prof.coupling_direct,
        "normalization_scale": prof.normalization_scale,
        "fit_window": list(prof.fit_window),
        "amplitude_halves": list(prof.amplitude_halves),
        "samples": [[r, a] for r, a in prof.samples],
    }
    text = (f"lambda {state.lam:.10f}  exponent {prof.exponent:.4f}  "
            f"amplitude {prof.amplitude:.6f}\n"
            f"direct coupling integral {prof.coupling_direct:.6f}\n\n"
            + _table(["r", "A(r)"], [[r, a] for r, a in prof.samples]))
    _write_outputs(outdir, "edge", payload, text)
    _write_csv(outdir, "edge_amplitude", ["s", "l"],
               [[float(s), float(l)] for s, l in zip(svals, lofs)])
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, outdir: Path) -> int:
    block = cfg.command_block("convergence")
    levels = block.get("levels", 3)
    if levels < 2:
        raise ConfigFileError("need at least two refinement levels")
    if block.get("self_test", False):
        study = ls.rectangle_refinement_study(1.2, 1.0, 0.05, levels=max(levels, 3))
        name = "rectangle self-test"
    else:
        R = _require_disk(cfg)
        study = ls.refine_study(cfg.layers, R, block.get("sector", 0),
                                cfg.numerics, levels=max(levels, 3))
        name = "windowed run"
    payload = _provenance(cfg) | {
        "what": name,
        "hs": list(study.hs), "lams": list(study.lams),
        "diffs": list(study.diffs),
        "observed_order": study.observed_order,
        "settled": study.settled, "extrapolated": study.extrapolated,
        "error_estimate": study.error_estimate,
    }
    rows = [[h, lam] for h, lam in zip(study.hs, study.lams)]
    text = (_table(["h", "lambda"], rows)
            + f"\n\nobserved order {study.observed_order}"
            + f"  settled {study.settled}  extrapolated {study.extrapolated}")
    _write_outputs(outdir, "convergence", payload, text)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, outdir: Path, threads: int) -> int:
    block = cfg.command_block("sweep")
    radii = block.get("radii", [1.0, 2.0, 3.0, 5.0])
    if any(r <= 0 for r in radii):
        raise ConfigFileError("sweep radii must be positive")

    def run(R):
        return R, ls.solve_all(cfg.layers, R, cfg.numerics)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, radii))
    else:
        results = [run(R) for R in radii]
    results.sort(key=lambda t: t[0])
    payload = _provenance(cfg) | {"sweep": [
        {"radius": R,
         "eigenvalues": spec.eigenvalues(),
         "resolved_count": spec.resolved_count,
         "unresolved_count": spec.unresolved_count}
        for R, spec in results]}
    rows = [[R, spec.resolved_count, spec.unresolved_count,
             ", ".join(f"{v:.6f}" for v in spec.eigenvalues())]
            for R, spec in results]
    text = _table(["radius", "count", "unresolved", "eigenvalues"], rows, "{:>12}")
    _write_outputs(outdir, "sweep", payload, text)
    _write_csv(outdir, "sweep", ["radius", "index", "lambda"],
               [[R, i + 1, lam] for R, spec in results
                for i, lam in enumerate(spec.eigenvalues())])
    return EXIT_OK


_COMMANDS = {
    "bounds": cmd_bounds,
    "window-eigs": cmd_window_eigs,
    "solve": cmd_solve,
    "critical": cmd_critical,
    "gap-law": cmd_gap_law,
    "edge": cmd_edge,
    "convergence": cmd_convergence,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windowlayers",
        description="Bound states of two quantum layers coupled through a window")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="run configuration file (INI format)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for sweeps (default: config)")
        if name == "solve":
            p.add_argument("--half-domain", action="store_true",
                           help="even-parity half problem (equal widths only)")
            p.add_argument("--export", action="store_true",
                           help="write eigenfunction CSV files")
        if name == "window-eigs":
            p.add_argument("--dump-mesh", action="store_true",
                           help="write mesh vertex/triangle CSV files")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigFileError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out)
    threads = args.threads if args.threads is not None else cfg.threads
    try:
        if args.command == "solve":
            return cmd_solve(cfg, outdir, half_domain=args.half_domain,
                             export=args.export)
        if args.command == "window-eigs":
            return cmd_window_eigs(cfg, outdir, dump_mesh=args.dump_mesh)
        if args.command == "sweep":
            return cmd_sweep(cfg, outdir, threads)
        return _COMMANDS[args.command](cfg, outdir)
    except ConfigFileError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical / solver failures
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
