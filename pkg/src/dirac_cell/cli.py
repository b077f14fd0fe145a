"""Command-line entry point: meshing, single-model runs, model comparison,
parameter sweeps, and analytic self-checks.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 analytic
self-check failure.  All CSV output is byte-deterministic for a fixed
configuration: 17-significant-digit floats, LF line endings, and a leading
comment line recording the resolved configuration.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analytic
from .compare import build_shared_geometry, run_comparison
from .config import RunConfig, load_config
from .errors import AnalyticCheckError, ConfigError, DiracCellError, SolverError
from .exclusion import run_exclusion
from .geometry import CellSpec, build_punctured_square_mesh, build_square_mesh, mesh_quality
from .point_source import run_point
from .vtk_io import write_boundary_edges_vtk, write_field_vtk, write_mesh_vtk

FIG3_DIFFUSIONS = (0.1, 1.0, 10.0)
FIG3_UPTAKES = (0.0, 1.0)
E_THRESHOLD = 0.05


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, comment: str, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(f"# {comment}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_snapshots(mesh, snapshots, out: Path, prefix: str) -> None:
    for t, field in sorted(snapshots.items()):
        write_field_vtk(mesh, field, out / f"{prefix}_t{t:g}.vtk",
                        title=f"{prefix} snapshot at t={t:g}")


def cmd_mesh(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    tilde = build_punctured_square_mesh(cfg.l, cfg.h, cfg.cell())
    full = build_square_mesh(cfg.l, cfg.h)
    write_mesh_vtk(tilde, out / "mesh_punctured.vtk", title="punctured square")
    write_boundary_edges_vtk(tilde, out / "mesh_punctured_edges.vtk")
    write_mesh_vtk(full, out / "mesh_full.vtk", title="full square")
    write_boundary_edges_vtk(full, out / "mesh_full_edges.vtk")
    for name, mesh in (("punctured", tilde), ("full", full)):
        q = mesh_quality(mesh)
        print(f"{name}: {q.num_vertices} vertices, {q.num_cells} cells, "
              f"min angle {q.min_angle_deg:.2f} deg, max aspect {q.max_aspect:.3f}, "
              f"avg edge {q.avg_edge_length:.5f}")
    return 0


def cmd_run_exclusion(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    result = run_exclusion(cfg.exclusion_config())
    write_csv(out / "exclusion.csv", cfg.comment("run-exclusion"),
              ["t", "l2_tilde", "h1_semi_tilde", "mass", "flux"],
              [(r.t, r.l2, r.h1_semi, r.mass, r.boundary_flux) for r in result.records])
    _write_snapshots(result.mesh, result.snapshots, out, "exclusion")
    if result.steady_time is not None:
        print(f"steady state reached at t={result.steady_time:g}")
    return 0


def cmd_run_point(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    geo = build_shared_geometry(cfg.compare_config())
    result = run_point(cfg.point_config(), mesh=geo.full_mesh,
                       restriction=geo.restriction)
    write_csv(out / "point.csv", cfg.comment("run-point"),
              ["t", "l2_full", "l2_tilde", "mass", "psi"],
              [(r.t, r.l2, r.l2_tilde, r.mass, r.psi) for r in result.records])
    _write_snapshots(result.mesh, result.snapshots, out, "point")
    if result.steady_time is not None:
        print(f"steady state reached at t={result.steady_time:g}")
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    result = run_comparison(cfg.compare_config())
    write_csv(out / "comparison.csv", cfg.comment("compare"),
              ["t", "e_l2", "abs_l2", "abs_h1semi", "l2_uS", "l2_uP", "psi", "steady"],
              [(r.t, r.e_l2, r.abs_l2, r.abs_h1_semi, r.l2_excl, r.l2_point,
                r.psi, r.steady) for r in result.records])
    t_star = result.time_to_threshold(E_THRESHOLD)
    print(f"relative difference below {E_THRESHOLD:g} at t={t_star:g}")
    return 0


def cmd_fig2(cfg: RunConfig) -> int:
    if cfg.a <= 0:
        raise ConfigError(
            "a: the steady-state experiment needs a positive uptake rate "
            "(with a = 0 the norms grow without bound; use run-exclusion or "
            "run-point directly)")
    out = _outdir(cfg)
    geo = build_shared_geometry(cfg.compare_config())
    excl = run_exclusion(cfg.exclusion_config(snapshot_times=()), mesh=geo.tilde_mesh)
    point = run_point(cfg.point_config(snapshot_times=()), mesh=geo.full_mesh,
                      restriction=geo.restriction)
    write_csv(out / "fig2_exclusion.csv", cfg.comment("fig2"),
              ["t", "l2_tilde", "mass", "flux_or_psi"],
              [(r.t, r.l2, r.mass, r.boundary_flux) for r in excl.records])
    write_csv(out / "fig2_point.csv", cfg.comment("fig2"),
              ["t", "l2_tilde", "mass", "flux_or_psi"],
              [(r.t, r.l2_tilde, r.mass, r.psi) for r in point.records])
    print(f"final norms: exclusion {excl.records[-1].l2:.6g}, "
          f"point {point.records[-1].l2_tilde:.6g}")
    return 0


def _fig3_single(cfg: RunConfig, diffusion: float, uptake: float, out: Path):
    cell = CellSpec(center=cfg.center, radius=cfg.radius, phi=cfg.phi, uptake=uptake)
    result = run_comparison(cfg.compare_config(diffusion=diffusion, cell=cell))
    name = f"fig3_compare_D{diffusion:g}_a{uptake:g}.csv"
    write_csv(out / name, cfg.comment("fig3") + f" (d={diffusion:g} a={uptake:g})",
              ["t", "e_l2", "abs_l2", "abs_h1semi", "l2_uS", "l2_uP", "psi", "steady"],
              [(r.t, r.e_l2, r.abs_l2, r.abs_h1_semi, r.l2_excl, r.l2_point,
                r.psi, r.steady) for r in result.records])
    return diffusion, uptake, result.time_to_threshold(E_THRESHOLD)


def cmd_fig3(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    combos = [(d, a) for a in FIG3_UPTAKES for d in FIG3_DIFFUSIONS]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(lambda da: _fig3_single(cfg, da[0], da[1], out), combos))
    else:
        rows = [_fig3_single(cfg, d, a, out) for d, a in combos]
    rows.sort(key=lambda r: (r[1], r[0]))
    write_csv(out / "fig3_summary.csv", cfg.comment("fig3"),
              ["d", "a", "e_threshold", "t_reach"],
              [(d, a, E_THRESHOLD, t) for d, a, t in rows])
    for d, a, t in rows:
        print(f"D={d:<4g} a={a:g}: e_l2 < {E_THRESHOLD:g} at t={t:g}")
    return 0


def _analytic_checks() -> list[tuple[str, float, float, bool]]:
    """Each check: (name, measured, threshold, passed) with measured <= threshold."""
    from scipy.integrate import quad

    checks: list[tuple[str, float, float, bool]] = []

    def add(name, measured, threshold):
        checks.append((name, float(measured), float(threshold),
                       bool(measured <= threshold)))

    # exponential integral against adaptive quadrature of its defining integral
    xs = np.logspace(-6, math.log10(50.0), 50)
    worst = 0.0
    for x in xs:
        ref = 0.0
        if x < 1.0:
            ref += quad(lambda u: math.exp(-u) / u, x, 1.0, epsabs=0, epsrel=1e-13)[0]
        ref += quad(lambda u: math.exp(-u) / u, max(x, 1.0), np.inf,
                    epsabs=0, epsrel=1e-13)[0]
        worst = max(worst, abs(analytic.exp_integral_e1(float(x)) - ref) / ref)
    add("exp_integral_rel_error_vs_quadrature", worst, 1e-8)

    rep = analytic.summability_diagnostics(1000)
    add("quartic_sum_error_vs_limit", abs(rep.quartic_partial - rep.quartic_limit), 5e-7)

    rep800 = analytic.summability_diagnostics(800)
    add("double_sum_log_fit_deficit", 1.0 - rep800.growth_r_squared, 0.01)
    increment = rep800.ladder_values[-1] - rep800.ladder_values[-2]
    expected = (math.pi / 4.0) * math.log(rep800.ladder[-1] / rep800.ladder[-2])
    add("double_sum_increment_rel_error", abs(increment - expected) / expected, 0.25)

    # the square-domain series shares the free-space logarithmic singularity
    src = (math.pi / 2.0, math.pi / 2.0)
    diffs = []
    for r in (0.4, 0.2, 0.1, 0.05):
        p = (src[0] + r, src[1])
        diffs.append(analytic.series_point_solution(p, 1.0, src, tol=1e-3)
                     - analytic.freespace_solution((r, 0.0), 1.0))
    add("series_minus_freespace_spread_near_source", max(diffs) - min(diffs), 0.02)

    prof = analytic.singularity_profile(1.0, np.geomspace(0.16, 0.01, 6))
    target = 1.0 / (2.0 * math.pi)
    add("gradient_energy_log_slope_rel_error", abs(prof.slope - target) / target, 0.15)
    l2_increments = np.diff(prof.l2_sq)
    add("l2_mass_increment_growth", float(l2_increments[-1] / l2_increments[0]), 1.0)

    return checks


def cmd_analytic_checks(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    checks = _analytic_checks()
    write_csv(out / "analytic_checks.csv", cfg.comment("analytic-checks"),
              ["check", "measured", "threshold", "passed"],
              [(name, val, thr, ok) for name, val, thr, ok in checks])
    failed = [c for c in checks if not c[3]]
    for name, val, thr, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {val:.6g} (threshold {thr:g})")
    if failed:
        raise AnalyticCheckError(f"{len(failed)} analytic check(s) failed")
    return 0


_COMMANDS = {
    "mesh": cmd_mesh,
    "run-exclusion": cmd_run_exclusion,
    "run-point": cmd_run_point,
    "compare": cmd_compare,
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "analytic-checks": cmd_analytic_checks,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirac-cell",
        description="Compare a boundary-flux cell model against its point-source reduction.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in _COMMANDS:
        p = sub.add_parser(mode)
        p.add_argument("--config", type=str, default=None, help="TOML config file")
        p.add_argument("--d", type=float, default=None, help="diffusion coefficient")
        p.add_argument("--a", type=float, default=None, help="uptake rate")
        p.add_argument("--phi", type=float, default=None, help="secretion flux density")
        p.add_argument("--radius", type=float, default=None, help="cell radius")
        p.add_argument("--center", type=str, default=None, metavar="X,Y")
        p.add_argument("--l", type=float, default=None, help="square side length")
        p.add_argument("--h", type=float, default=None, help="target mesh size")
        p.add_argument("--dt", type=float, default=None, help="time step")
        p.add_argument("--t-end", type=float, default=None, help="final time")
        p.add_argument("--eps", type=float, default=None,
                       help="Gaussian regularization parameter")
        p.add_argument("--eps-is-variance", action="store_true", default=None,
                       help="interpret eps as the variance instead of the std deviation")
        p.add_argument("--nq", type=int, default=None, help="circle quadrature points")
        p.add_argument("--coupling", type=str, default=None, choices=["implicit", "lag"])
        p.add_argument("--rel-tol", type=float, default=None, help="solver tolerance")
        p.add_argument("--snapshots", type=str, default=None, metavar="T1,T2,...")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="parallel sweep workers")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "d": args.d, "a": args.a, "phi": args.phi, "radius": args.radius,
        "center": args.center, "l": args.l, "h": args.h, "dt": args.dt,
        "t_end": args.t_end, "eps": args.eps, "eps_is_variance": args.eps_is_variance,
        "nq": args.nq, "coupling": args.coupling, "rel_tol": args.rel_tol,
        "snapshot_times": args.snapshots, "out": args.out, "jobs": args.jobs,
    }
    try:
        cfg = load_config(args.config, overrides)
        return _COMMANDS[args.mode](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except AnalyticCheckError as exc:
        print(f"analytic checks failed: {exc}", file=sys.stderr)
        return 4
    except DiracCellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
