"""Command-line front end: configuration, built-in experiments, exports.

Subcommands: solve, nonuniqueness, approx, cantor, decompose, match-oracle.
Configuration comes from a JSON manifest plus flag overrides; every run is
deterministic given its config.  Exit codes: 0 success, 2 validation error,
3 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import boundary, decompose, matching, render, solver
from .boundary import (
    BoundaryDatum,
    brothers_datum,
    cantor_inequality_check,
    cantor_interval_length,
    cantor_stage_datum,
    fat_inequality_reversed,
    mollify,
)
from .errors import InvariantViolation, SolverError, ValidationError
from .geometry import Anisotropy, ConvexDomain, domain_from_config, parse_p

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3


@dataclass
class RunConfig:
    domain: ConvexDomain
    datum: BoundaryDatum
    aniso: Anisotropy
    levels: int = 200
    grid: tuple[int, int] = (256, 256)
    out: Path = Path("out")
    seed: int = 0
    band: float = 0.01
    raw: dict = field(default_factory=dict)

    def validate(self):
        if self.levels < 2:
            raise ValidationError("levels must be at least 2")
        if self.grid[0] < 32 or self.grid[1] < 32:
            raise ValidationError("grid resolution must be at least 32x32")


def _datum_from_config(spec) -> BoundaryDatum:
    if isinstance(spec, dict) and "builtin" in spec:
        name = spec["builtin"]
        if name == "brothers":
            return brothers_datum(float(spec.get("phase", 0.0)))
        if name == "cantor":
            rho = spec.get("removal")
            rho = Fraction(rho) if rho is not None else boundary.DEFAULT_FAT_REMOVAL
            return cantor_stage_datum(int(spec.get("stage", 1)),
                                      spec.get("variant", "thin"), rho)
        raise ValidationError(f"unknown builtin datum {name!r}")
    if isinstance(spec, dict) and "piecewise" in spec:
        return boundary.piecewise_from_json(spec["piecewise"],
                                            default=float(spec.get("default", 0.0)))
    if isinstance(spec, dict) and "csv" in spec:
        return boundary.load_sampled_csv(spec["csv"])
    raise ValidationError("datum config must specify builtin, piecewise, or csv")


def load_config(args) -> RunConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
    domain = domain_from_config(raw.get("domain", {"kind": "circle",
                                                   "center": [0.0, 0.0],
                                                   "radius": 1.0}))
    datum = _datum_from_config(raw.get("datum", {"builtin": "brothers", "phase": 0.0}))
    p = raw.get("p", 2.0)
    if getattr(args, "p", None) is not None:
        p = args.p
    levels = int(raw.get("levels", 200))
    if getattr(args, "levels", None) is not None:
        levels = args.levels
    grid = raw.get("grid", [256, 256])
    if getattr(args, "grid", None) is not None:
        grid = args.grid
    if isinstance(grid, str):
        grid = [int(v) for v in grid.lower().split("x")]
    out = Path(raw.get("out", "out"))
    if getattr(args, "out", None) is not None:
        out = Path(args.out)
    seed = int(raw.get("seed", 0))
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    cfg = RunConfig(domain=domain, datum=datum, aniso=Anisotropy(parse_p(p)),
                    levels=levels, grid=(int(grid[0]), int(grid[1])), out=out,
                    seed=seed, band=float(raw.get("band", 0.01)), raw=raw)
    cfg.validate()
    return cfg


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def cmd_solve(cfg: RunConfig) -> int:
    """sweep -> reconstruct -> trace check; writes CSV grid, JSON summary, SVG."""
    fam = solver.sweep(cfg.datum, cfg.domain, cfg.aniso, cfg.levels)
    grid_field = solver.reconstruct(fam, cfg.grid, strict=False)
    disc = solver.trace_check(grid_field, cfg.datum, cfg.band)
    cfg.out.mkdir(parents=True, exist_ok=True)
    solver.field_to_csv(grid_field, cfg.out / "grid.csv")
    summary = solver.summary_dict(grid_field)
    summary["trace_discrepancy"] = disc
    summary["band"] = cfg.band
    summary["p"] = "inf" if cfg.aniso.p == math.inf else cfg.aniso.p
    _write_json(cfg.out / "summary.json", summary)
    render.render_family_svg(fam, cfg.out / "levels.svg")
    print(f"kept {len(fam.levels)} levels, skipped {len(fam.skipped)}; "
          f"coarea TV {grid_field.coarea_tv:.6g}, grid TV {grid_field.grid_tv:.6g}, "
          f"trace discrepancy {disc:.6g}")
    if fam.nesting_violations:
        print(f"nesting violations remain at {len(fam.nesting_violations)} "
              "level pairs (see summary.json)")
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_nonuniqueness(cfg: RunConfig) -> int:
    """Count optimal solutions per level: cost-tied pairings plus chords that
    admit non-segment minimizers; emits an alternative solution field."""
    if cfg.aniso.is_smooth:
        print("uniqueness regime: for 1 < p < inf minimal boundaries are "
              "segments, so the solution is unique")
        return EXIT_VALIDATION
    fam = solver.sweep(cfg.datum, cfg.domain, cfg.aniso, cfg.levels)
    rows = []
    degenerate_levels = 0
    for k, m in enumerate(fam.matchings):
        enum = matching.enumerate_optimal(m.crossings, fam.domain, fam.aniso)
        costs = [c.cost for c in enum.matchings]
        spread = (max(costs) - min(costs)) / max(min(costs), 1e-300)
        degenerate = matching.degenerate_chords(m, fam.domain, fam.aniso)
        optima = max(len(enum.matchings), 2 if degenerate else 1)
        if optima >= 2:
            degenerate_levels += 1
        rows.append({
            "t": float(fam.levels[k]),
            "pairings": len(enum.matchings),
            "pairing_overflow": enum.overflow,
            "degenerate_chords": len(degenerate),
            "optima": optima,
            "cost_spread": spread,
        })
    fraction = degenerate_levels / len(fam.levels)
    alt = solver.realize_with_staircases(fam, steps=4)
    alt_field = solver.reconstruct(alt, cfg.grid, strict=False)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out / "nonuniqueness.json", {
        "schema": 1,
        "p": "inf" if cfg.aniso.p == math.inf else cfg.aniso.p,
        "levels": rows,
        "fraction_nonunique": fraction,
    })
    solver.field_to_csv(alt_field, cfg.out / "alternative_grid.csv")
    witnesses = []
    for m in alt.matchings[:: max(1, len(alt.matchings) // 16)]:
        if m.paths:
            witnesses.extend((path, "#c03020") for path in m.paths.values())
    render.render_family_svg(fam, cfg.out / "witnesses.svg",
                             extra_polylines=witnesses)
    print(f"{degenerate_levels}/{len(fam.levels)} kept levels admit multiple "
          f"optimal solutions (fraction {fraction:.3f})")
    return EXIT_OK


def _eps_schedule(raw) -> list[float]:
    eps = raw.get("eps")
    if eps:
        return [float(e) for e in eps]
    return [2.0 ** -k for k in range(4, 11)]


def cmd_approx(cfg: RunConfig) -> int:
    """Mollified approximation runs: data variation, L1 errors, co-area TV.

    For Cantor data with a "stages" list the schedule runs over construction
    stages instead of mollification widths.
    """
    cfg.out.mkdir(parents=True, exist_ok=True)
    datum_spec = cfg.raw.get("datum", {})
    stages = cfg.raw.get("stages")
    rows = []
    if isinstance(datum_spec, dict) and datum_spec.get("builtin") == "cantor" and stages:
        variant = datum_spec.get("variant", "thin")
        for n in stages:
            f_n = cantor_stage_datum(int(n), variant)
            fam = solver.sweep(f_n, cfg.domain, cfg.aniso, cfg.levels)
            grid_field = solver.reconstruct(fam, cfg.grid, strict=False)
            disc = solver.trace_check(grid_field, f_n, cfg.band)
            rows.append({
                "stage": int(n),
                "bv_seminorm": f_n.bv_seminorm(),
                "solution_l1": fam.integral() - fam.vmin * cfg.domain.area,
                "coarea_tv": fam.coarea_tv,
                "trace_discrepancy": disc,
            })
        fieldnames = list(rows[0].keys())
    else:
        u_ref = solver.reconstruct(
            solver.sweep(cfg.datum, cfg.domain, cfg.aniso, cfg.levels),
            cfg.grid, strict=False)
        for eps in _eps_schedule(cfg.raw):
            f_eps = mollify(cfg.datum, eps)
            fam = solver.sweep(f_eps, cfg.domain, cfg.aniso, cfg.levels)
            grid_field = solver.reconstruct(fam, cfg.grid, strict=False)
            rows.append({
                "eps": eps,
                "bv_seminorm": f_eps.bv_seminorm(),
                "data_l1_error": boundary.datum_l1_distance(f_eps, cfg.datum),
                "solution_l1_error": grid_field.l1_difference(u_ref),
                "coarea_tv": fam.coarea_tv,
            })
        fieldnames = list(rows[0].keys())
    with open(cfg.out / "approx.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        print("  ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in row.items()))
    return EXIT_OK


def cmd_cantor(n_max: int, variant: str, rho, out: Path | None) -> int:
    """Stage table: exact interval lengths, measures, chord inequalities."""
    if n_max > 20:
        raise ValidationError("cantor stages above 20 are not supported")
    rho = Fraction(rho) if rho is not None else boundary.DEFAULT_FAT_REMOVAL
    rows = []
    status = EXIT_OK
    for n in range(0, n_max + 1):
        a_n = cantor_interval_length(n)
        measure = Fraction(2 ** n) * a_n
        row = {
            "n": n,
            "a_n": str(a_n),
            "a_n_float": float(a_n),
            "thin_stage_measure": float(measure),
        }
        if n >= 1:
            holds, lhs, rhs = cantor_inequality_check(n)
            row.update(thin_inequality_holds=holds, lhs=lhs, rhs=rhs)
            if variant == "fat":
                rev, flhs, frhs = fat_inequality_reversed(n, rho)
                row.update(fat_reversed=rev, fat_lhs=flhs, fat_rhs=frhs)
                if not rev:
                    status = EXIT_INVARIANT
        rows.append(row)
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    if variant == "fat" and status != EXIT_OK:
        print(f"fat removal fraction {rho} fails the reversed inequality "
              f"within stages 1..{n_max}")
    if out is not None:
        _write_json(out / "cantor.json",
                    {"schema": 1, "variant": variant, "rho": str(rho), "rows": rows})
    return status


def cmd_decompose(cfg: RunConfig) -> int:
    """Solve, then split into continuous and jump parts; writes the tree."""
    fam = solver.sweep(cfg.datum, cfg.domain, cfg.aniso, cfg.levels)
    grid_field = solver.reconstruct(fam, cfg.grid, strict=False)
    tree = decompose.build_region_tree(grid_field)
    u_j = decompose.jump_part(tree)
    u_c = decompose.continuous_part(grid_field, tree)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out / "tree.json", tree.to_json())
    solver.field_to_csv(grid_field, cfg.out / "grid.csv")
    solver.field_to_csv(u_j, cfg.out / "jump.csv")
    solver.field_to_csv(u_c, cfg.out / "continuous.csv")
    print(f"{tree.n_regions} regions, {len(tree.edges)} jump chords; "
          f"TVs: total {grid_field.grid_tv:.6g} = continuous {u_c.grid_tv:.6g} "
          f"+ jump {u_j.grid_tv:.6g} (within discretization)")
    return EXIT_OK


def cmd_match_oracle(cases: int, seed: int) -> int:
    """Self-test: DP minimum equals exhaustive enumeration, exactly."""
    from .geometry import Circle
    rng = np.random.default_rng(seed)
    domain = Circle()
    sizes = [2, 4, 6, 8, 10]
    ps = [1.0, 1.5, 2.0, 3.0, math.inf]
    failures = 0
    for _ in range(cases):
        n = int(rng.choice(sizes))
        p = rng.choice(ps)
        thetas = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
        start = int(rng.integers(0, 2)) * 2 - 1
        dirs = start * np.array([(-1) ** i for i in range(n)])
        cs = boundary.CrossingSet(0.0, thetas, dirs)
        aniso = Anisotropy(float(p))
        dp = matching.min_matching(cs, domain, aniso)
        brute = matching.brute_force_min(cs, domain, aniso)
        if dp.cost != brute.cost:
            failures += 1
            print(f"MISMATCH n={n} p={p}: dp={dp.cost!r} brute={brute.cost!r}")
    if failures:
        print(f"match-oracle: {failures}/{cases} mismatches")
        return EXIT_INVARIANT
    print(f"match-oracle: {cases} cases, DP equals brute force exactly")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leastgrad",
        description="Level-set solver for the planar least gradient problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=str, default=None, help="JSON manifest")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--levels", type=int, default=None, help="level count K")
        p.add_argument("--grid", type=str, default=None, help="resolution WxH")
        p.add_argument("--p", type=str, default=None,
                       help="anisotropy exponent (number or 'inf')")
        p.add_argument("--seed", type=int, default=None)

    for name in ("solve", "nonuniqueness", "approx", "decompose"):
        add_common(sub.add_parser(name))
    cantor = sub.add_parser("cantor")
    cantor.add_argument("--stages", type=int, default=10, help="max stage n")
    cantor.add_argument("--variant", choices=("thin", "fat"), default="thin")
    cantor.add_argument("--removal", type=str, default=None,
                        help="fat removal fraction rho (e.g. 1/65536)")
    cantor.add_argument("--out", type=str, default=None)
    oracle = sub.add_parser("match-oracle")
    oracle.add_argument("--cases", type=int, default=500)
    oracle.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "cantor":
            rho = Fraction(args.removal) if args.removal else None
            return cmd_cantor(args.stages, args.variant, rho,
                              Path(args.out) if args.out else None)
        if args.command == "match-oracle":
            return cmd_match_oracle(args.cases, args.seed)
        cfg = load_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "nonuniqueness":
            return cmd_nonuniqueness(cfg)
        if args.command == "approx":
            return cmd_approx(cfg)
        if args.command == "decompose":
            return cmd_decompose(cfg)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InvariantViolation, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
