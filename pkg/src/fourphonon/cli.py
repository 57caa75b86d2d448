"""``simulate``: command-line front end.

Sub-commands write deterministic CSV or JSON files into ``--out``:

* ``steady``  numerical steady state of the full or effective model
* ``oracle``  closed-form statistics over a grid of squeeze strengths
* ``wigner``  Wigner grid of the oracle or numerical steady state
* ``figures`` every figure dataset plus a checksummed manifest

Exit codes: 0 success, 2 invalid input or domain, 3 non-convergence,
4 internal error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, oracle
from .config import ConfigError, RunConfig
from .errors import ConvergenceError, FourPhononError, TruncationError, UndefinedError
from .fock import DensityMatrix, fock_dm, squeezed_vacuum_ket
from .liouvillian import steady_state
from .model import default_t_cap, effective_generator, full_generator
from .observables import fidelity_ket, g2_from_state, mean_number, partial_trace, populations, purity, y_variances_numeric
from .wigner import CONTOUR_LEVELS, default_x_max, fourfold_defect, negativity, wigner_grid

UNDEFINED = "undefined"
FIG1_R = 2.0
FIG_R_GRID = "0:2:0.05"
FIG3_STATES = ((0.0, 0.0, "r0_theta0"), (0.5, 0.0, "r0.5_theta0"), (1.0, 0.0, "r1_theta0"), (1.0, math.pi, "r1_thetapi"))


# ---------------------------------------------------------------- formatting

def format_number(value) -> str:
    """17 significant digits in lowercase scientific notation; ``undefined`` for missing values."""
    if value is None or isinstance(value, str):
        return UNDEFINED if value is None else value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not math.isfinite(value):
        return UNDEFINED
    return f"{value:.16e}"


def _json_value(value):
    if value is None:
        return UNDEFINED
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else UNDEFINED
    return value


def _dump_json(payload) -> str:
    return json.dumps(_json_value(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    return path


def write_json(path: Path, payload) -> Path:
    return _write_text(path, _dump_json(payload))


def write_table(out: Path, stem: str, columns, rows, fmt: str) -> Path:
    """One table as ``stem.csv`` (header row, LF) or ``stem.json`` (columns + rows)."""
    if fmt == "json":
        return write_json(out / f"{stem}.json", {"columns": list(columns), "rows": [list(r) for r in rows]})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return _write_text(out / f"{stem}.csv", buf.getvalue())


def density_payload(rho: DensityMatrix) -> dict:
    """``{dim, data: [[re, im], ...]}`` in row-major order."""
    flat = rho.data.reshape(-1)
    payload = {"dim": rho.dim, "data": [[float(z.real), float(z.imag)] for z in flat]}
    if rho.mode_dims is not None:
        payload["mode_dims"] = list(rho.mode_dims)
    return payload


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _maybe(fn, *args):
    """``fn(*args)``, or None when the quantity is undefined or unreliable."""
    try:
        return fn(*args)
    except (UndefinedError, TruncationError):
        return None


# ---------------------------------------------------------------- r grids

def parse_r_grid(tokens) -> list[float]:
    """Accepts ``0,0.5,1`` lists and inclusive ``start:stop:step`` ranges."""
    values = []
    for token in tokens:
        for part in str(token).split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                try:
                    start, stop, step = (float(x) for x in part.split(":"))
                except ValueError as exc:
                    raise ConfigError(f"bad range {part!r}; expected start:stop:step") from exc
                if step <= 0 or stop < start:
                    raise ConfigError(f"bad range {part!r}")
                count = int(math.floor((stop - start) / step + 1e-9)) + 1
                values.extend(round(start + i * step, 12) for i in range(count))
            else:
                try:
                    values.append(float(part))
                except ValueError as exc:
                    raise ConfigError(f"bad r value {part!r}") from exc
    if not values:
        raise ConfigError("empty r grid")
    for r in values:
        if not math.isfinite(r) or r < 0 or r > oracle.R_MAX:
            raise ConfigError(f"r = {r} outside [0, {oracle.R_MAX}]")
    return values


# ---------------------------------------------------------------- commands

def solve_steady(cfg: RunConfig, which: str):
    """Steady state of the configured model from the ground state."""
    p = cfg.model_params()
    if which == "full":
        gen = full_generator(p)
        rho0 = DensityMatrix(np.kron(fock_dm(p.dim_cavity, 0).data, fock_dm(p.dim_mech, 0).data),
                             mode_dims=(p.dim_cavity, p.dim_mech))
    else:
        # gamma = 0: drive D[J] at 4 g2^2 / kappa, time in units of 1/kappa
        gen = effective_generator(p, None if p.gamma > 0 else p.effective_rate)
        rho0 = fock_dm(p.dim_mech, 0)
    n = cfg.numerics
    t_cap = n.t_cap if n.t_cap is not None else default_t_cap(p, which)
    result = steady_state(gen, rho0, stop_tol=n.stop_tol, t_cap=t_cap, method=n.method,
                          dt_max=n.dt_max, full_output=True)
    return p, gen, result, t_cap


def steady_observables(p, rho_mech: DensityMatrix, rho_cavity: DensityMatrix | None = None) -> dict:
    sq = p.squeeze
    dy = _maybe(y_variances_numeric, rho_mech, sq.theta)
    ket = oracle.steady_ket(rho_mech.dim, sq.r, sq.theta, check_tail=False)
    obs = {
        "n_bar": mean_number(rho_mech),
        "g2_zero": _maybe(g2_from_state, rho_mech),
        "dY1": dy[0] if dy else None,
        "dY2": dy[1] if dy else None,
        "bound": dy[2] if dy else None,
        "purity": purity(rho_mech),
        "fidelity_oracle": fidelity_ket(ket, rho_mech),
        "oracle_n_bar": oracle.mean_phonon(sq.r),
    }
    if rho_cavity is not None:
        # cavity dissipator D[mu a - nu a^dag]: its dark state is squeezed along theta + pi
        cav = squeezed_vacuum_ket(rho_cavity.dim, sq.r, sq.theta + math.pi, check_tail=False)
        obs["fidelity_cavity_squeezed_vacuum"] = fidelity_ket(cav, rho_cavity)
    return obs


def cmd_steady(cfg: RunConfig, which: str) -> list[Path]:
    out, fmt = Path(cfg.output.directory), cfg.output.format
    p, gen, result, t_cap = solve_steady(cfg, which)
    written = []
    if which == "full":
        rho_mech = partial_trace(result.rho, "b")
        rho_cav = partial_trace(result.rho, "a")
        # the joint state is large; the two marginals are written instead
        written.append(write_json(out / "steady_full_rho_mech.json", density_payload(rho_mech)))
        written.append(write_json(out / "steady_full_rho_cavity.json", density_payload(rho_cav)))
    else:
        rho_mech, rho_cav = result.rho, None
        written.append(write_json(out / "steady_effective_rho.json", density_payload(rho_mech)))
    pops = populations(rho_mech)
    written.append(write_table(out, f"steady_{which}_populations", ("n", "P_n"),
                               [(n, max(float(v), 0.0)) for n, v in enumerate(pops)], fmt))
    obs = steady_observables(p, rho_mech, rho_cav)
    obs.update({
        "model": which,
        "residual": result.residual,
        "method": result.method,
        "steps": result.steps,
        "t_elapsed": result.elapsed,
        "t_cap": t_cap,
        "time_unit": gen.info.get("time_unit"),
        "dim_mech": p.dim_mech,
        "r": p.squeeze.r,
        "theta": p.squeeze.theta,
    })
    if which == "full":
        obs["dim_cavity"] = p.dim_cavity
    written.append(write_json(out / f"steady_{which}_observables.json", obs))
    regime = dict(gen.info.get("regime", {}))
    regime["warnings"] = list(gen.info.get("warnings", []))
    written.append(write_json(out / f"steady_{which}_regime.json", regime))
    return written


def oracle_rows(r_grid):
    rows = []
    for r in r_grid:
        dy1, dy2, bound = oracle.y_variances(r)
        rows.append((r, oracle.mean_phonon(r), _maybe(oracle.g2_zero, r), dy1, dy2, bound))
    return rows


ORACLE_COLUMNS = ("r", "n_bar", "g2_zero", "dY1", "dY2", "bound")


def _populations_rows(r):
    dist = oracle.phonon_distribution(r)
    return [(n, float(v)) for n, v in enumerate(dist.probabilities)]


def cmd_oracle(cfg: RunConfig, r_grid) -> list[Path]:
    out, fmt = Path(cfg.output.directory), cfg.output.format
    written = [write_table(out, "oracle_summary", ORACLE_COLUMNS, oracle_rows(r_grid), fmt)]
    for r in r_grid:
        written.append(write_table(out, f"oracle_populations_r{r:.4f}", ("n", "P_n"), _populations_rows(r), fmt))
    return written


def wigner_state(cfg: RunConfig, source: str):
    """Single-mode state and its mean phonon number for the chosen source."""
    m = cfg.model
    if source == "oracle":
        ket = oracle.steady_ket(oracle.default_ket_dim(m.r), m.r, m.theta)
        return ket, oracle.mean_phonon(m.r)
    _, _, result, _ = solve_steady(cfg, "effective")
    return result.rho, mean_number(result.rho)


def wigner_payload(state, n_bar, cfg: RunConfig):
    w = cfg.wigner
    x_max = w.x_max if w.x_max is not None else default_x_max(n_bar)
    grid = wigner_grid(state, x_max, w.n_points)
    neg = negativity(grid)
    meta = {
        "r": cfg.model.r,
        "theta": cfg.model.theta,
        "x_max": x_max,
        "n_points": w.n_points,
        "cell_area": grid.cell_area,
        "min_W": neg["min_value"],
        "negative_volume": neg["negative_volume"],
        "fourfold_defect": fourfold_defect(grid),
        "normalization": grid.total(),
        "contour_levels": list(CONTOUR_LEVELS),
        "coordinates": "dimensionless quadratures, alpha = (x + i p) / sqrt(2)",
    }
    return grid, meta


def _grid_rows(grid):
    return [(float(x), float(p), float(grid.values[i, j]))
            for i, x in enumerate(grid.xs) for j, p in enumerate(grid.ps)]


def cmd_wigner(cfg: RunConfig, source: str) -> list[Path]:
    out, fmt = Path(cfg.output.directory), cfg.output.format
    state, n_bar = wigner_state(cfg, source)
    grid, meta = wigner_payload(state, n_bar, cfg)
    meta["source"] = source
    return [
        write_table(out, f"wigner_{source}", ("x", "p", "W"), _grid_rows(grid), fmt),
        write_json(out / f"wigner_{source}_meta.json", meta),
    ]


def cmd_figures(cfg: RunConfig) -> list[Path]:
    """Seven figure datasets and ``manifest.json``."""
    out, fmt = Path(cfg.output.directory), cfg.output.format
    r_grid = parse_r_grid([FIG_R_GRID])
    summary = oracle_rows(r_grid)
    datasets = [
        write_table(out, "fig1_populations_r2", ("n", "P_n"), _populations_rows(FIG1_R), fmt),
        write_table(out, "fig1_inset_mean_phonon", ("r", "n_bar", "g2_zero"),
                    [(r, n, g) for r, n, g, *_ in summary], fmt),
        write_table(out, "fig2_variances", ("r", "dY1", "dY2", "sqrt_bound", "bound"),
                    [(r, d1, d2, math.sqrt(b), b) for r, _, _, d1, d2, b in summary], fmt),
    ]
    wigner_meta = {}
    for r, theta, tag in FIG3_STATES:
        sub = cfg.override("model", r=r, theta=theta)
        state, n_bar = wigner_state(sub, "oracle")
        grid, meta = wigner_payload(state, n_bar, sub)
        datasets.append(write_table(out, f"fig3_wigner_{tag}", ("x", "p", "W"), _grid_rows(grid), fmt))
        wigner_meta[tag] = meta
    manifest = {
        "schema_version": 1,
        "tool_version": __version__,
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "files": [{"name": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size} for p in datasets],
        "contour_levels": list(CONTOUR_LEVELS),
        "wigner": wigner_meta,
    }
    return datasets + [write_json(out / "manifest.json", manifest)]


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="strict JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.directory)")
    common.add_argument("--format", choices=("csv", "json"), help="table format (overrides output.format)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--r", type=float, help="squeeze strength")
    model.add_argument("--theta", type=float, help="squeeze phase in radians")
    model.add_argument("--g2", type=float)
    model.add_argument("--kappa", type=float)
    model.add_argument("--gamma", type=float)
    model.add_argument("--n-th", type=float)
    model.add_argument("--dim-cavity", type=int)
    model.add_argument("--dim-mech", type=int)
    model.add_argument("--t-cap", type=float)
    model.add_argument("--stop-tol", type=float)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--x-max", type=float)
    grid.add_argument("--n-points", type=int)

    parser = argparse.ArgumentParser(prog="simulate", description="Four-phonon dark-state simulator and closed-form oracle.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", parents=[common, model], help="numerical steady state")
    p.add_argument("--model", choices=("full", "effective"), required=True)
    p = sub.add_parser("oracle", parents=[common], help="closed-form statistics on an r grid")
    p.add_argument("--r-grid", nargs="+", required=True, metavar="R",
                   help="values or start:stop:step ranges, comma or space separated")
    p = sub.add_parser("wigner", parents=[common, model, grid], help="Wigner grid of the steady state")
    p.add_argument("--source", choices=("oracle", "numeric"), default="oracle")
    sub.add_parser("figures", parents=[common, grid], help="all figure datasets and a manifest")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    cfg = cfg.override("output", directory=args.out, format=args.format)
    get = lambda name: getattr(args, name, None)  # noqa: E731
    cfg = cfg.override("model", r=get("r"), theta=get("theta"), g2=get("g2"), kappa=get("kappa"),
                       gamma=get("gamma"), n_th=get("n_th"))
    cfg = cfg.override("numerics", dim_cavity=get("dim_cavity"), dim_mech=get("dim_mech"),
                       t_cap=get("t_cap"), stop_tol=get("stop_tol"))
    cfg = cfg.override("wigner", x_max=get("x_max"), n_points=get("n_points"))
    return cfg


def run(args) -> list[Path]:
    cfg = resolve_config(args)
    if args.command == "steady":
        return cmd_steady(cfg, args.model)
    if args.command == "oracle":
        return cmd_oracle(cfg, parse_r_grid(args.r_grid))
    if args.command == "wigner":
        return cmd_wigner(cfg, args.source)
    return cmd_figures(cfg)


def _fail(kind: str, exc: BaseException, code: int, **extra) -> int:
    payload = {"error": kind, "message": str(exc), "exit_code": code, **extra}
    sys.stderr.write(_dump_json(payload))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        written = run(args)
    except ConvergenceError as exc:
        return _fail(type(exc).__name__, exc, exc.exit_code, residual=exc.residual)
    except FourPhononError as exc:
        return _fail(type(exc).__name__, exc, exc.exit_code)
    except (ValueError, OSError) as exc:
        return _fail(type(exc).__name__, exc, 2)
    except Exception as exc:  # noqa: BLE001
        return _fail(type(exc).__name__, exc, 4)
    summary = {"command": args.command, "files": [str(p) for p in written],
               "seconds": round(time.perf_counter() - start, 3)}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
