"""Command-line front end: config-driven sweeps and reports.

Commands
--------
speeds       wave-speed table for a sweep of (state, xi) pairs -> speeds.csv
classify     eigenvalue classification records -> classify.json
scan         Lopatinski hemisphere scan (boundary or shock) -> scan.csv/json
shock-study  small-magnetic-field limit study -> study.csv/json

Every run is fully determined by one JSON config file; outputs contain no
timestamps and numbers are written with 17 significant digits, so repeated
runs are byte-identical.  Exit codes: 0 success, 1 science failures
recorded in the outputs (suppressed by --allow-partial), 2 config or
usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .charstruct import BoundaryFrame, classification_record, classify, wave_speeds
from .errors import CharacteristicBoundary, ConfigError, MhdStabError
from .lopatinski import (
    BoundaryFrequency,
    BoundaryOperator,
    GasShockSpec,
    HemisphereGrid,
    PlanarShock,
    ScanResult,
    assemble_G,
    b_to_zero_study,
    rankine_hugoniot,
    shock_scan,
    stable_subspace,
    uniform_scan,
)
from .symbol import assemble_tilde_symbol, boundary_matrix
from .thermo import EquationOfState, ThermoState, eos_from_dict

SCHEMA_VERSION = 1

_DEFAULT_TOLS = {
    "tol_merge": 1e-9,
    "tol_manifold": 1e-9,
    "tol_det": 1e-10,
    "eps_cont": 1e-6,
}


# ----------------------------------------------------------------------------
# Config loading and validation
# ----------------------------------------------------------------------------

def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _expect_dict(cfg, path: str) -> dict:
    if not isinstance(cfg, dict):
        _fail(path, f"expected an object, got {type(cfg).__name__}")
    return cfg


def _expect_list(cfg, path: str) -> list:
    if not isinstance(cfg, list):
        _fail(path, f"expected an array, got {type(cfg).__name__}")
    return cfg


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _expect_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {type(value).__name__}")
    return int(value)


def _get(cfg: dict, key: str, path: str, required: bool = True, default=None):
    if key not in cfg:
        if required:
            _fail(path, f"missing required field '{key}'")
        return default
    return cfg[key]


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    return _expect_dict(cfg, str(path))


def _parse_eos(cfg: dict, path: str = "eos") -> EquationOfState:
    d = _expect_dict(_get(cfg, "eos", "config"), path)
    try:
        return eos_from_dict(d)
    except (KeyError, ValueError) as exc:
        _fail(path, str(exc))


def _parse_tolerances(cfg: dict) -> dict:
    tols = dict(_DEFAULT_TOLS)
    raw = cfg.get("tolerances")
    if raw is None:
        return tols
    raw = _expect_dict(raw, "tolerances")
    for key, value in raw.items():
        if key not in tols:
            _fail(f"tolerances.{key}", "unknown tolerance")
        v = _expect_number(value, f"tolerances.{key}")
        if v <= 0.0:
            _fail(f"tolerances.{key}", f"must be positive, got {v}")
        tols[key] = v
    return tols


def _parse_vec3(value, path: str) -> np.ndarray:
    arr = _expect_list(value, path)
    if len(arr) != 3:
        _fail(path, f"expected 3 components, got {len(arr)}")
    return np.array([_expect_number(v, f"{path}[{i}]") for i, v in enumerate(arr)])


def _parse_state(value, path: str) -> ThermoState:
    d = _expect_dict(value, path)
    try:
        return ThermoState(
            rho=_expect_number(_get(d, "rho", path), f"{path}.rho"),
            u=_parse_vec3(_get(d, "u", path, required=False, default=[0, 0, 0]),
                          f"{path}.u"),
            theta=_expect_number(_get(d, "theta", path), f"{path}.theta"),
            B=_parse_vec3(_get(d, "B", path, required=False, default=[0, 0, 0]),
                          f"{path}.B"),
        )
    except MhdStabError as exc:
        _fail(path, str(exc))


def _parse_states(cfg: dict, path: str = "states") -> list[ThermoState]:
    raw = _get(cfg, "states", "config")
    if isinstance(raw, dict):
        spec = _expect_dict(raw.get("random"), f"{path}.random")
        count = _expect_int(_get(spec, "count", f"{path}.random"), f"{path}.random.count")
        seed = _expect_int(_get(spec, "seed", f"{path}.random"), f"{path}.random.seed")
        if count < 1:
            _fail(f"{path}.random.count", "must be >= 1")
        rng = np.random.default_rng(seed)
        states = []
        for _ in range(count):
            states.append(ThermoState(
                rho=10.0 ** rng.uniform(-2, 2),
                u=rng.uniform(-1.0, 1.0, 3) * rng.uniform(0.0, 10.0),
                theta=10.0 ** rng.uniform(-2, 2),
                B=rng.uniform(-1.0, 1.0, 3) * rng.uniform(0.0, 10.0),
            ))
        return states
    raw = _expect_list(raw, path)
    if not raw:
        _fail(path, "state grid must not be empty")
    return [_parse_state(v, f"{path}[{i}]") for i, v in enumerate(raw)]


def _parse_frequencies(cfg: dict, path: str = "frequencies") -> list[np.ndarray]:
    raw = _get(cfg, "frequencies", "config")
    if isinstance(raw, dict):
        spec = _expect_dict(raw.get("random"), f"{path}.random")
        count = _expect_int(_get(spec, "count", f"{path}.random"), f"{path}.random.count")
        seed = _expect_int(_get(spec, "seed", f"{path}.random"), f"{path}.random.seed")
        if count < 1:
            _fail(f"{path}.random.count", "must be >= 1")
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            v = rng.standard_normal(3)
            v /= np.linalg.norm(v)
            out.append(v * 10.0 ** rng.uniform(-1, 1))
        return out
    raw = _expect_list(raw, path)
    if not raw:
        _fail(path, "frequency grid must not be empty")
    xis = [_parse_vec3(v, f"{path}[{i}]") for i, v in enumerate(raw)]
    for i, xi in enumerate(xis):
        if float(np.linalg.norm(xi)) == 0.0:
            _fail(f"{path}[{i}]", "frequency must be nonzero")
    return xis


def _parse_boundary(cfg: dict, required: bool = False) -> BoundaryFrame | None:
    raw = cfg.get("boundary")
    if raw is None:
        if required:
            _fail("boundary", "missing required field 'boundary'")
        return None
    d = _expect_dict(raw, "boundary")
    axis = _expect_int(_get(d, "axis", "boundary"), "boundary.axis")
    if axis not in (1, 2, 3):
        _fail("boundary.axis", f"must be 1, 2 or 3, got {axis}")
    sigma = _expect_number(_get(d, "sigma", "boundary", required=False, default=0.0),
                           "boundary.sigma")
    return BoundaryFrame(axis=axis, sigma=sigma)


def _parse_grid(cfg: dict) -> HemisphereGrid:
    raw = cfg.get("grid")
    if raw is None:
        return HemisphereGrid()
    d = _expect_dict(raw, "grid")
    kwargs = {}
    for key in ("n_phi", "n_sphere", "equator_refine"):
        if key in d:
            v = _expect_int(d[key], f"grid.{key}")
            if v < 1:
                _fail(f"grid.{key}", "must be >= 1")
            kwargs[key] = v
    return HemisphereGrid(**kwargs)


def _parse_zeta(value, path: str) -> BoundaryFrequency:
    d = _expect_dict(value, path)
    eta = _expect_list(_get(d, "eta", path, required=False, default=[0.0, 0.0]),
                       f"{path}.eta")
    if len(eta) != 2:
        _fail(f"{path}.eta", f"expected 2 components, got {len(eta)}")
    try:
        return BoundaryFrequency(
            tau=_expect_number(_get(d, "tau", path), f"{path}.tau"),
            gamma_L=_expect_number(_get(d, "gamma_L", path), f"{path}.gamma_L"),
            eta=[_expect_number(v, f"{path}.eta[{i}]") for i, v in enumerate(eta)],
        )
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_shock(cfg_shock: dict, eos: EquationOfState, path: str = "shock") -> PlanarShock:
    d = _expect_dict(cfg_shock, path)
    upstream = _parse_state(_get(d, "upstream", path), f"{path}.upstream")
    family = _get(d, "family", path, required=False, default="fast")
    mach = _expect_number(_get(d, "mach", path), f"{path}.mach")
    axis = _expect_int(_get(d, "axis", path), f"{path}.axis")
    if axis not in (1, 2, 3):
        _fail(f"{path}.axis", f"must be 1, 2 or 3, got {axis}")
    return rankine_hugoniot(eos, upstream, family=family, mach=mach, d=axis)


# ----------------------------------------------------------------------------
# Deterministic writers
# ----------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_json(path: Path, obj: dict) -> None:
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_speeds(cfg: dict, out: Path, dump_symbols: bool = False) -> int:
    eos = _parse_eos(cfg)
    states = _parse_states(cfg)
    xis = _parse_frequencies(cfg)
    header = ["state_index", "xi_index", "rho", "u1", "u2", "u3", "theta",
              "B1", "B2", "B3", "xi1", "xi2", "xi3",
              "a", "b", "h", "c0", "c_s", "c_f"]
    rows = []
    symbol_rows = []
    for i, state in enumerate(states):
        for j, xi in enumerate(xis):
            ws = wave_speeds(state, eos, xi)
            rows.append([i, j, state.rho, *state.u, state.theta, *state.B,
                         *xi, ws.a, ws.b, ws.h, ws.c0, ws.c_s, ws.c_f])
            if dump_symbols:
                A = assemble_tilde_symbol(state, eos, xi)
                symbol_rows.append([i, j, *A.reshape(-1)])
    write_csv(out / "speeds.csv", header, rows)
    if dump_symbols:
        sym_header = (["state_index", "xi_index"]
                      + [f"A{r+1}{c+1}" for r in range(8) for c in range(8)])
        write_csv(out / "symbols.csv", sym_header, symbol_rows)
    print(f"wrote {len(rows)} rows to {out / 'speeds.csv'}")
    return 0


def cmd_classify(cfg: dict, out: Path) -> int:
    eos = _parse_eos(cfg)
    tols = _parse_tolerances(cfg)
    states = _parse_states(cfg)
    xis = _parse_frequencies(cfg)
    boundary = _parse_boundary(cfg)
    records = []
    n_errors = 0
    for i, state in enumerate(states):
        for j, xi in enumerate(xis):
            record = {"state_index": i, "state": state.to_dict(), "xi_index": j}
            try:
                roots, regime = classify(
                    state, eos, xi, boundary=boundary,
                    tol_merge=tols["tol_merge"],
                    tol_manifold=tols["tol_manifold"])
                record.update(classification_record(xi, roots, regime))
                record["error"] = None
            except MhdStabError as exc:
                record["xi"] = [float(v) for v in np.asarray(xi).reshape(3)]
                record["error"] = {"type": type(exc).__name__, "message": str(exc)}
                n_errors += 1
            records.append(record)
    write_json(out / "classify.json", {
        "boundary": ({"axis": boundary.axis, "sigma": boundary.sigma}
                     if boundary is not None else None),
        "n_records": len(records),
        "n_errors": n_errors,
        "records": records,
    })
    print(f"classified {len(records)} points, {n_errors} errors "
          f"-> {out / 'classify.json'}")
    return 0 if n_errors == 0 else 1


def _build_scan(cfg: dict, eos: EquationOfState, grid, tols, polish_rounds) -> ScanResult:
    has_boundary = "boundary" in cfg
    has_shock = "shock" in cfg
    if has_boundary == has_shock:
        _fail("config", "exactly one of 'boundary' or 'shock' is required for scan")
    if has_shock:
        shock = _parse_shock(cfg["shock"], eos)
        return shock_scan(shock, grid, tol_det=tols["tol_det"],
                          eps_cont=tols["eps_cont"], polish_rounds=polish_rounds)
    b = _expect_dict(cfg["boundary"], "boundary")
    state = _parse_state(_get(b, "state", "boundary"), "boundary.state")
    axis = _expect_int(_get(b, "axis", "boundary"), "boundary.axis")
    if axis not in (1, 2, 3):
        _fail("boundary.axis", f"must be 1, 2 or 3, got {axis}")
    op_spec = _expect_dict(_get(b, "operator", "boundary"), "boundary.operator")
    kind = _get(op_spec, "kind", "boundary.operator")
    if kind == "matrix":
        rows = _expect_list(_get(op_spec, "rows", "boundary.operator"),
                            "boundary.operator.rows")
        M = np.array([[complex(entry[0], entry[1]) for entry in row]
                      for row in rows])
        operator = BoundaryOperator.from_matrix(M)
    elif kind == "frozen-complement":
        zf0 = _parse_zeta(_get(op_spec, "at", "boundary.operator"),
                          "boundary.operator.at")
        A_d, ok = boundary_matrix(state, eos, axis, tol_det=tols["tol_det"])
        if not ok:
            raise CharacteristicBoundary(
                f"boundary x_{axis} = const is characteristic")
        G0 = assemble_G(state, eos, axis, zf0, tol_det=tols["tol_det"])
        E0 = stable_subspace(G0, zf0.gamma_L, a_d_inv=np.linalg.inv(A_d),
                             eps_cont=tols["eps_cont"])
        operator = BoundaryOperator.from_matrix(E0.conj().T)
    else:
        _fail("boundary.operator.kind",
              f"unknown kind {kind!r} (expected 'matrix' or 'frozen-complement')")
    return uniform_scan(state, eos, axis, operator, grid,
                        tol_det=tols["tol_det"], eps_cont=tols["eps_cont"],
                        polish_rounds=polish_rounds)


def cmd_scan(cfg: dict, out: Path, refine: int = 1, allow_partial: bool = False) -> int:
    eos = _parse_eos(cfg)
    tols = _parse_tolerances(cfg)
    grid = _parse_grid(cfg)
    polish_rounds = _expect_int(cfg.get("polish_rounds", 6), "polish_rounds")
    conv_tol = _expect_number(cfg.get("convergence_tol", 0.05), "convergence_tol")

    result = _build_scan(cfg, eos, grid, tols, polish_rounds)
    result.write_csv(out / "scan.csv")
    summary = result.summary()

    if refine > 1:
        refined = _build_scan(cfg, eos, grid.refined(refine), tols, polish_rounds)
        refined.write_csv(out / "scan_refined.csv")
        base, fine = result.min_abs_D, refined.min_abs_D
        converged = (base is not None and fine is not None
                     and abs(base - fine) <= conv_tol * max(abs(fine), 1e-300))
        summary["refinement"] = {
            "factor": refine,
            "min_abs_D": [base, fine],
            "convergence_tol": conv_tol,
            "converged": converged,
        }
        print(f"min |D| = {base} -> {fine} under refinement x{refine}: "
              f"{'converged' if converged else 'NOT converged'}")
    write_json(out / "scan.json", summary)

    if result.min_abs_D is not None:
        print(f"min |D| = {result.min_abs_D} at "
              f"{json.dumps(result.argmin.to_dict(), sort_keys=True)}")
    n_fail = len(result.failures)
    if n_fail:
        print(f"{n_fail} per-point failures recorded in scan.json")
    return 0 if (n_fail == 0 or allow_partial) else 1


def cmd_shock_study(cfg: dict, out: Path, refine: int = 1,
                    allow_partial: bool = False) -> int:
    eos = _parse_eos(cfg)
    tols = _parse_tolerances(cfg)
    grid = _parse_grid(cfg)
    polish_rounds = _expect_int(cfg.get("polish_rounds", 6), "polish_rounds")
    conv_tol = _expect_number(cfg.get("convergence_tol", 0.05), "convergence_tol")

    gs = _expect_dict(_get(cfg, "gas_shock", "config"), "gas_shock")
    axis = _expect_int(_get(gs, "axis", "gas_shock", required=False, default=3),
                       "gas_shock.axis")
    if axis not in (1, 2, 3):
        _fail("gas_shock.axis", f"must be 1, 2 or 3, got {axis}")
    spec = GasShockSpec(
        rho=_expect_number(_get(gs, "rho", "gas_shock"), "gas_shock.rho"),
        theta=_expect_number(_get(gs, "theta", "gas_shock"), "gas_shock.theta"),
        mach=_expect_number(_get(gs, "mach", "gas_shock"), "gas_shock.mach"),
        axis=axis,
        b_direction=tuple(_parse_vec3(
            _get(gs, "b_direction", "gas_shock", required=False,
                 default=[1.0, 0.0, 0.0]), "gas_shock.b_direction")),
    )
    b_values = [_expect_number(v, f"B_values[{i}]")
                for i, v in enumerate(_expect_list(_get(cfg, "B_values", "config"),
                                                   "B_values"))]
    if not b_values:
        _fail("B_values", "must not be empty")

    def run(g) -> "StudyResult":
        return b_to_zero_study(eos, spec, b_values, g,
                               tol_det=tols["tol_det"], eps_cont=tols["eps_cont"],
                               polish_rounds=polish_rounds)

    try:
        study = run(grid)
    except MhdStabError as exc:
        write_json(out / "study.json", {
            "error": {"type": type(exc).__name__, "message": str(exc)}})
        print(f"study failed: {exc}", file=sys.stderr)
        return 1

    payload = study.to_dict()
    if refine > 1:
        refined = run(grid.refined(refine))
        per_row = []
        converged = True
        for row, row_ref in zip(study.rows, refined.rows):
            ok = abs(row.min_abs_D - row_ref.min_abs_D) <= conv_tol * max(
                abs(row_ref.min_abs_D), 1e-300)
            converged = converged and ok
            per_row.append({"B": row.B_mag,
                            "min_abs_D": [row.min_abs_D, row_ref.min_abs_D],
                            "converged": ok})
        payload["refinement"] = {
            "factor": refine, "convergence_tol": conv_tol,
            "rows": per_row, "converged": converged,
        }
        print(f"refinement x{refine}: {'converged' if converged else 'NOT converged'}")
    write_json(out / "study.json", payload)
    write_csv(out / "study.csv",
              ["B", "min_abs_D", "deviation_from_limit", "n_failures"],
              [[r.B_mag, r.min_abs_D, r.deviation, r.n_failures]
               for r in study.rows])
    for r in study.rows:
        print(f"|B| = {r.B_mag:.17g}: min |D| = {r.min_abs_D:.17g} "
              f"(deviation {r.deviation:.3e}, {r.n_failures} failures)")
    n_fail = sum(r.n_failures for r in study.rows)
    return 0 if (n_fail == 0 or allow_partial) else 1


# ----------------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhdstab",
        description="Characteristic structure and Lopatinski stability of full MHD")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("speeds", help="wave-speed table for a (state, xi) sweep")
    add_common(p)
    p.add_argument("--dump-symbols", action="store_true",
                   help="also write the symbol matrices to symbols.csv")

    p = sub.add_parser("classify", help="eigenvalue classification sweep")
    add_common(p)

    p = sub.add_parser("scan", help="Lopatinski hemisphere scan")
    add_common(p)
    p.add_argument("--refine", type=int, default=1, metavar="K",
                   help="also scan at K-fold grid density and report convergence")
    p.add_argument("--allow-partial", action="store_true",
                   help="exit 0 even when per-point failures were recorded")

    p = sub.add_parser("shock-study", help="small-magnetic-field limit study")
    add_common(p)
    p.add_argument("--refine", type=int, default=1, metavar="K")
    p.add_argument("--allow-partial", action="store_true")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "speeds":
            return cmd_speeds(cfg, out, dump_symbols=args.dump_symbols)
        if args.command == "classify":
            return cmd_classify(cfg, out)
        if args.command == "scan":
            if args.refine < 1:
                _fail("--refine", "must be >= 1")
            return cmd_scan(cfg, out, refine=args.refine,
                            allow_partial=args.allow_partial)
        if args.command == "shock-study":
            if args.refine < 1:
                _fail("--refine", "must be >= 1")
            return cmd_shock_study(cfg, out, refine=args.refine,
                                   allow_partial=args.allow_partial)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
