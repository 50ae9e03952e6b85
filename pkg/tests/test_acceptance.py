"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  The small-field study records its minimum-|D|
floor into tests/golden/b_to_zero_floor.json on the first verified run and
regresses against it afterwards.
"""

import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

import scipy.linalg

from mhdstab.cli import main as cli_main
from mhdstab.thermo import IdealGas, ThermoState
from mhdstab.symbol import (
    assemble_full_symbol,
    assemble_tilde_symbol,
    boundary_matrix,
    symmetrizer,
)
from mhdstab.charstruct import (
    BoundaryFrame,
    Classification,
    adapted_block_matrix,
    char_poly_reduced,
    classify,
    eigenvalues,
    wave_speeds,
)
from mhdstab.lopatinski import (
    BoundaryFrequency,
    BoundaryOperator,
    GasShockSpec,
    HemisphereGrid,
    assemble_G,
    b_to_zero_study,
    lopatinski_det,
    stable_subspace,
)

from conftest import random_state, random_xi
from test_symbol import fd_symbol

GOLDEN_DIR = Path(__file__).parent / "golden"
GAS = IdealGas(R=1.0, c_v=1.5)

SIMPLE = Classification.SIMPLE
GEOM = Classification.GEOMETRICALLY_REGULAR
TOTAL = Classification.TOTALLY_NONGLANCING
NOT = Classification.NOT_CLASSIFIED


@contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] criterion {number} ({title}): FAIL")
        raise
    print(f"\n[ACCEPTANCE] criterion {number} ({title}): PASS")


@pytest.fixture(scope="module")
def sample_10k():
    rng = np.random.default_rng(20240801)
    return [(random_state(rng), random_xi(rng)) for _ in range(10_000)]


def test_criterion_1_closed_form_vs_numeric_spectrum(sample_10k):
    with criterion(1, "closed-form vs numeric spectrum, 1e-8, < 30 s"):
        start = time.time()
        worst = 0.0
        for state, xi in sample_10k:
            roots = eigenvalues(state, GAS, xi)
            assert sum(r.multiplicity for r in roots) == 8
            closed = np.sort(np.concatenate(
                [[r.lam] * r.multiplicity for r in roots]))
            numeric = np.sort(np.linalg.eigvals(
                assemble_full_symbol(state, GAS, xi)).real)
            scale = max(float(np.max(np.abs(closed))), 1e-300)
            worst = max(worst, float(np.max(np.abs(closed - numeric))) / scale)
        elapsed = time.time() - start
        assert worst <= 1e-8, f"worst relative spectrum error {worst:.3e}"
        assert elapsed < 30.0, f"runtime {elapsed:.1f}s exceeds 30s target"
        print(f"  worst relative error {worst:.3e} over 10^4 samples "
              f"in {elapsed:.1f}s", end="")


def test_criterion_2_wave_speed_identities(sample_10k):
    with criterion(2, "wave-speed identities at 1e-12, ordering exact"):
        for state, xi in sample_10k:
            ws = wave_speeds(state, GAS, xi)
            s2 = max(ws.c_f**2, 1e-300)
            assert abs(ws.c_f**2 * ws.c_s**2 - ws.a**2 * ws.c0**2) <= 1e-12 * s2 * s2
            assert abs(ws.c_f**2 + ws.c_s**2 - (ws.c0**2 + ws.h**2)) <= 1e-12 * s2
            tol = 1e-12 * ws.c_f
            assert ws.c_s <= abs(ws.a) + tol
            assert abs(ws.a) <= ws.c_f + tol
            assert ws.c_s <= ws.c0 + tol
            assert ws.c0 <= ws.c_f + tol


def test_criterion_3_symbol_oracle_and_symmetrizer():
    with criterion(3, "finite-difference symbol oracle and symmetrizer"):
        rng = np.random.default_rng(20240802)
        worst_fd = 0.0
        worst_sym = 0.0
        for _ in range(1000):
            state = random_state(rng)
            xi = random_xi(rng)
            A_full = assemble_full_symbol(state, GAS, xi)
            A_fd = fd_symbol(GAS, state, xi)
            scale = max(np.linalg.norm(A_full), 1e-300)
            worst_fd = max(worst_fd, np.linalg.norm(A_fd - A_full) / scale)
            tilde = assemble_tilde_symbol(state, GAS, xi)
            shift = float(state.u @ xi) * np.eye(8)
            assert np.linalg.norm((A_fd - shift) - tilde) <= 1e-6 * scale

            SA = symmetrizer(state, GAS) @ A_full
            sa_scale = max(np.linalg.norm(SA), 1e-300)
            worst_sym = max(worst_sym, np.linalg.norm(SA - SA.T) / sa_scale)
        assert worst_fd <= 1e-6, f"worst FD mismatch {worst_fd:.3e}"
        assert worst_sym <= 1e-13, f"worst symmetry defect {worst_sym:.3e}"
        print(f"  FD worst {worst_fd:.2e}, symmetry worst {worst_sym:.2e}",
              end="")


def _suite_base_state(rng, sub_field: bool):
    """Admissible state with |B|^2 strictly away from rho c0^2."""
    while True:
        rho = 10.0 ** rng.uniform(-1, 1)
        theta = 10.0 ** rng.uniform(-1, 1)
        u = rng.uniform(-2.0, 2.0, 3)
        c0_sq = (1.0 + 1.0 / 1.5) * 1.0 * theta  # ideal gas, R = 1
        b_crit = math.sqrt(rho * c0_sq)
        frac = rng.uniform(0.15, 0.75) if sub_field else rng.uniform(1.3, 3.0)
        b_dir = rng.standard_normal(3)
        b_dir /= np.linalg.norm(b_dir)
        state = ThermoState(rho=rho, u=u, theta=theta, B=frac * b_crit * b_dir)
        ws = wave_speeds(state, GAS, b_dir)
        if abs(np.linalg.norm(state.B) ** 2 - rho * ws.c0**2) > 0.05 * rho * ws.c0**2:
            return state


def test_criterion_4_lemma_classification_suite():
    with criterion(4, "designed classification suite, zero errors"):
        rng = np.random.default_rng(20240803)
        errors = 0
        n_each = 334

        # case (a): generic points -> 6 simple + one double geometrically regular
        for _ in range(n_each):
            state = _suite_base_state(rng, sub_field=bool(rng.integers(2)))
            while True:
                xi = random_xi(rng)
                xh = xi / np.linalg.norm(xi)
                if (abs(xh @ state.B) > 0.05 * np.linalg.norm(state.B)
                        and np.linalg.norm(np.cross(xh, state.B))
                        > 0.05 * np.linalg.norm(state.B)):
                    break
            roots, regime = classify(state, GAS, xi)
            simple = [r for r in roots if r.classification is SIMPLE]
            doubles = [r for r in roots if r.multiplicity == 2]
            ok = (regime.case == "a" and len(simple) == 6 and len(doubles) == 1
                  and doubles[0].classification is GEOM)
            errors += not ok

        # case (b): xi . B = 0 -> mult-6 root with 6 independent eigenvectors
        for _ in range(n_each):
            state = _suite_base_state(rng, sub_field=bool(rng.integers(2)))
            b_hat = state.B / np.linalg.norm(state.B)
            while True:
                v = rng.standard_normal(3)
                v -= (v @ b_hat) * b_hat
                if np.linalg.norm(v) > 1e-3:
                    xi = v / np.linalg.norm(v) * 10.0 ** rng.uniform(-1, 1)
                    break
            roots, regime = classify(state, GAS, xi)
            big = [r for r in roots if r.multiplicity == 6]
            ok = (regime.case == "b" and len(big) == 1
                  and big[0].classification is GEOM
                  and sum(r.classification is SIMPLE for r in roots) == 2)
            if ok:  # independent eigenvector-count witness
                A = assemble_full_symbol(state, GAS, xi)
                S = symmetrizer(state, GAS)
                w = scipy.linalg.eigh(S @ A, S, eigvals_only=True)
                band = 1e-6 * np.linalg.norm(xi) * max(
                    wave_speeds(state, GAS, xi).c_f, 1.0)
                ok = int(np.sum(np.abs(w - big[0].lam) <= band)) == 6
            errors += not ok

        # case (c): xi x B = 0, |B|^2 < rho c0^2 -> paired doubles; the
        # glancing verdict flips with the frame condition
        for i in range(n_each):
            state = _suite_base_state(rng, sub_field=True)
            b_hat = state.B / np.linalg.norm(state.B)
            xi = b_hat * 10.0 ** rng.uniform(-1, 1) * rng.choice([-1.0, 1.0])
            d = int(rng.integers(1, 4))
            alf = state.B[d - 1] / math.sqrt(state.rho)
            u_d = state.u[d - 1]
            hold_condition = i % 2 == 0
            if hold_condition:
                while True:
                    sigma = rng.uniform(-3.0, 3.0)
                    if min(abs(u_d - sigma - alf), abs(u_d - sigma + alf)) > 0.05:
                        break
            else:
                sigma = u_d - alf if rng.integers(2) else u_d + alf
            roots, regime = classify(state, GAS, xi,
                                     boundary=BoundaryFrame(axis=d, sigma=sigma))
            doubles = [r for r in roots
                       if r.multiplicity == 2 and "entropy" not in r.families]
            entropy = [r for r in roots
                       if r.multiplicity == 2 and "entropy" in r.families]
            ok = (regime.case == "c" and len(doubles) == 2 and len(entropy) == 1
                  and entropy[0].classification is GEOM
                  and doubles[0].lam != doubles[1].lam
                  and sum(r.classification is SIMPLE for r in roots) == 2)
            expected = TOTAL if hold_condition else NOT
            ok = ok and all(r.classification is expected for r in doubles)
            errors += not ok

        assert errors == 0, f"{errors} classification errors in the designed suite"
        print(f"  {3 * n_each} designed points, 0 errors", end="")


def test_criterion_5_block_matrix_consistency():
    with criterion(5, "block-matrix determinant and zero-eigenspace"):
        rng = np.random.default_rng(20240804)
        n_rank_checked = 0
        for _ in range(1000):
            state = random_state(rng)
            xi = random_xi(rng)
            ws = wave_speeds(state, GAS, xi)
            coeffs = char_poly_reduced(state, GAS, xi)
            scale = max(ws.c_f, 1.0)
            for x in rng.uniform(-2.0, 2.0, 3) * scale:
                M = adapted_block_matrix(state, GAS, xi, x)
                err = abs(np.linalg.det(M) - np.polyval(coeffs, x))
                assert err <= 1e-10 * scale**8
            if abs(ws.a) > 1e-3 * scale:
                M0 = adapted_block_matrix(state, GAS, xi, 0.0)
                s = np.linalg.svd(M0, compute_uv=False)
                assert int(np.sum(s < 1e-10 * s[0])) == 2
                n_rank_checked += 1
        assert n_rank_checked > 500
        print(f"  1000 determinant checks, {n_rank_checked} rank checks", end="")


def test_criterion_6_lopatinski_machinery():
    with criterion(6, "stable-subspace dimension, |D| invariances"):
        state = ThermoState(rho=1.0, u=[0.2, -0.1, 0.9], theta=1.0,
                            B=[0.3, 0.1, 0.2])
        A_d, ok = boundary_matrix(state, GAS, 3)
        assert ok
        a_d_inv = np.linalg.inv(A_d)
        expected = int(np.sum(np.linalg.eigvals(A_d).real > 0))

        rng = np.random.default_rng(20240805)
        E_ref = None
        for _ in range(1000):
            zf = BoundaryFrequency(rng.standard_normal(),
                                   rng.uniform(1e-3, 1.0),
                                   rng.standard_normal(2)).normalized()
            G = assemble_G(state, GAS, 3, zf)
            E = stable_subspace(G, zf.gamma_L, a_d_inv=a_d_inv)
            assert E.shape[1] == expected
            E_ref = E

        # |D| basis invariance and dual-algorithm agreement
        k = E_ref.shape[1]
        M = BoundaryOperator.from_matrix(
            rng.standard_normal((k, 8)) + 1j * rng.standard_normal((k, 8)))
        base = lopatinski_det(E_ref, M)
        for _ in range(50):
            Q, _ = np.linalg.qr(rng.standard_normal((k, k))
                                + 1j * rng.standard_normal((k, k)))
            res = lopatinski_det(E_ref @ Q, M)
            assert abs(res.abs_D - base.abs_D) <= 1e-12
            assert res.diagnostics["algorithm_disagreement"] <= 1e-12

        # constructed unit and zero cases
        unit = lopatinski_det(E_ref, BoundaryOperator.from_matrix(E_ref.conj().T))
        assert abs(unit.abs_D - 1.0) <= 1e-12
        kernel = E_ref[:, :1]
        q, _ = np.linalg.qr(np.hstack([kernel, np.eye(8, dtype=complex)[:, :7]]))
        zero = lopatinski_det(E_ref, BoundaryOperator.from_matrix(q[:, 1:8].conj().T))
        assert zero.abs_D <= 1e-12
        print(f"  dim E_minus = {expected} constant over 10^3 frequencies",
              end="")


def test_criterion_7_b_to_zero_study():
    with criterion(7, "B -> 0 shock study, positive floor, convergence"):
        start = time.time()
        spec = GasShockSpec(rho=1.0, theta=1.0, mach=2.0, axis=3,
                            b_direction=(1.0, 0.0, 0.0))
        b_values = [1e-1, 1e-2, 1e-3, 0.0]
        grid = HemisphereGrid()  # 10^4 interior points + refined equator

        study = b_to_zero_study(GAS, spec, b_values, grid)
        rows = {r.B_mag: r for r in study.rows}
        assert all(r.min_abs_D > 0.0 for r in study.rows)
        assert all(r.n_failures == 0 for r in study.rows)
        assert study.deviations_monotone, (
            "deviations from the B = 0 floor must decrease with |B|")
        ref = study.reference_min_abs_D
        for b in (1e-2, 1e-3):
            assert rows[b].min_abs_D > 0.5 * ref

        refined = b_to_zero_study(GAS, spec, b_values, grid.refined(2))
        for row, row_ref in zip(study.rows, refined.rows):
            rel = abs(row.min_abs_D - row_ref.min_abs_D) / row_ref.min_abs_D
            assert rel <= 0.05, (
                f"min |D| at |B| = {row.B_mag} moved {rel:.2%} under refinement")

        elapsed = time.time() - start
        assert elapsed < 600.0, f"runtime {elapsed:.0f}s exceeds 10 min target"

        golden_path = GOLDEN_DIR / "b_to_zero_floor.json"
        payload = {
            "grid": grid.describe(),
            "rows": [{"B": r.B_mag, "min_abs_D": r.min_abs_D}
                     for r in study.rows],
            "rtol": 1e-3,
        }
        if not golden_path.exists():
            GOLDEN_DIR.mkdir(exist_ok=True)
            golden_path.write_text(json.dumps(payload, indent=2, sort_keys=True)
                                   + "\n")
            print(f"  recorded golden floor file on first verified run "
                  f"({elapsed:.0f}s)", end="")
        else:
            golden = json.loads(golden_path.read_text())
            assert golden["grid"] == payload["grid"]
            for got, want in zip(payload["rows"], golden["rows"]):
                assert got["B"] == want["B"]
                assert_allclose(got["min_abs_D"], want["min_abs_D"],
                                rtol=golden["rtol"])
            print(f"  matches golden floor within rtol {golden['rtol']} "
                  f"({elapsed:.0f}s)", end="")


def test_criterion_8_cli_byte_determinism(tmp_path):
    with criterion(8, "CLI byte-determinism for every command"):
        gas_cfg = {"kind": "ideal-gas", "R": 1.0, "c_v": 1.5}
        small_grid = {"n_phi": 3, "n_sphere": 40, "equator_refine": 2}
        configs = {
            "speeds": {
                "eos": gas_cfg,
                "states": {"random": {"count": 5, "seed": 3}},
                "frequencies": {"random": {"count": 4, "seed": 4}},
            },
            "classify": {
                "eos": gas_cfg,
                "states": [{"rho": 1.0, "u": [0, 0, 0], "theta": 1.0,
                            "B": [1, 0, 0]}],
                "frequencies": [[1, 0, 0], [0, 1, 0], [0.5, 1, 0.25]],
                "boundary": {"axis": 3, "sigma": 0.5},
            },
            "scan": {
                "eos": gas_cfg,
                "grid": small_grid,
                "shock": {"upstream": {"rho": 1.0, "u": [0, 0, 0],
                                       "theta": 1.0, "B": [0.02, 0, 0]},
                          "family": "fast", "mach": 2.0, "axis": 3},
            },
            "shock-study": {
                "eos": gas_cfg,
                "grid": small_grid,
                "polish_rounds": 3,
                "gas_shock": {"rho": 1.0, "theta": 1.0, "mach": 2.0,
                              "axis": 3, "b_direction": [1, 0, 0]},
                "B_values": [1e-1, 0.0],
            },
        }
        for command, cfg in configs.items():
            cfg_path = tmp_path / f"{command}.json"
            cfg_path.write_text(json.dumps(cfg))
            outs = []
            for run_idx in (1, 2):
                out = tmp_path / f"{command}_{run_idx}"
                code = cli_main([command, "--config", str(cfg_path),
                                 "--out", str(out)])
                assert code == 0, f"{command} exited {code}"
                outs.append(out)
            files1 = sorted(p.name for p in outs[0].iterdir())
            files2 = sorted(p.name for p in outs[1].iterdir())
            assert files1 == files2 and files1
            for name in files1:
                b1 = (outs[0] / name).read_bytes()
                b2 = (outs[1] / name).read_bytes()
                assert b1 == b2, f"{command}/{name} differs between runs"
        print("  4 commands x 2 runs byte-identical", end="")
