"""Boundary-value stability machinery: reduced ODE symbol, stable subspace,
Lopatinski determinant, hemisphere scans, and planar Lax-shock studies.

Conventions, fixed once here and used consistently:

  * Time modes are e^{(gamma_L + i tau) t}, tangential modes e^{i eta . y},
    so the Laplace-Fourier multiplier of d/dt is s = gamma_L + i tau and
    (tau - i gamma_L) = -i s.
  * On the half-space x_d > 0 the transformed interior equations read
    dU/dx_d + i G U = 0 with G = A_d^{-1}((tau - i gamma_L) I
    + eta_1 A_{t1} + eta_2 A_{t2}); the tangential axes t1 < t2 are the two
    axes different from d in increasing order.
  * E_minus is the invariant subspace of G for {Im mu < 0}: exactly the
    initial traces of solutions decaying as x_d -> +infinity.  For
    gamma_L > 0 its dimension equals the number of positive eigenvalues of
    A_d.  At gamma_L = 0 the subspace is defined by continuation: evaluate
    at gamma_L = eps_cont on the same (tau, eta) and reuse that splitting.
  * |D| is computed from orthonormal bases of E_minus and ker M, making it
    basis independent and confined to [0, 1].

Shock problems are folded to one side by reflection.  A planar shock with
upstream (left, x_d < 0) and downstream (right, x_d > 0) states in the
shock frame gives the doubled generator diag(G_right, -G_left) acting on
the stacked trace (U_right(0), U_left(0)); decay at both infinities selects
E_minus(G_right) + E_plus(G_left).  The linearized jump conditions are

    N_right u_right - N_left u_left - psi_hat * b_f = 0,

with N the normal-flux Jacobians of the conservation laws in
(rho, u, theta, B) variables, b_f = s [q] + i eta . [f_tangential] the
front coefficient, and the degenerate normal-induction row replaced by the
linearized continuity of the normal field across the perturbed front,
[B_d'] - i (eta . [B_tangential]) psi_hat = 0.  The front amplitude is
eliminated by projecting the eight conditions onto the orthogonal
complement of b_f, leaving a rank-7 operator on the 16-dimensional trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import (
    CharacteristicBoundary,
    DimensionMismatch,
    MhdStabError,
    NoAdmissibleShock,
    RankDeficiency,
    SpectralSplitFailure,
)
from .symbol import assemble_full_symbol, boundary_matrix, unit_vector
from .thermo import (
    EquationOfState,
    ThermoState,
    e_rho_consistent,
    eos_from_dict,
    eos_to_dict,
    eval_eos,
)
from .charstruct import wave_speeds

__all__ = [
    "BoundaryFrequency",
    "BoundaryOperator",
    "LopatinskiResult",
    "PlanarShock",
    "GasShockSpec",
    "HemisphereGrid",
    "ExplicitGrid",
    "ScanResult",
    "StudyRow",
    "StudyResult",
    "assemble_G",
    "stable_subspace",
    "lopatinski_det",
    "uniform_scan",
    "rankine_hugoniot",
    "shock_boundary_operator",
    "shock_scan",
    "b_to_zero_study",
    "conserved_vector",
    "flux_vector",
    "flux_jacobian",
    "conserved_jacobian",
]

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


# ----------------------------------------------------------------------------
# Frequency parametrization and grids
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryFrequency:
    """One point zeta = (tau - i gamma_L, eta) of the frequency space.

    Scan grids live on the closed unit hemisphere tau^2 + gamma_L^2 +
    |eta|^2 = 1, gamma_L >= 0; the assembly routines accept any finite
    point since G is linear in zeta.
    """

    tau: float
    gamma_L: float
    eta: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "gamma_L", float(self.gamma_L))
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float).reshape(2))
        if self.gamma_L < 0.0:
            raise ValueError(f"gamma_L must be >= 0, got {self.gamma_L}")

    @property
    def norm(self) -> float:
        return math.sqrt(self.tau**2 + self.gamma_L**2 + float(self.eta @ self.eta))

    def normalized(self) -> "BoundaryFrequency":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero frequency")
        return BoundaryFrequency(self.tau / n, self.gamma_L / n, self.eta / n)

    def scaled(self, s: float) -> "BoundaryFrequency":
        return BoundaryFrequency(self.tau * s, self.gamma_L * s, self.eta * s)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "gamma_L": self.gamma_L,
                "eta": [float(self.eta[0]), float(self.eta[1])]}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryFrequency":
        return cls(tau=d["tau"], gamma_L=d["gamma_L"], eta=d["eta"])


def _fibonacci_sphere(n: int, azimuth_offset: float = 0.0) -> np.ndarray:
    """n nearly uniform points on S^2 as rows (x, y, z); deterministic."""
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * _GOLDEN_ANGLE + azimuth_offset
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@dataclass(frozen=True)
class HemisphereGrid:
    """Deterministic grid on the unit hemisphere {|zeta| = 1, gamma_L >= 0}.

    Interior: n_phi latitude levels gamma_L = cos(psi_j) with a Fibonacci
    sphere of n_sphere points on the (tau, eta) factor at each level.  The
    gamma_L = 0 equator, where uniform-stability failures occur first, gets
    its own Fibonacci sphere refined by equator_refine.
    """

    n_phi: int = 25
    n_sphere: int = 400
    equator_refine: int = 4

    def __post_init__(self):
        if self.n_phi < 1 or self.n_sphere < 1 or self.equator_refine < 1:
            raise ValueError("grid sizes must be >= 1")

    @property
    def n_points(self) -> int:
        return self.n_phi * self.n_sphere + self.equator_refine * self.n_sphere

    def refined(self, k: int) -> "HemisphereGrid":
        return HemisphereGrid(self.n_phi * k, self.n_sphere * k, self.equator_refine)

    def points(self) -> list[BoundaryFrequency]:
        pts: list[BoundaryFrequency] = []
        for j in range(self.n_phi):
            psi = (j + 0.5) / self.n_phi * (0.5 * math.pi)
            gamma = math.cos(psi)
            ring = math.sin(psi)
            sphere = _fibonacci_sphere(self.n_sphere, azimuth_offset=j * 2.399963)
            for x, y, z in sphere:
                pts.append(BoundaryFrequency(ring * z, gamma, (ring * x, ring * y)))
        equator = _fibonacci_sphere(self.equator_refine * self.n_sphere)
        for x, y, z in equator:
            pts.append(BoundaryFrequency(z, 0.0, (x, y)))
        return pts

    def describe(self) -> dict:
        return {"kind": "hemisphere", "n_phi": self.n_phi,
                "n_sphere": self.n_sphere, "equator_refine": self.equator_refine,
                "n_points": self.n_points}


@dataclass(frozen=True)
class ExplicitGrid:
    """A caller-supplied list of frequency points."""

    frequencies: tuple[BoundaryFrequency, ...]

    def __init__(self, frequencies):
        object.__setattr__(self, "frequencies", tuple(frequencies))

    @property
    def n_points(self) -> int:
        return len(self.frequencies)

    def points(self) -> list[BoundaryFrequency]:
        return list(self.frequencies)

    def describe(self) -> dict:
        return {"kind": "explicit", "n_points": self.n_points}


# ----------------------------------------------------------------------------
# Reduced symbol, stable subspace, determinant
# ----------------------------------------------------------------------------

def assemble_G(state: ThermoState, eos: EquationOfState, d: int,
               zf: BoundaryFrequency, tol_det: float = 1e-10) -> np.ndarray:
    """Reduced ODE symbol G = A_d^{-1}((tau - i gamma_L) I + eta . A_t).

    Raises CharacteristicBoundary when |det A_d| falls below the
    scale-relative threshold.
    """
    A_d, ok = boundary_matrix(state, eos, d, tol_det=tol_det)
    if not ok:
        raise CharacteristicBoundary(f"boundary x_{d} = const is characteristic")
    t1, t2 = _tangential_axes(d)
    A_t1 = assemble_full_symbol(state, eos, unit_vector(t1))
    A_t2 = assemble_full_symbol(state, eos, unit_vector(t2))
    rhs = ((zf.tau - 1j * zf.gamma_L) * np.eye(8)
           + zf.eta[0] * A_t1 + zf.eta[1] * A_t2)
    return np.linalg.solve(A_d, rhs)


def _tangential_axes(d: int) -> tuple[int, int]:
    axes = [a for a in (1, 2, 3) if a != d]
    if len(axes) != 2:
        raise ValueError(f"axis index must be 1, 2 or 3, got {d}")
    return axes[0], axes[1]


def stable_subspace(G: np.ndarray, gamma_L: float,
                    a_d_inv: np.ndarray | None = None,
                    eps_cont: float = 1e-6,
                    min_gap: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the invariant subspace of G for {Im mu < 0}.

    Computed by an ordered complex Schur reduction with the Im mu < 0
    eigenvalues sorted first.  At the hemisphere boundary (gamma_L = 0,
    extended to gamma_L <= 1e-8 where the gap is numerically untrustable)
    the limit subspace is taken by continuation: the same (tau, eta)
    evaluated at gamma_L = eps_cont, which shifts G by
    -i (eps_cont - gamma_L) A_d^{-1} (hence a_d_inv is required there).
    Raises SpectralSplitFailure when the spectral gap is below min_gap
    while gamma_L > 1e-8.
    """
    if gamma_L < 0.0:
        raise ValueError("gamma_L must be >= 0")
    if gamma_L <= 1e-8:
        # At and just above the hemisphere boundary the spectral gap closes;
        # use the continuation limit along the (tau, eta) ray.
        if a_d_inv is None:
            raise ValueError(
                "gamma_L <= 1e-8 needs a_d_inv for the continuation limit")
        G = G - 1j * (eps_cont - gamma_L) * a_d_inv
        gamma_L = eps_cont
    T, Z, sdim = scipy.linalg.schur(
        np.asarray(G, dtype=complex), output="complex",
        sort=lambda mu: mu.imag < 0.0)
    gap = float(np.min(np.abs(np.diag(T).imag)))
    if gap < min_gap and gamma_L > 1e-8:
        raise SpectralSplitFailure(
            f"stable/unstable splitting ambiguous: min |Im mu| = {gap:.3e} "
            f"at gamma_L = {gamma_L:.3e}")
    return Z[:, :sdim]


class BoundaryOperator:
    """Boundary condition matrix M of shape (p, n), possibly zeta-dependent.

    rank(M) = p is required wherever the operator is evaluated; kernel_dim
    = n - p.  Wrap a fixed matrix with `from_matrix` or a callable
    zf -> matrix with `from_evaluator`.
    """

    def __init__(self, evaluator, n: int, p: int):
        self._evaluator = evaluator
        self.n = int(n)
        self.p = int(p)

    @property
    def kernel_dim(self) -> int:
        return self.n - self.p

    @classmethod
    def from_matrix(cls, M) -> "BoundaryOperator":
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls(lambda zf: M, n=M.shape[1], p=M.shape[0])

    @classmethod
    def from_evaluator(cls, fn, n: int, p: int) -> "BoundaryOperator":
        return cls(fn, n=n, p=p)

    def matrix(self, zf: BoundaryFrequency | None = None) -> np.ndarray:
        M = np.atleast_2d(np.asarray(self._evaluator(zf), dtype=complex))
        if M.shape != (self.p, self.n):
            raise DimensionMismatch(
                f"boundary operator produced shape {M.shape}, expected {(self.p, self.n)}")
        return M

    def kernel_basis(self, zf: BoundaryFrequency | None = None) -> np.ndarray:
        """Orthonormal basis of ker M; raises RankDeficiency if rank < p."""
        M = self.matrix(zf)
        _, s, vh = np.linalg.svd(M)
        if s.size and s[-1] <= 1e-10 * max(s[0], 1e-300):
            raise RankDeficiency(
                f"boundary operator rank-deficient: singular values {s}")
        return vh[self.p:, :].conj().T


@dataclass(frozen=True)
class LopatinskiResult:
    """Lopatinski determinant at one frequency point."""

    E_minus: np.ndarray
    k: int
    D: complex
    abs_D: float
    diagnostics: dict


def lopatinski_det(E_minus: np.ndarray, M: BoundaryOperator,
                   zf: BoundaryFrequency | None = None) -> LopatinskiResult:
    """det(E_minus, ker M) from orthonormal bases of both subspaces.

    |D| is the QR-based value |prod r_ii| of the square matrix
    [E_minus | ker M]; the Gram route sqrt(prod(1 - s_i^2)) over the
    singular values of E_minus^H K is computed as an independent check and
    reported in the diagnostics.  |D| = 0 iff the subspaces intersect,
    |D| = 1 iff they are orthogonal complements.
    """
    E = np.asarray(E_minus, dtype=complex)
    K = M.kernel_basis(zf)
    n, k = E.shape
    if k + K.shape[1] != n:
        raise DimensionMismatch(
            f"dim E_minus ({k}) + dim ker M ({K.shape[1]}) != {n}")
    F = np.hstack([E, K])
    D = complex(np.linalg.det(F))
    r = np.linalg.qr(F, mode="r")
    abs_qr = float(np.prod(np.abs(np.diag(r))))
    cross = E.conj().T @ K
    s = np.linalg.svd(cross, compute_uv=False) if min(cross.shape) else np.array([])
    abs_gram = float(np.sqrt(np.prod(np.clip(1.0 - s**2, 0.0, None)))) if s.size else 1.0
    return LopatinskiResult(
        E_minus=E,
        k=k,
        D=D,
        abs_D=min(abs_qr, 1.0),
        diagnostics={"abs_D_qr": abs_qr, "abs_D_gram": abs_gram,
                     "algorithm_disagreement": abs(abs_qr - abs_gram)},
    )


# ----------------------------------------------------------------------------
# Scans
# ----------------------------------------------------------------------------

@dataclass
class ScanResult:
    """Outcome of a hemisphere scan: rows in grid order plus a failure report.

    min_abs_D/argmin report the polished minimum when the argmin-polish
    stage is enabled; the raw sweep minimum is kept alongside.  CSV rows
    are the sweep only.
    """

    min_abs_D: float | None
    argmin: BoundaryFrequency | None
    sweep_min_abs_D: float | None
    sweep_argmin: BoundaryFrequency | None
    rows: list[tuple]
    failures: list[dict]
    histogram: list[int]
    expected_dim: int
    n_points: int
    grid: dict
    polish: dict

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("tau,gamma_L,eta1,eta2,abs_D,dim_Eminus\n")
            for tau, gamma, eta1, eta2, abs_D, dim in self.rows:
                fh.write(f"{tau:.17g},{gamma:.17g},{eta1:.17g},{eta2:.17g},"
                         f"{abs_D:.17g},{dim:d}\n")

    def summary(self) -> dict:
        return {
            "min_abs_D": self.min_abs_D,
            "argmin": self.argmin.to_dict() if self.argmin is not None else None,
            "sweep_min_abs_D": self.sweep_min_abs_D,
            "sweep_argmin": (self.sweep_argmin.to_dict()
                             if self.sweep_argmin is not None else None),
            "grid": self.grid,
            "polish": self.polish,
            "expected_dim_Eminus": self.expected_dim,
            "n_points": self.n_points,
            "n_rows": len(self.rows),
            "failures": self.failures,
            "histogram": self.histogram,
        }


class _ScanProblem:
    """Internal bundle: G(zf), continuation matrix, expected dim, operator."""

    def __init__(self, n, G_of, a_d_inv, expected_dim, operator, grid_info):
        self.n = n
        self.G_of = G_of
        self.a_d_inv = a_d_inv
        self.expected_dim = expected_dim
        self.operator = operator
        self.grid_info = grid_info


def _count_signs(A: np.ndarray) -> tuple[int, int]:
    evs = np.linalg.eigvals(A).real
    return int(np.sum(evs > 0.0)), int(np.sum(evs < 0.0))


def _one_sided_problem(state, eos, d, M, tol_det) -> _ScanProblem:
    A_d, ok = boundary_matrix(state, eos, d, tol_det=tol_det)
    if not ok:
        raise CharacteristicBoundary(f"boundary x_{d} = const is characteristic")
    a_d_inv = np.linalg.inv(A_d)
    t1, t2 = _tangential_axes(d)
    A_t1 = assemble_full_symbol(state, eos, unit_vector(t1))
    A_t2 = assemble_full_symbol(state, eos, unit_vector(t2))
    eye = np.eye(8)

    def G_of(zf: BoundaryFrequency) -> np.ndarray:
        return a_d_inv @ ((zf.tau - 1j * zf.gamma_L) * eye
                          + zf.eta[0] * A_t1 + zf.eta[1] * A_t2)

    n_pos, _ = _count_signs(A_d)
    operator = M if isinstance(M, BoundaryOperator) else BoundaryOperator.from_matrix(M)
    return _ScanProblem(8, G_of, a_d_inv, n_pos, operator, {})


def _scan(problem: _ScanProblem, grid, eps_cont: float,
          polish_rounds: int = 6, polish_radius: float | None = None) -> ScanResult:
    points = grid.points()
    rows: list[tuple] = []
    failures: list[dict] = []
    histogram = [0] * 20
    min_abs = None
    argmin = None

    def evaluate(zf: BoundaryFrequency) -> tuple[float, int]:
        G = problem.G_of(zf)
        E = stable_subspace(G, zf.gamma_L, a_d_inv=problem.a_d_inv,
                            eps_cont=eps_cont)
        dim = E.shape[1]
        if zf.gamma_L > 0.0 and dim != problem.expected_dim:
            raise SpectralSplitFailure(
                f"dim E_minus = {dim}, expected {problem.expected_dim}")
        return lopatinski_det(E, problem.operator, zf).abs_D, dim

    for idx, zf in enumerate(points):
        try:
            abs_D, dim = evaluate(zf)
        except MhdStabError as exc:
            failures.append({"index": idx, "zeta": zf.to_dict(),
                             "type": type(exc).__name__, "message": str(exc)})
            continue
        rows.append((zf.tau, zf.gamma_L, float(zf.eta[0]), float(zf.eta[1]),
                     abs_D, dim))
        histogram[min(int(abs_D * 20.0), 19)] += 1
        if min_abs is None or abs_D < min_abs:
            min_abs = abs_D
            argmin = zf

    sweep_min, sweep_argmin = min_abs, argmin
    polish_info: dict = {"rounds": 0}
    if polish_rounds > 0 and argmin is not None:
        if polish_radius is None:
            polish_radius = _default_polish_radius(grid)
        if polish_radius is not None:
            min_abs, argmin, n_eval = _polish_min(
                evaluate, argmin, min_abs, polish_rounds, polish_radius, failures)
            polish_info = {"rounds": polish_rounds, "radius": polish_radius,
                           "n_evaluations": n_eval}

    return ScanResult(
        min_abs_D=min_abs,
        argmin=argmin,
        sweep_min_abs_D=sweep_min,
        sweep_argmin=sweep_argmin,
        rows=rows,
        failures=failures,
        histogram=histogram,
        expected_dim=problem.expected_dim,
        n_points=len(points),
        grid=grid.describe(),
        polish=polish_info,
    )


def _default_polish_radius(grid) -> float | None:
    if isinstance(grid, HemisphereGrid):
        # twice the typical equator-point spacing
        return 2.0 * math.sqrt(4.0 * math.pi / (grid.equator_refine * grid.n_sphere))
    return None


def _polish_min(evaluate, zf0: BoundaryFrequency, abs0: float, rounds: int,
                radius: float, failures: list[dict]) -> tuple[float, BoundaryFrequency, int]:
    """Deterministic local refinement of the sweep argmin.

    The minimum of |D| typically sits in a conical valley along a glancing
    circle on the gamma_L = 0 equator, where grid sampling converges only
    linearly in the spacing; a few rounds of shrinking lattice search around
    the argmin recover the valley bottom to high accuracy at negligible
    cost.  Points are projected back to the closed hemisphere.
    """
    center = np.array([zf0.tau, zf0.gamma_L, zf0.eta[0], zf0.eta[1]])
    best_val, best_zf = abs0, zf0
    offsets = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    n_eval = 0
    for round_idx in range(rounds):
        # orthonormal tangent frame of the unit 3-sphere at the center
        q, _ = np.linalg.qr(np.column_stack([center, np.eye(4)]))
        tangent = q[:, 1:4]
        new_center = center
        for c1 in offsets:
            for c2 in offsets:
                for c3 in offsets:
                    if c1 == c2 == c3 == 0.0:
                        continue
                    p = center + radius * (tangent @ np.array([c1, c2, c3]))
                    if p[1] < 1e-12:  # snap to the equator face
                        p[1] = 0.0
                    norm = float(np.linalg.norm(p))
                    if norm == 0.0:
                        continue
                    p = p / norm
                    zf = BoundaryFrequency(p[0], p[1], p[2:4])
                    n_eval += 1
                    try:
                        val, _ = evaluate(zf)
                    except MhdStabError as exc:
                        failures.append({
                            "stage": "polish", "round": round_idx,
                            "zeta": zf.to_dict(),
                            "type": type(exc).__name__, "message": str(exc)})
                        continue
                    if val < best_val:
                        best_val, best_zf = val, zf
                        new_center = p
        center = new_center
        radius *= 0.35
    return best_val, best_zf, n_eval


def uniform_scan(state: ThermoState, eos: EquationOfState, d: int, M,
                 sampling=None, *, tol_det: float = 1e-10,
                 eps_cont: float = 1e-6, polish_rounds: int = 6,
                 polish_radius: float | None = None) -> ScanResult:
    """Scan |D| over the unit hemisphere for a one-sided boundary problem.

    M is a BoundaryOperator (or a plain matrix) with as many rows as A_d
    has positive eigenvalues.  Per-point science errors are collected into
    the failure report, never silently skipped; the reduction is by grid
    order, so results are deterministic.
    """
    grid = sampling if sampling is not None else HemisphereGrid()
    return _scan(_one_sided_problem(state, eos, d, M, tol_det), grid, eps_cont,
                 polish_rounds=polish_rounds, polish_radius=polish_radius)


# ----------------------------------------------------------------------------
# Conservation laws: conserved variables, fluxes, Jacobians
# ----------------------------------------------------------------------------

def _split(v: np.ndarray):
    return v[0], v[1:4], v[4], v[5:8]


def conserved_vector(v: np.ndarray, eos: EquationOfState) -> np.ndarray:
    """Conserved quantities q = (rho, rho u, E, B) from primitive (rho, u, theta, B)."""
    rho, u, theta, B = _split(v)
    ev = eval_eos(eos, rho, theta)
    E = rho * (ev.e + 0.5 * float(u @ u)) + 0.5 * float(B @ B)
    return np.concatenate([[rho], rho * u, [E], B])


def flux_vector(v: np.ndarray, eos: EquationOfState, k: int) -> np.ndarray:
    """Flux of (mass, momentum, energy, induction) in the 1-based direction k."""
    rho, u, theta, B = _split(v)
    ev = eval_eos(eos, rho, theta)
    kk = k - 1
    ptot = ev.P + 0.5 * float(B @ B)
    E = rho * (ev.e + 0.5 * float(u @ u)) + 0.5 * float(B @ B)
    e_k = np.zeros(3)
    e_k[kk] = 1.0
    mass = rho * u[kk]
    mom = rho * u[kk] * u + ptot * e_k - B[kk] * B
    energy = (E + ptot) * u[kk] - float(u @ B) * B[kk]
    ind = u[kk] * B - B[kk] * u
    return np.concatenate([[mass], mom, [energy], ind])


def conserved_jacobian(v: np.ndarray, eos: EquationOfState) -> np.ndarray:
    """d q / d (rho, u, theta, B)."""
    rho, u, theta, B = _split(v)
    ev = eval_eos(eos, rho, theta)
    e_rho = e_rho_consistent(ev, rho, theta)
    J = np.zeros((8, 8))
    J[0, 0] = 1.0
    J[1:4, 0] = u
    J[1:4, 1:4] = rho * np.eye(3)
    J[4, 0] = ev.e + rho * e_rho + 0.5 * float(u @ u)
    J[4, 1:4] = rho * u
    J[4, 4] = rho * ev.e_theta
    J[4, 5:8] = B
    J[5:8, 5:8] = np.eye(3)
    return J


def flux_jacobian(v: np.ndarray, eos: EquationOfState, k: int) -> np.ndarray:
    """d flux_k / d (rho, u, theta, B), analytic."""
    rho, u, theta, B = _split(v)
    ev = eval_eos(eos, rho, theta)
    e_rho = e_rho_consistent(ev, rho, theta)
    kk = k - 1
    ptot = ev.P + 0.5 * float(B @ B)
    E = rho * (ev.e + 0.5 * float(u @ u)) + 0.5 * float(B @ B)
    uB = float(u @ B)
    I3 = np.eye(3)
    J = np.zeros((8, 8))
    # mass row
    J[0, 0] = u[kk]
    J[0, 1 + kk] = rho
    # momentum rows
    J[1:4, 0] = u * u[kk]
    J[1 + kk, 0] += ev.P_rho
    J[1:4, 1:4] = rho * (I3 * u[kk] + np.outer(u, I3[kk]))
    J[1 + kk, 4] = ev.P_theta
    for i in range(3):
        for j in range(3):
            J[1 + i, 5 + j] = B[j] * (1.0 if i == kk else 0.0) \
                - (1.0 if i == j else 0.0) * B[kk] \
                - B[i] * (1.0 if j == kk else 0.0)
    # energy row
    J[4, 0] = (ev.e + rho * e_rho + 0.5 * float(u @ u) + ev.P_rho) * u[kk]
    J[4, 1:4] = rho * u * u[kk] - B * B[kk]
    J[4, 1 + kk] += E + ptot
    J[4, 4] = (rho * ev.e_theta + ev.P_theta) * u[kk]
    J[4, 5:8] = 2.0 * B * u[kk] - u * B[kk]
    J[4, 5 + kk] -= uB
    # induction rows
    for i in range(3):
        for j in range(3):
            J[5 + i, 1 + j] = (1.0 if j == kk else 0.0) * B[i] \
                - (1.0 if i == j else 0.0) * B[kk]
            J[5 + i, 5 + j] = u[kk] * (1.0 if i == j else 0.0) \
                - u[i] * (1.0 if j == kk else 0.0)
    return J


# ----------------------------------------------------------------------------
# Planar shocks
# ----------------------------------------------------------------------------

_LAX_PATTERNS = {
    # family -> (positive eigenvalues upstream, negative eigenvalues downstream)
    "fast": (8, 1),
    "slow": (6, 3),
}


@dataclass(frozen=True)
class PlanarShock:
    """Planar Lax shock; left (upstream) and right (downstream) states are in
    the shock frame, so their normal velocity along `axis` is relative to
    the front.  `sigma` is the lab-frame front speed."""

    left: ThermoState
    right: ThermoState
    sigma: float
    axis: int
    lax_family: str
    eos: EquationOfState
    residual: float
    lax_valid: bool
    noncharacteristic: bool

    @property
    def upstream(self) -> ThermoState:
        return self.left

    @property
    def downstream(self) -> ThermoState:
        return self.right

    def jump_residual(self) -> np.ndarray:
        """Scaled Rankine-Hugoniot residual of the stored pair."""
        return _rh_residual(self.left.as_array(), self.right.as_array(),
                            self.eos, self.axis)

    def to_dict(self) -> dict:
        return {
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
            "sigma": self.sigma,
            "axis": self.axis,
            "lax_family": self.lax_family,
            "eos": eos_to_dict(self.eos),
            "residual": self.residual,
            "lax_valid": self.lax_valid,
            "noncharacteristic": self.noncharacteristic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarShock":
        eos = eos_from_dict(d["eos"])
        left = ThermoState.from_dict(d["left"])
        right = ThermoState.from_dict(d["right"])
        axis = int(d["axis"])
        family = d["lax_family"]
        residual = float(np.max(np.abs(_rh_residual(
            left.as_array(), right.as_array(), eos, axis))))
        lax_valid, noncharacteristic = _shock_flags(left, right, eos, axis, family)
        return cls(left=left, right=right, sigma=float(d["sigma"]), axis=axis,
                   lax_family=family, eos=eos, residual=residual,
                   lax_valid=lax_valid, noncharacteristic=noncharacteristic)


def _rh_rows(axis: int) -> list[int]:
    """Rows of the flux vector entering the jump solve: mass, momentum,
    energy and the tangential induction components (normal induction is
    replaced by B_d continuity, imposed directly on the unknowns)."""
    t1, t2 = _tangential_axes(axis)
    return [0, 1, 2, 3, 4, 4 + t1, 4 + t2]


def _rh_scales(upstream_vec: np.ndarray, eos: EquationOfState, axis: int) -> np.ndarray:
    rho, u, theta, B = _split(upstream_vec)
    state = ThermoState(rho=rho, u=u, theta=theta, B=B)
    ws = wave_speeds(state, eos, unit_vector(axis))
    V = max(ws.c_f, abs(u[axis - 1]), 1e-30)
    m = rho * V
    b_scale = max(float(np.linalg.norm(B)), math.sqrt(rho) * V)
    scales = np.empty(7)
    scales[0] = m
    scales[1:4] = m * V
    scales[4] = m * V * V
    scales[5:7] = V * b_scale
    return scales


def _rh_residual(left_vec: np.ndarray, right_vec: np.ndarray,
                 eos: EquationOfState, axis: int) -> np.ndarray:
    rows = _rh_rows(axis)
    diff = flux_vector(right_vec, eos, axis) - flux_vector(left_vec, eos, axis)
    return diff[rows] / _rh_scales(left_vec, eos, axis)


def _shock_flags(left: ThermoState, right: ThermoState, eos: EquationOfState,
                 axis: int, family: str,
                 tol_char: float = 1e-10) -> tuple[bool, bool]:
    pattern = _LAX_PATTERNS.get(family)
    counts = []
    nonchar = True
    for side in (left, right):
        A_d = assemble_full_symbol(side, eos, unit_vector(axis))
        evs = np.linalg.eigvals(A_d).real
        scale = max(float(np.max(np.abs(evs))), 1e-30)
        if float(np.min(np.abs(evs))) <= tol_char * scale:
            nonchar = False
        counts.append((int(np.sum(evs > 0.0)), int(np.sum(evs < 0.0))))
    lax = (pattern is not None and nonchar
           and counts[0][0] == pattern[0] and counts[1][1] == pattern[1])
    return lax, nonchar


def _gas_seed(upstream_vec: np.ndarray, eos: EquationOfState, axis: int,
              w_minus: float) -> np.ndarray:
    """Gas-dynamic normal-shock seed for the downstream unknowns."""
    rho, u, theta, B = _split(upstream_vec)
    ev = eval_eos(eos, rho, theta)
    state = ThermoState(rho=rho, u=u, theta=theta, B=B)
    ws = wave_speeds(state, eos, unit_vector(axis))
    gamma_eff = max(rho * ws.c0**2 / ev.P, 1.0 + 1e-6)
    m_gas = max(w_minus / ws.c0, 1.0 + 1e-12)
    r = max(((gamma_eff + 1.0) * m_gas**2)
            / ((gamma_eff - 1.0) * m_gas**2 + 2.0), 1.0)
    p_ratio = max(1.0 + 2.0 * gamma_eff / (gamma_eff + 1.0) * (m_gas**2 - 1.0), 1.0)
    t1, t2 = _tangential_axes(axis)
    u_plus = u.copy()
    u_plus[axis - 1] = w_minus / r
    x0 = np.empty(7)
    x0[0] = rho * r
    x0[1:4] = u_plus
    x0[4] = theta * p_ratio / r
    x0[5] = B[t1 - 1] * r
    x0[6] = B[t2 - 1] * r
    return x0


def _pack_downstream(x: np.ndarray, upstream_vec: np.ndarray, axis: int) -> np.ndarray:
    t1, t2 = _tangential_axes(axis)
    v = np.empty(8)
    v[0] = x[0]
    v[1:4] = x[1:4]
    v[4] = x[4]
    v[5:8] = upstream_vec[5:8]  # normal component inherited: [B_d] = 0
    v[4 + t1] = x[5]
    v[4 + t2] = x[6]
    return v


def rankine_hugoniot(eos: EquationOfState, upstream: ThermoState,
                     family: str = "fast", mach: float = 2.0, d: int = 3,
                     B=None, seed_downstream: ThermoState | None = None,
                     tol: float = 1e-13, max_iter: int = 80) -> PlanarShock:
    """Construct a planar Lax shock from an upstream state and a strength.

    `mach` is the upstream normal velocity relative to the front in units
    of the upstream characteristic speed of the chosen family evaluated
    along the shock normal (fast speed for family="fast").  The front
    speed is sigma = u_d - mach * c_family, and the stored left/right
    states are expressed in the shock frame.  mach = 1 produces the
    zero-strength degenerate shock (downstream = upstream, front moving at
    the characteristic speed) with the validity flags false.  A damped
    Newton iteration on the scaled jump conditions starts from the
    gas-dynamic seed (or from `seed_downstream` when continuing in a
    parameter); failure to converge or a Lax-count mismatch raises
    NoAdmissibleShock.
    """
    if family not in _LAX_PATTERNS:
        raise NoAdmissibleShock(f"unknown Lax family {family!r}")
    if B is not None:
        upstream = replace(upstream, B=np.asarray(B, dtype=float))
    if mach < 1.0:
        raise NoAdmissibleShock(
            f"mach must be >= 1 for an entropy-admissible shock, got {mach}")

    ws = wave_speeds(upstream, eos, unit_vector(d))
    c_ref = ws.c_f if family == "fast" else ws.c_s
    if c_ref <= 0.0:
        raise NoAdmissibleShock(
            f"{family} characteristic speed vanishes along the shock normal")
    w_minus = mach * c_ref
    sigma = float(upstream.u[d - 1]) - w_minus

    u_frame = upstream.u.copy()
    u_frame[d - 1] = w_minus
    left = replace(upstream, u=u_frame)
    left_vec = left.as_array()

    if mach <= 1.0 + 1e-12:
        # zero-strength limit: the degenerate shock moving at the
        # characteristic speed, downstream identical to upstream
        lax_valid, noncharacteristic = _shock_flags(left, left, eos, d, family)
        return PlanarShock(left=left, right=left, sigma=sigma, axis=d,
                           lax_family=family, eos=eos, residual=0.0,
                           lax_valid=lax_valid,
                           noncharacteristic=noncharacteristic)

    scales = _rh_scales(left_vec, eos, d)
    rows = _rh_rows(d)
    f_left = flux_vector(left_vec, eos, d)

    def residual(x: np.ndarray) -> np.ndarray:
        v = _pack_downstream(x, left_vec, d)
        if v[0] <= 0.0 or v[4] <= 0.0 or not np.all(np.isfinite(v)):
            return np.full(7, np.inf)
        return (flux_vector(v, eos, d) - f_left)[rows] / scales

    def jacobian(x: np.ndarray) -> np.ndarray:
        v = _pack_downstream(x, left_vec, d)
        J_full = flux_jacobian(v, eos, d)[rows, :]
        t1, t2 = _tangential_axes(d)
        cols = [0, 1, 2, 3, 4, 4 + t1, 4 + t2]
        return J_full[:, cols] / scales[:, None]

    if seed_downstream is not None:
        sv = seed_downstream.as_array()
        t1, t2 = _tangential_axes(d)
        x = np.array([sv[0], sv[1], sv[2], sv[3], sv[4], sv[4 + t1], sv[4 + t2]])
    else:
        x = _gas_seed(left_vec, eos, d, w_minus)

    r = residual(x)
    r_norm = float(np.max(np.abs(r)))
    converged = r_norm < tol
    for _ in range(max_iter):
        if converged:
            break
        try:
            step = np.linalg.solve(jacobian(x), -r)
        except np.linalg.LinAlgError as exc:
            raise NoAdmissibleShock(f"singular jump Jacobian: {exc}") from exc
        t = 1.0
        while t >= 1.0 / 1024.0:
            r_new = residual(x + t * step)
            n_new = float(np.max(np.abs(r_new)))
            if n_new < r_norm:
                x = x + t * step
                r, r_norm = r_new, n_new
                break
            t *= 0.5
        else:
            break
        converged = r_norm < tol
    if not converged and r_norm > 1e-10:
        raise NoAdmissibleShock(
            f"jump-condition Newton did not converge: scaled residual {r_norm:.3e}")

    right_vec = _pack_downstream(x, left_vec, d)
    try:
        right = ThermoState.from_array(right_vec)
    except MhdStabError as exc:
        raise NoAdmissibleShock(f"downstream state is not admissible: {exc}") from exc

    lax_valid, noncharacteristic = _shock_flags(left, right, eos, d, family)
    degenerate = float(np.linalg.norm(right_vec - left_vec)) <= 1e-10 * float(
        np.linalg.norm(left_vec))
    if degenerate:
        raise NoAdmissibleShock(
            "Newton converged to the trivial (no-jump) solution")
    if not lax_valid:
        raise NoAdmissibleShock(
            f"solution violates the Lax {family}-family pattern "
            f"(counts or characteristic boundary)")
    return PlanarShock(left=left, right=right, sigma=sigma, axis=d,
                       lax_family=family, eos=eos, residual=r_norm,
                       lax_valid=lax_valid, noncharacteristic=noncharacteristic)


# ----------------------------------------------------------------------------
# Shock boundary operator and two-sided scan
# ----------------------------------------------------------------------------

def shock_boundary_operator(shock: PlanarShock,
                            zf: BoundaryFrequency | None = None) -> BoundaryOperator:
    """Majda-type linearized jump conditions with the front eliminated.

    Acts on the stacked trace (u_right(0), u_left(0)) of the reflected
    two-sided problem; see the module docstring for the construction and
    sign conventions.  With `zf` supplied, the operator is frozen at that
    frequency; otherwise it is frequency dependent.  Raises RankDeficiency
    (possibly at evaluation time) when the front coefficient degenerates,
    e.g. for a zero-strength shock.
    """
    d = shock.axis
    eos = shock.eos
    vl = shock.left.as_array()
    vr = shock.right.as_array()
    t1, t2 = _tangential_axes(d)
    b_row = 4 + d  # index of the normal induction component in the 8 rows

    N_r = flux_jacobian(vr, eos, d)
    N_l = flux_jacobian(vl, eos, d)
    q_jump = conserved_vector(vr, eos) - conserved_vector(vl, eos)
    f_jump = {t: flux_vector(vr, eos, t) - flux_vector(vl, eos, t) for t in (t1, t2)}
    bt_jump = np.array([vr[4 + t1] - vl[4 + t1], vr[4 + t2] - vl[4 + t2]])

    # Normal-induction row degenerates (its normal flux is identically 0);
    # replace it by continuity of B . n across the perturbed front.
    for N in (N_r, N_l):
        N[b_row, :] = 0.0
        N[b_row, b_row] = 1.0
    q_jump[b_row] = 0.0
    for t in (t1, t2):
        f_jump[t][b_row] = 0.0

    jump_scale = (float(np.linalg.norm(q_jump))
                  + sum(float(np.linalg.norm(f_jump[t])) for t in (t1, t2))
                  + float(np.linalg.norm(bt_jump)))
    N_pair = np.hstack([N_r, -N_l]).astype(complex)

    def evaluate(zf: BoundaryFrequency) -> np.ndarray:
        s = zf.gamma_L + 1j * zf.tau
        b_f = s * q_jump + 1j * (zf.eta[0] * f_jump[t1] + zf.eta[1] * f_jump[t2])
        b_f[b_row] = 1j * (zf.eta[0] * bt_jump[0] + zf.eta[1] * bt_jump[1])
        zeta_scale = abs(s) + float(np.linalg.norm(zf.eta))
        b_norm = float(np.linalg.norm(b_f))
        if b_norm <= 1e-12 * max(zeta_scale * jump_scale, 1e-300):
            raise RankDeficiency(
                f"front coefficient degenerates at zeta = {zf.to_dict()}")
        b_hat = (b_f / b_norm).reshape(8, 1)
        U, _, _ = np.linalg.svd(b_hat, full_matrices=True)
        return U[:, 1:].conj().T @ N_pair

    if zf is not None:
        return BoundaryOperator.from_matrix(evaluate(zf))
    return BoundaryOperator.from_evaluator(evaluate, n=16, p=7)


def _shock_problem(shock: PlanarShock, tol_det: float) -> _ScanProblem:
    d = shock.axis
    eos = shock.eos
    sides = {}
    for name, state in (("right", shock.right), ("left", shock.left)):
        A_d, ok = boundary_matrix(state, eos, d, tol_det=tol_det)
        if not ok:
            raise CharacteristicBoundary(
                f"shock {name} side is characteristic for axis {d}")
        t1, t2 = _tangential_axes(d)
        sides[name] = (
            np.linalg.inv(A_d),
            assemble_full_symbol(state, eos, unit_vector(t1)),
            assemble_full_symbol(state, eos, unit_vector(t2)),
            A_d,
        )
    eye = np.eye(8)

    def G_of(zf: BoundaryFrequency) -> np.ndarray:
        blocks = []
        for name, sign in (("right", 1.0), ("left", -1.0)):
            inv, A_t1, A_t2, _ = sides[name]
            G = inv @ ((zf.tau - 1j * zf.gamma_L) * eye
                       + zf.eta[0] * A_t1 + zf.eta[1] * A_t2)
            blocks.append(sign * G)
        return scipy.linalg.block_diag(*blocks)

    a_d_inv = scipy.linalg.block_diag(sides["right"][0], -sides["left"][0])
    n_pos_right, _ = _count_signs(sides["right"][3])
    _, n_neg_left = _count_signs(sides["left"][3])
    expected = n_pos_right + n_neg_left
    operator = shock_boundary_operator(shock)
    return _ScanProblem(16, G_of, a_d_inv, expected, operator, {})


def shock_scan(shock: PlanarShock, sampling=None, *, tol_det: float = 1e-10,
               eps_cont: float = 1e-6, polish_rounds: int = 6,
               polish_radius: float | None = None) -> ScanResult:
    """Hemisphere scan of the two-sided shock Lopatinski determinant."""
    grid = sampling if sampling is not None else HemisphereGrid()
    return _scan(_shock_problem(shock, tol_det), grid, eps_cont,
                 polish_rounds=polish_rounds, polish_radius=polish_radius)


# ----------------------------------------------------------------------------
# Small-field limit study
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GasShockSpec:
    """Limiting gas-dynamic shock for the small-field study: quiescent
    upstream (rho, theta), strength mach, shock normal axis, and the unit
    direction along which the seed field is applied (tangential for the
    perpendicular fast-shock continuation)."""

    rho: float = 1.0
    theta: float = 1.0
    mach: float = 2.0
    axis: int = 3
    b_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def direction(self) -> np.ndarray:
        v = np.asarray(self.b_direction, dtype=float).reshape(3)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("b_direction must be nonzero")
        return v / n


@dataclass(frozen=True)
class StudyRow:
    B_mag: float
    min_abs_D: float
    argmin: BoundaryFrequency
    deviation: float
    n_failures: int
    shock: PlanarShock

    def to_dict(self) -> dict:
        return {
            "B": self.B_mag,
            "min_abs_D": self.min_abs_D,
            "argmin": self.argmin.to_dict(),
            "deviation_from_limit": self.deviation,
            "n_failures": self.n_failures,
            "shock": self.shock.to_dict(),
        }


@dataclass(frozen=True)
class StudyResult:
    rows: tuple[StudyRow, ...]
    reference_min_abs_D: float
    deviations_monotone: bool
    grid: dict

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "reference_min_abs_D": self.reference_min_abs_D,
            "deviations_monotone": self.deviations_monotone,
            "grid": self.grid,
        }


def b_to_zero_study(eos: EquationOfState, gas_shock: GasShockSpec,
                    b_values, sampling=None, *, tol_det: float = 1e-10,
                    eps_cont: float = 1e-6, polish_rounds: int = 6,
                    strict: bool = False) -> StudyResult:
    """Small-magnetic-field stability study for a Lax shock.

    For each |B| in the descending list (0 allowed, meaning the limiting
    gas-dynamic shock), constructs the MHD shock by continuation from the
    previous field value and scans the hemisphere; rows report min |D| and
    its deviation from the B = 0 limit.  `deviations_monotone` records
    whether the deviation decreases along decreasing |B| > 0; with
    strict=True a violation raises MhdStabError.
    """
    grid = sampling if sampling is not None else HemisphereGrid()
    b_values = [float(b) for b in b_values]
    if any(b < 0.0 for b in b_values):
        raise ValueError("field magnitudes must be >= 0")
    direction = gas_shock.direction()

    def make_shock(b_mag: float, seed: ThermoState | None) -> PlanarShock:
        upstream = ThermoState(rho=gas_shock.rho, u=np.zeros(3),
                               theta=gas_shock.theta, B=b_mag * direction)
        return rankine_hugoniot(eos, upstream, family="fast",
                                mach=gas_shock.mach, d=gas_shock.axis,
                                seed_downstream=seed)

    reference_shock = make_shock(0.0, None)
    reference_scan = shock_scan(reference_shock, grid, tol_det=tol_det,
                                eps_cont=eps_cont, polish_rounds=polish_rounds)
    if reference_scan.min_abs_D is None:
        raise MhdStabError("reference B = 0 scan produced no valid points")
    ref_min = reference_scan.min_abs_D

    rows: list[StudyRow] = []
    seed: ThermoState | None = None
    for b in sorted(set(b_values), reverse=True):
        if b == 0.0:
            shock, scan = reference_shock, reference_scan
        else:
            shock = make_shock(b, seed)
            scan = shock_scan(shock, grid, tol_det=tol_det, eps_cont=eps_cont,
                              polish_rounds=polish_rounds)
            seed = shock.right
        if scan.min_abs_D is None:
            raise MhdStabError(f"scan at |B| = {b} produced no valid points")
        rows.append(StudyRow(
            B_mag=b,
            min_abs_D=scan.min_abs_D,
            argmin=scan.argmin,
            deviation=abs(scan.min_abs_D - ref_min),
            n_failures=len(scan.failures),
            shock=shock,
        ))

    positive = [r for r in rows if r.B_mag > 0.0]
    slack = 1e-12 * max(ref_min, 1e-30)
    monotone = all(positive[i + 1].deviation <= positive[i].deviation + slack
                   for i in range(len(positive) - 1))
    if strict and not monotone:
        raise MhdStabError("min |D| deviations do not decrease towards B = 0")
    return StudyResult(rows=tuple(rows), reference_min_abs_D=ref_min,
                       deviations_monotone=monotone, grid=grid.describe())
