"""Finite-difference eigensolver for the 1-D anharmonic oscillator.

The time-independent Schroedinger equation with potential
V(x) = 0.5 m omega^2 x^2 + lambda x^4 is discretized on a uniform grid with
the 3-point central-difference Laplacian, giving a symmetric tridiagonal
Hamiltonian. Eigenvalues are located by Sturm-sequence bisection (which
certifies their index), eigenvectors by shifted inverse iteration with a
pivoted tridiagonal LU solve.

All routines are pure and reentrant; dataset generation batches the
bisection across potentials but keeps row order equal to input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Bisection interval tolerance (absolute) and inverse-iteration limits.
BISECT_TOL = 1e-12
CERT_TOL = 1e-9
INVIT_RESIDUAL_TOL = 1e-10
INVIT_MAX_ITER = 50

_SAFE_MIN = float(np.finfo(np.float64).tiny)


class EigensolverError(RuntimeError):
    """Eigenvalue certification or inverse iteration failed."""


@dataclass(frozen=True)
class QuantumGrid:
    """Uniform grid of n_points positions over [-x_max, +x_max]."""

    x_max: float
    n_points: int
    x: np.ndarray
    dx: float


@dataclass(frozen=True)
class PotentialSpec:
    """Physical constants of the oscillator (atomic units by default).

    lam is the quartic anharmonicity coefficient.
    """

    m: float = 1.0
    omega: float = 1.0
    lam: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        vals = (self.m, self.omega, self.lam, self.hbar)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("potential parameters must be finite")
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.omega < 0:
            raise ValueError(f"omega must be nonnegative, got {self.omega}")
        if self.lam < 0:
            # A negative quartic term is unbounded below and breaks the
            # hard-wall boundary assumption.
            raise ValueError(f"quartic coefficient must be nonnegative, got {self.lam}")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """Symmetric tridiagonal matrix: diag (N,) and shared off-diagonal (N-1,)."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        if len(self.diag) < 2 or len(self.offdiag) != len(self.diag) - 1:
            raise ValueError("offdiag length must be len(diag) - 1")

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        a[idx, idx + 1] = self.offdiag
        a[idx + 1, idx] = self.offdiag
        return a


@dataclass(frozen=True)
class Spectrum:
    """Lowest-k eigenpairs: energies ascending, wavefunctions (k, N).

    Wavefunctions are normalized with quadrature weight dx and have their
    boundary entries set to exactly zero (hard-wall convention); on grids
    wide enough to confine the states the clamped amplitude is negligible.
    """

    energies: np.ndarray
    wavefunctions: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.energies) <= 0):
            raise EigensolverError("computed energies are not strictly ascending")


@dataclass(frozen=True)
class ConvergenceStudy:
    """Energies per grid size plus successive absolute differences."""

    n_values: tuple[int, ...]
    energies: np.ndarray   # (len(n_values), k)
    diffs: np.ndarray      # (len(n_values) - 1, k)


@dataclass(frozen=True)
class QuantumDataset:
    """Rows of (lambda, lowest-k energies, discretized potential).

    Carries the grid descriptor and oscillator constants that produced it.
    """

    lambdas: np.ndarray     # (R,)
    energies: np.ndarray    # (R, k)
    potentials: np.ndarray  # (R, N)
    x_max: float
    n_points: int
    m: float
    omega: float
    hbar: float

    def __post_init__(self):
        r = len(self.lambdas)
        if self.energies.shape[0] != r or self.potentials.shape[0] != r:
            raise ValueError("dataset arrays must share the row count")
        if self.potentials.shape[1] != self.n_points:
            raise ValueError("potential rows must match n_points")

    @property
    def n_rows(self) -> int:
        return len(self.lambdas)

    @property
    def k(self) -> int:
        return self.energies.shape[1]


def make_grid(x_max: float, n_points: int) -> QuantumGrid:
    """Uniform grid with dx = 2 x_max / (n_points - 1), endpoints included."""
    if not (math.isfinite(x_max) and x_max > 0):
        raise ValueError(f"x_max must be positive and finite, got {x_max}")
    if n_points < 3:
        raise ValueError(f"need at least 3 grid points, got {n_points}")
    x = np.linspace(-x_max, x_max, n_points)
    dx = 2.0 * x_max / (n_points - 1)
    return QuantumGrid(x_max=float(x_max), n_points=int(n_points), x=x, dx=dx)


def eval_potential(grid: QuantumGrid, spec: PotentialSpec) -> np.ndarray:
    """V(x) = 0.5 m omega^2 x^2 + lam x^4 on the grid."""
    x2 = grid.x * grid.x
    return 0.5 * spec.m * spec.omega**2 * x2 + spec.lam * x2 * x2


def build_hamiltonian(
    grid: QuantumGrid, V: np.ndarray, spec: PotentialSpec
) -> TridiagonalHamiltonian:
    """Central-difference Hamiltonian: diag hbar^2/(m dx^2) + V, offdiag -hbar^2/(2 m dx^2)."""
    if len(V) != grid.n_points:
        raise ValueError(f"potential length {len(V)} != grid size {grid.n_points}")
    kin = spec.hbar**2 / (spec.m * grid.dx**2)
    diag = kin + np.asarray(V, dtype=np.float64)
    offdiag = np.full(grid.n_points - 1, -0.5 * kin)
    return TridiagonalHamiltonian(diag=diag, offdiag=offdiag)


def _sturm_counts(
    diags: np.ndarray, offsq: np.ndarray, shifts: np.ndarray, pivmin: float
) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    diags: (M, N) stacked diagonals sharing one squared off-diagonal (N-1,).
    shifts: (M, K). Returns int counts (M, K) via the LDL^T sign sequence,
    with tiny pivots clamped to -pivmin as in LAPACK's bisection.
    """
    q = diags[:, 0:1] - shifts
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    counts = (q < 0).astype(np.int64)
    for i in range(1, diags.shape[1]):
        q = diags[:, i : i + 1] - shifts - offsq[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        counts += q < 0
    return counts


def _bisect_eigenvalues(
    diags: np.ndarray, offdiag: np.ndarray, k: int, tol: float = BISECT_TOL
) -> np.ndarray:
    """Lowest k eigenvalues of each stacked tridiagonal matrix, by bisection.

    All (row, index) brackets are narrowed in lockstep from the Gershgorin
    interval until every width is below tol.
    """
    m_rows, n = diags.shape
    offsq = offdiag * offdiag
    pivmin = _SAFE_MIN * max(1.0, float(offsq.max()))

    radius = np.zeros(n)
    radius[:-1] += np.abs(offdiag)
    radius[1:] += np.abs(offdiag)
    lo0 = (diags - radius).min(axis=1)
    hi0 = (diags + radius).max(axis=1)
    pad = 1e-12 * np.maximum(1.0, np.maximum(np.abs(lo0), np.abs(hi0)))
    lo = np.broadcast_to((lo0 - pad)[:, None], (m_rows, k)).copy()
    hi = np.broadcast_to((hi0 + pad)[:, None], (m_rows, k)).copy()

    want = np.arange(1, k + 1)[None, :]  # counts >= want pull the upper bound in
    for _ in range(256):
        mid = 0.5 * (lo + hi)
        counts = _sturm_counts(diags, offsq, mid, pivmin)
        pull_hi = counts >= want
        hi = np.where(pull_hi, mid, hi)
        lo = np.where(pull_hi, lo, mid)
        width = hi - lo
        if width.max() <= tol:
            break
        # Stop if bisection has hit the floating-point resolution floor.
        mid2 = 0.5 * (lo + hi)
        if np.all((mid2 <= lo) | (mid2 >= hi)):
            break
    return 0.5 * (lo + hi)


def _certify_indices(
    diags: np.ndarray, offdiag: np.ndarray, energies: np.ndarray, context: str = ""
) -> None:
    """Check by Sturm counts that energies[n] is the (n+1)-th smallest.

    Requires count(E_n - CERT_TOL) <= n and count(E_n + CERT_TOL) >= n + 1
    for every row and index.
    """
    offsq = offdiag * offdiag
    pivmin = _SAFE_MIN * max(1.0, float(offsq.max()))
    k = energies.shape[1]
    below = _sturm_counts(diags, offsq, energies - CERT_TOL, pivmin)
    above = _sturm_counts(diags, offsq, energies + CERT_TOL, pivmin)
    idx = np.arange(k)[None, :]
    bad = (below > idx) | (above < idx + 1)
    if np.any(bad):
        row, col = np.argwhere(bad)[0]
        raise EigensolverError(
            f"Sturm certification failed for state {col}"
            + (f" ({context})" if context else "")
            + f": counts ({below[row, col]}, {above[row, col]}) around E={energies[row, col]!r}"
        )


def _lu_factor_shifted(
    diag: np.ndarray, offdiag: np.ndarray, sigma: float
) -> tuple[list, list, list, list, list]:
    """Pivoted LU of (H - sigma I) for a symmetric tridiagonal H.

    Returns (dl, d, du, du2, swap): multipliers, U diagonal, first and
    second superdiagonals, and per-step row-interchange flags. Exactly
    singular pivots are nudged to the smallest safe value, which is the
    standard inverse-iteration treatment.
    """
    n = len(diag)
    d = (diag - sigma).tolist()
    dl = offdiag.tolist()
    du = offdiag.tolist()
    du2 = [0.0] * max(0, n - 2)
    swap = [False] * (n - 1)

    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] == 0.0:
                d[i] = _SAFE_MIN
            fact = dl[i] / d[i]
            dl[i] = fact
            d[i + 1] -= fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = fact
            tmp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = tmp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            swap[i] = True
    if d[n - 1] == 0.0:
        d[n - 1] = _SAFE_MIN
    return dl, d, du, du2, swap


def _lu_solve(
    factors: tuple[list, list, list, list, list], rhs: np.ndarray
) -> np.ndarray:
    dl, d, du, du2, swap = factors
    n = len(d)
    b = rhs.tolist()
    for i in range(n - 1):
        if swap[i]:
            b[i], b[i + 1] = b[i + 1], b[i]
        b[i + 1] -= dl[i] * b[i]
    b[n - 1] /= d[n - 1]
    if n >= 2:
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i]
    return np.array(b)


def eigensolve_lowest(H: TridiagonalHamiltonian, k: int, dx: float = 1.0) -> Spectrum:
    """Lowest k eigenpairs of H.

    Eigenvalues come from Sturm bisection and are index-certified; vectors
    from shifted inverse iteration, reorthogonalized against lower states,
    normalized with quadrature weight dx, boundaries clamped to zero.
    """
    n = H.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    diags = H.diag[None, :]
    energies = _bisect_eigenvalues(diags, H.offdiag, k)[0]
    _certify_indices(diags, H.offdiag, energies[None, :])

    raw = np.empty((k, n))
    for s in range(k):
        factors = _lu_factor_shifted(H.diag, H.offdiag, energies[s])
        rng = np.random.default_rng(0x0EC5 + s)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        converged = False
        for _ in range(INVIT_MAX_ITER):
            w = _lu_solve(factors, v)
            for j in range(s):
                w -= (raw[j] @ w) * raw[j]
            nrm = np.linalg.norm(w)
            if nrm == 0.0 or not np.isfinite(nrm):
                v = rng.standard_normal(n)
                v /= np.linalg.norm(v)
                continue
            w /= nrm
            residual = np.max(np.abs(H.matvec(w) - energies[s] * w))
            if residual < INVIT_RESIDUAL_TOL:
                converged = True
                v = w
                break
            v = w
        if not converged:
            raise EigensolverError(
                f"inverse iteration did not converge for state {s} "
                f"(last residual {residual:.3e})"
            )
        raw[s] = v

    psis = np.empty((k, n))
    for s in range(k):
        v = raw[s].copy()
        peak = int(np.argmax(np.abs(v)))
        if v[peak] < 0:
            v = -v
        v /= math.sqrt(float(v @ v) * dx)
        v[0] = 0.0
        v[-1] = 0.0
        psis[s] = v
    return Spectrum(energies=energies, wavefunctions=psis)


def convergence_study(
    spec: PotentialSpec, x_max: float, n_list, k: int
) -> ConvergenceStudy:
    """Lowest-k energies for each grid size, with successive |E(N_i) - E(N_{i+1})|."""
    n_values = tuple(int(n) for n in n_list)
    if len(n_values) == 0:
        raise ValueError("n_list must be nonempty")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError(f"n_list must be strictly ascending, got {n_values}")
    rows = []
    for n in n_values:
        grid = make_grid(x_max, n)
        V = eval_potential(grid, spec)
        H = build_hamiltonian(grid, V, spec)
        if k > H.n:
            raise ValueError(f"k={k} exceeds grid size {H.n}")
        energies = _bisect_eigenvalues(H.diag[None, :], H.offdiag, k)[0]
        _certify_indices(H.diag[None, :], H.offdiag, energies[None, :], context=f"N={n}")
        rows.append(energies)
    energies = np.array(rows)
    diffs = np.abs(np.diff(energies, axis=0))
    return ConvergenceStudy(n_values=n_values, energies=energies, diffs=diffs)


def gen_quantum_dataset(
    spec_base: PotentialSpec, lambda_values, grid: QuantumGrid, k: int
) -> QuantumDataset:
    """One dataset row per quartic coefficient: potential plus lowest-k energies.

    Rows follow the input order of lambda_values. The bisection runs over
    all rows at once (they share the kinetic off-diagonal), which keeps the
    500-row generation in the seconds range.
    """
    lam = np.asarray(lambda_values, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("lambda_values must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(lam)):
        raise ValueError("lambda values must be finite")
    if np.any(lam < 0):
        bad = float(lam[lam < 0][0])
        raise ValueError(f"lambda values must be nonnegative, got {bad}")
    if not 1 <= k <= grid.n_points:
        raise ValueError(f"k must be in [1, {grid.n_points}], got {k}")

    x2 = grid.x * grid.x
    base = 0.5 * spec_base.m * spec_base.omega**2 * x2
    potentials = base[None, :] + lam[:, None] * (x2 * x2)[None, :]

    kin = spec_base.hbar**2 / (spec_base.m * grid.dx**2)
    diags = kin + potentials
    offdiag = np.full(grid.n_points - 1, -0.5 * kin)
    energies = _bisect_eigenvalues(diags, offdiag, k)
    try:
        _certify_indices(diags, offdiag, energies)
    except EigensolverError as exc:
        raise EigensolverError(f"{exc} (lambda sweep)") from exc

    return QuantumDataset(
        lambdas=lam.copy(),
        energies=energies,
        potentials=potentials,
        x_max=grid.x_max,
        n_points=grid.n_points,
        m=spec_base.m,
        omega=spec_base.omega,
        hbar=spec_base.hbar,
    )
