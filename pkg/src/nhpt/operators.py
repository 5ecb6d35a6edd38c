"""Dense operator types, Hermitian eigendecomposition and basis changes.

Energies are in units with hbar = 1, so an eigenvalue of H0 is directly the
angular frequency of the corresponding stationary state.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10
_PHASE_TIE_TOL = 1e-8


class InvariantViolation(ValueError):
    """Raised when an operator does not satisfy a required structural property."""


class DimensionMismatch(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GeneralOperator:
    """An N x N complex matrix (N >= 2)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvariantViolation(f"operator must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise InvariantViolation("operator dimension must be at least 2")
        if not np.all(np.isfinite(a)):
            raise InvariantViolation("operator has non-finite entries")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def max_asymmetry(self) -> float:
        """Largest |H[i, j] - conj(H[j, i])|."""
        a = self.entries
        return float(np.max(np.abs(a - a.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.max_asymmetry() <= tol

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class HermitianOperator(GeneralOperator):
    def __post_init__(self):
        super().__post_init__()
        asym = self.max_asymmetry()
        if asym > HERMITIAN_TOL:
            raise InvariantViolation(
                f"operator is not Hermitian: max |H - H^dagger| = {asym:.3e}"
            )


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Sorted eigenvalues of H0 with orthonormal eigenvectors as columns."""

    omegas: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float)
        v = np.array(self.vectors, dtype=complex)
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.omegas.shape[0]

    @property
    def spread(self) -> float:
        return float(self.omegas[-1] - self.omegas[0])

    def vector(self, n: int) -> np.ndarray:
        return self.vectors[:, n]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    k = int(np.flatnonzero(mags >= mags.max() - _PHASE_TIE_TOL)[0])
    return v * (abs(v[k]) / v[k])


def _canonical_block(vecs: np.ndarray) -> np.ndarray:
    # Gram-Schmidt of the block projector applied to e_0, e_1, ...; the basis
    # then does not depend on how LAPACK happened to mix the degenerate vectors.
    n, k = vecs.shape
    proj = vecs @ vecs.conj().T
    out: list[np.ndarray] = []
    for j in range(n):
        u = proj[:, j].copy()
        for q in out:
            u -= q * np.vdot(q, u)
        nrm = np.linalg.norm(u)
        if nrm > 1e-8:
            out.append(u / nrm)
        if len(out) == k:
            break
    return np.column_stack(out)


def eigendecompose(h0: HermitianOperator | np.ndarray) -> EigenSystem:
    """Eigenvalues (ascending) and phase-fixed orthonormal eigenvectors of H0."""
    if not isinstance(h0, HermitianOperator):
        h0 = HermitianOperator(np.asarray(h0))
    a = h0.entries
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    v = v.copy()
    i = 0
    n = len(w)
    while i < n:
        j = i + 1
        while j < n and w[j] - w[j - 1] < DEGENERACY_TOL:
            j += 1
        if j - i > 1:
            v[:, i:j] = _canonical_block(v[:, i:j])
            w[i:j] = w[i:j].mean()
        i = j
    for k in range(n):
        v[:, k] = _fix_phase(v[:, k])
    return EigenSystem(w, v)


def matrix_elements(h1: GeneralOperator | np.ndarray, basis: EigenSystem) -> GeneralOperator:
    """Matrix of <l| H1 |s> in the eigenbasis of H0."""
    a = np.asarray(h1, dtype=complex)
    if a.shape != (basis.dim, basis.dim):
        raise DimensionMismatch(f"H1 has shape {a.shape}, basis has dimension {basis.dim}")
    v = basis.vectors
    return GeneralOperator(v.conj().T @ a @ v)


def _check_vec(x, basis: EigenSystem) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != (basis.dim,):
        raise DimensionMismatch(f"state has shape {x.shape}, basis has dimension {basis.dim}")
    return x


def bare_to_eigen(psi, basis: EigenSystem, t: float = 0.0) -> np.ndarray:
    """Interaction-picture amplitudes c_l = exp(i w_l t) <l|psi>."""
    psi = _check_vec(psi, basis)
    return np.exp(1j * basis.omegas * t) * (basis.vectors.conj().T @ psi)


def eigen_to_bare(c, basis: EigenSystem, t: float = 0.0) -> np.ndarray:
    """Inverse of :func:`bare_to_eigen`: psi = sum_l c_l exp(-i w_l t) |l>."""
    c = _check_vec(c, basis)
    return basis.vectors @ (np.exp(-1j * basis.omegas * t) * c)


def read_operator(path: str | Path) -> np.ndarray:
    """Read an operator file: first line N, then N rows of N "re,im" tokens."""
    lines = [
        ln.split("#", 1)[0].strip()
        for ln in Path(path).read_text().splitlines()
    ]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty operator file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"{path}: first line must be the dimension, got {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(rows)}")
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        toks = row.split()
        if len(toks) != n:
            raise ValueError(f"{path}: row {i + 1} has {len(toks)} entries, expected {n}")
        for j, tok in enumerate(toks):
            parts = tok.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}: entry {tok!r} is not a 're,im' pair")
            out[i, j] = complex(float(parts[0]), float(parts[1]))
    return out


def write_operator(path: str | Path, op) -> None:
    a = np.asarray(op, dtype=complex)
    lines = [str(a.shape[0])]
    for row in a:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")
