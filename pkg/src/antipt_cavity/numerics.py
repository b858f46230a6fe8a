"""Dense complex linear algebra for small non-Hermitian matrices.

Everything here works on plain numpy arrays.  Eigenpairs come back with
both right and left eigenvectors, normalized biorthogonally where the pair
is far enough from an exceptional point for that to make sense.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "NEAR_DEFECTIVE",
    "NumericsError",
    "EigenError",
    "SingularMatrixError",
    "DegreeError",
    "Spectrum",
    "eig",
    "cardano",
    "cubic_residual",
    "solve",
    "expm_times",
]

NEAR_DEFECTIVE = 1e-6
MAX_DIM = 64

# below this condition the eigenbasis propagator loses too many digits
_EXPM_EIG_CONDITION = 1e-3


class NumericsError(ArithmeticError):
    pass


class EigenError(NumericsError):
    pass


class SingularMatrixError(NumericsError):
    pass


class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with paired right/left eigenvectors stored as columns.

    ``condition[n]`` is ``|<L_n|R_n>|`` for unit-norm vectors, measured before
    the biorthogonal rescaling.  Pairs below ``NEAR_DEFECTIVE`` keep unit-norm
    left vectors.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    @property
    def near_defective(self) -> np.ndarray:
        return self.condition < NEAR_DEFECTIVE

    def pair(self, n: int) -> tuple[complex, np.ndarray, np.ndarray]:
        return complex(self.values[n]), self.right[:, n], self.left[:, n]


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _order(values: np.ndarray, scale: float) -> np.ndarray:
    # real parts equal to ~1e-9 relative count as ties
    tol = 1e-9 * max(scale, 1.0)
    key_re = np.round(values.real / tol) * tol
    return np.lexsort((values.imag, key_re))


def _clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for n, v in enumerate(values):
        for g in groups:
            if abs(values[g[0]] - v) <= tol:
                g.append(n)
                break
        else:
            groups.append([n])
    return groups


def eig(a) -> Spectrum:
    """Full eigensystem of a square complex matrix, sorted by (Re, Im)."""
    a = _as_square(a)
    norm = float(np.linalg.norm(a, 2)) if a.size else 0.0
    try:
        values, left, right = scipy.linalg.eig(a, left=True, right=True)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigenvalue iteration did not converge: {exc}") from exc

    idx = _order(values, norm)
    values, left, right = values[idx], left[:, idx], right[:, idx]
    right = right / np.linalg.norm(right, axis=0)
    left = left / np.linalg.norm(left, axis=0)
    overlaps = np.einsum("in,in->n", left.conj(), right)
    condition = np.abs(overlaps)

    # degenerate but diagonalizable clusters need biorthogonalizing as a block
    for group in _clusters(values, 1e-10 * max(norm, 1.0)):
        if np.any(condition[group] < NEAR_DEFECTIVE):
            continue
        if len(group) == 1:
            n = group[0]
            left[:, n] = left[:, n] / overlaps[n].conj()
            continue
        block = left[:, group].conj().T @ right[:, group]
        if np.linalg.cond(block) > 1.0 / NEAR_DEFECTIVE:
            condition[group] = 0.0
            continue
        left[:, group] = left[:, group] @ np.linalg.inv(block).conj().T

    return Spectrum(values=values, right=right, left=left, condition=condition)


def cubic_residual(coeffs, x: complex) -> float:
    """|p(x)| relative to the size of the individual terms."""
    c3, c2, c1, c0 = coeffs
    value = ((c3 * x + c2) * x + c1) * x + c0
    ax = abs(x)
    scale = abs(c3) * ax**3 + abs(c2) * ax**2 + abs(c1) * ax + abs(c0)
    return abs(value) / scale if scale > 0 else abs(value)


def cardano(c3: complex, c2: complex, c1: complex, c0: complex) -> np.ndarray:
    """All three roots of ``c3 x^3 + c2 x^2 + c1 x + c0`` by Cardano's formula.

    The closed-form roots are polished with at most a few Newton steps; a step
    is kept only when it lowers the residual, so clustered roots are left as
    the formula produced them.
    """
    if c3 == 0:
        raise DegreeError("leading coefficient is zero; not a cubic")
    a, b, c, d = (complex(x) for x in (c3, c2, c1, c0))

    # work on the monic cubic in x = s*y with O(1) coefficients
    p2, p1, p0 = b / a, c / a, d / a
    s = max(abs(p2), abs(p1) ** 0.5, abs(p0) ** (1.0 / 3.0))
    if s == 0:
        return np.zeros(3, dtype=complex)
    q2, q1, q0 = p2 / s, p1 / s / s, p0 / s / s / s

    d0 = q2 * q2 - 3 * q1
    d1 = 2 * q2**3 - 9 * q2 * q1 + 27 * q0
    disc = np.sqrt(d1 * d1 - 4 * d0**3 + 0j)
    inner = (d1 + disc) / 2 if abs(d1 + disc) >= abs(d1 - disc) else (d1 - disc) / 2
    big_c = inner ** (1.0 / 3.0) if abs(inner) > 1e-300 else 0j

    if big_c == 0:
        roots = np.full(3, -s * q2 / 3, dtype=complex)
    else:
        xi = np.exp(2j * np.pi / 3)
        roots = s * np.array(
            [-(q2 + xi**k * big_c + d0 / (xi**k * big_c)) / 3 for k in range(3)],
            dtype=complex,
        )

    coeffs = (a, b, c, d)
    for k in range(3):
        x = roots[k]
        res = cubic_residual(coeffs, x)
        for _ in range(4):
            deriv = (3 * a * x + 2 * b) * x + c
            if deriv == 0 or res == 0:
                break
            with np.errstate(all="ignore"):
                trial = x - (((a * x + b) * x + c) * x + d) / deriv
                trial_res = cubic_residual(coeffs, trial)
            if not np.isfinite(trial_res) or trial_res >= res:
                break
            x, res = trial, trial_res
        roots[k] = x

    return roots[_order(roots, max(abs(r) for r in roots))]


def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` by LU, refusing near-singular matrices."""
    a = _as_square(a)
    b = np.asarray(b, dtype=complex)
    norm = np.linalg.norm(a, np.inf)
    with warnings.catch_warnings():
        # singularity is reported below with our own exception
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if norm == 0 or pivots.min() <= 1e-14 * norm:
        raise SingularMatrixError(
            f"matrix is singular to working precision (smallest pivot {pivots.min():.3e})"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def expm_times(a, v, t: float) -> np.ndarray:
    """``exp(-i a t) v``.

    Uses the biorthogonal eigenbasis when every pair is well conditioned and
    falls back to scaling-and-squaring otherwise.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    a = _as_square(a)
    v = np.asarray(v, dtype=complex)
    if t == 0 or not np.any(a):
        return v.copy()
    spec = eig(a)
    if spec.condition.min() >= _EXPM_EIG_CONDITION:
        coeffs = spec.left.conj().T @ v
        return spec.right @ (np.exp(-1j * spec.values * t) * coeffs)
    return scipy.linalg.expm(-1j * a * t) @ v
