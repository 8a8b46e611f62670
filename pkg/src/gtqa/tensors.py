"""Dense complex tensor kernel.

:class:`DenseTensor` pairs an ndarray with unique axis labels so that
contractions and SVD splits can be written in terms of names instead of
positions. The array-level helpers (:func:`svd`, :func:`matrix_sqrt`, ...)
are what the tensor-network code calls in its inner loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import DegenerateError, DomainError, LabelError, NumericalError, ShapeError

__all__ = [
    "DenseTensor",
    "contract",
    "svd",
    "svd_split",
    "matrix_sqrt",
    "matrix_inv_sqrt",
    "random_density_matrix",
    "check_hermitian",
    "trace_norm",
    "DEFAULT_RCOND",
]

DEFAULT_RCOND = 1e-12
HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class DenseTensor:
    data: np.ndarray
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        labels = tuple(self.labels)
        if data.ndim != len(labels):
            raise ShapeError(f"{data.ndim} axes but {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate labels in {labels}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def axes(self) -> list[tuple[Hashable, int]]:
        return list(zip(self.labels, self.data.shape))

    def axis(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"label {label!r} not in {self.labels}") from None

    def dim(self, label: Hashable) -> int:
        return self.data.shape[self.axis(label)]

    def transpose(self, labels: Sequence[Hashable]) -> "DenseTensor":
        perm = [self.axis(lab) for lab in labels]
        if len(perm) != self.data.ndim:
            raise LabelError("transpose must list every label exactly once")
        return DenseTensor(self.data.transpose(perm), tuple(labels))

    def relabel(self, mapping: dict) -> "DenseTensor":
        return DenseTensor(self.data, tuple(mapping.get(lab, lab) for lab in self.labels))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


def contract(t1: DenseTensor, t2: DenseTensor, pairs: Iterable[tuple[Hashable, Hashable]]) -> DenseTensor:
    """Sum over the paired axes. Free axes keep their labels, ``t1``'s first."""
    pairs = list(pairs)
    ax1 = [t1.axis(p) for p, _ in pairs]
    ax2 = [t2.axis(q) for _, q in pairs]
    for (p, q), i, j in zip(pairs, ax1, ax2):
        if t1.shape[i] != t2.shape[j]:
            raise ShapeError(f"cannot pair {p!r} (dim {t1.shape[i]}) with {q!r} (dim {t2.shape[j]})")
    free1 = [lab for k, lab in enumerate(t1.labels) if k not in ax1]
    free2 = [lab for k, lab in enumerate(t2.labels) if k not in ax2]
    if set(free1) & set(free2):
        raise LabelError(f"free labels collide: {set(free1) & set(free2)}")
    data = np.tensordot(t1.data, t2.data, axes=(ax1, ax2))
    return DenseTensor(data, tuple(free1 + free2))


def _fix_phases(u: np.ndarray, vh: np.ndarray) -> None:
    """Rotate each singular pair so the largest |entry| of the U column is real positive."""
    if u.shape[1] == 0:
        return
    idx = np.argmax(np.abs(u), axis=0)
    piv = u[idx, np.arange(u.shape[1])]
    mag = np.abs(piv)
    phase = np.where(mag > 0, piv / np.where(mag > 0, mag, 1.0), 1.0)
    u *= phase.conj()[None, :]
    vh *= phase[:, None]


def svd(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with descending singular values and the fixed phase convention."""
    try:
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            import scipy.linalg

            u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"SVD did not converge: {exc}") from exc
    u = np.array(u, dtype=complex)
    vh = np.array(vh, dtype=complex)
    _fix_phases(u, vh)
    return u, s, vh


def svd_split(
    t: DenseTensor,
    left_labels: Iterable[Hashable],
    bond_label: Hashable = "bond",
) -> tuple[DenseTensor, np.ndarray, DenseTensor]:
    """Split ``t`` into ``U[left..., bond] * s[bond] * Vh[bond, right...]``."""
    left = list(left_labels)
    if not left or len(left) >= len(t.labels):
        raise LabelError("left_labels must be a nonempty proper subset of the labels")
    for lab in left:
        t.axis(lab)
    right = [lab for lab in t.labels if lab not in left]
    if bond_label in t.labels:
        raise LabelError(f"bond label {bond_label!r} already used")
    tt = t.transpose(left + right)
    lshape = tt.shape[: len(left)]
    rshape = tt.shape[len(left):]
    mat = tt.data.reshape(int(np.prod(lshape)), int(np.prod(rshape)))
    u, s, vh = svd(mat)
    k = s.size
    U = DenseTensor(u.reshape(*lshape, k), tuple(left) + (bond_label,))
    Vh = DenseTensor(vh.reshape(k, *rshape), (bond_label,) + tuple(right))
    return U, s, Vh


def check_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    scale = max(np.abs(m).max(initial=0.0), 1e-300)
    if np.abs(m - m.conj().T).max(initial=0.0) > rtol * scale:
        raise DomainError("matrix is not Hermitian within tolerance")
    return 0.5 * (m + m.conj().T)


def _eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolve failed: {exc}") from exc


def matrix_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Slightly negative eigenvalues (roundoff) are clamped to zero; anything
    below ``-1e-12 * max|eig|`` is rejected.
    """
    m = check_hermitian(m)
    w, v = _eigh(m)
    top = max(np.abs(w).max(initial=0.0), 1e-300)
    if w.min(initial=0.0) < -1e-12 * top:
        raise DomainError(f"matrix is not positive semidefinite (min eig {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def matrix_inv_sqrt(m: np.ndarray, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Pseudo-inverse square root: eigenvalues ``<= rcond * max`` map to 0."""
    m = check_hermitian(m)
    w, v = _eigh(m)
    top = w.max(initial=0.0)
    if top <= 0:
        raise DegenerateError("matrix has no positive eigenvalue")
    keep = w > rcond * top
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ v.conj().T


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """``A A^dagger / Tr(A A^dagger)`` with ``A`` complex Gaussian."""
    if dim < 1:
        raise DomainError("dim must be positive")
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def trace_norm(m: np.ndarray, hermitian: bool | None = None) -> float:
    """Sum of singular values.

    Hermitian input is handled through its eigenvalues; pass
    ``hermitian=True`` to skip the check when the caller knows.
    """
    m = np.asarray(m)
    if m.shape == (1, 1):
        return float(abs(m[0, 0]))
    if hermitian:
        return float(np.abs(np.linalg.eigvalsh(m)).sum())
    if hermitian is None and np.allclose(m, m.conj().T, rtol=0, atol=1e-13 * max(np.abs(m).max(initial=0.0), 1e-300)):
        return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())
