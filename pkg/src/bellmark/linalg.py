"""Dense complex operator algebra on small multi-site Hilbert spaces.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``.  Site
ordering of a tensor product follows the Kronecker convention: the first
factor is the most significant index.
"""
from __future__ import annotations

import functools
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DimensionCapError, ValidationError

HERMITIAN_TOL = 1e-10
PSD_TOL = -1e-9
TRACE_TOL = 1e-10
IMAG_RESIDUE_TOL = 1e-7
DEFAULT_DIM_CAP = 4096

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


def dim_cap() -> int:
    raw = os.environ.get("BELLMARK_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(f"not an integer: {raw!r}", field="BELLMARK_DIM_CAP") from None
    if cap < 1:
        raise ValidationError("must be positive", field="BELLMARK_DIM_CAP")
    return cap


def check_dim(dim: int) -> int:
    cap = dim_cap()
    if dim > cap:
        raise DimensionCapError(
            f"dimension {dim} exceeds cap {cap} (set BELLMARK_DIM_CAP to raise it)"
        )
    return dim


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}", field=name)
    return a


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def require_hermitian(m: np.ndarray, name: str = "matrix", tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(m, name)
    if not is_hermitian(m, tol):
        dev = float(np.max(np.abs(m - m.conj().T)))
        raise ContractViolation(f"not Hermitian (max deviation {dev:.3g})", field=name)
    return m


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.kron without its generic-shape overhead; 2-D operands only
    (p, q), (r, s) = a.shape, b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(p * r, q * s)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``a ⊗ b`` subject to the dimension cap."""
    check_dim(a.shape[0] * b.shape[0])
    return _kron(a, b)


def tensor_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    if not ops:
        return np.ones((1, 1), dtype=complex)
    check_dim(int(np.prod([op.shape[0] for op in ops])))
    return functools.reduce(_kron, ops)


def hermitian_eigenvalues(m: np.ndarray, vectors: bool = False):
    """Ascending eigenvalues of a Hermitian matrix.

    With ``vectors=True`` returns ``(values, V)`` and checks the
    reconstruction residual ``max|M - V diag(w) V^†| <= 1e-8``.
    """
    m = require_hermitian(m)
    if not vectors:
        return np.linalg.eigvalsh(m)
    w, v = np.linalg.eigh(m)
    resid = np.max(np.abs(m - (v * w) @ v.conj().T))
    if resid > 1e-8:
        raise ContractViolation(f"eigendecomposition residual {resid:.3g} above 1e-8")
    return w, v


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    m = as_matrix(m)
    return float(np.sqrt(max(0.0, np.linalg.eigvalsh(m.conj().T @ m)[-1])))


def expectation(rho, m: np.ndarray) -> float:
    """``tr(rho m)`` for Hermitian ``m``; the imaginary residue must be tiny."""
    r = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho, "rho")
    m = as_matrix(m)
    if r.shape != m.shape:
        raise ContractViolation(f"dimension mismatch {r.shape} vs {m.shape}")
    # tr(AB) without forming AB
    val = np.einsum("ij,ji->", r, m)
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise ContractViolation(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real)


def permute_sites(op: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of ``op``.

    ``op`` acts on factors labelled ``order`` (in Kronecker order) with local
    dimensions ``dims``.  The result acts on the same factors sorted by label.
    """
    dims = list(dims)
    n = len(dims)
    perm = list(np.argsort(order, kind="stable"))
    if perm == list(range(n)):
        return op
    t = op.reshape(dims + dims)
    t = t.transpose(perm + [n + p for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def contract_local(matrix: np.ndarray, dims: Sequence[int], stacks: Sequence[np.ndarray]) -> np.ndarray:
    """All expectations ``tr(rho ⊗_j S_j[r_j])`` at once.

    ``stacks[j]`` has shape ``(k_j, d_j, d_j)``; the result has shape
    ``(k_1, ..., k_n)``.
    """
    dims = list(dims)
    t = matrix.reshape(dims + dims)
    for j, s in enumerate(stacks):
        remaining = len(dims) - j
        t = np.tensordot(t, s, axes=([0, remaining], [2, 1]))
    return t


def partial_trace(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = [letters[j] for j in range(n)]
    cols = [letters[n + j] if j in keep else letters[j] for j in range(n)]
    out = "".join(rows[j] for j in keep) + "".join(cols[j] for j in keep)
    t = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([dims[j] for j in keep])) if keep else 1
    return t.reshape(d, d)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Validated density matrix with its local site dimensions."""

    matrix: np.ndarray
    site_dims: tuple[int, ...]

    def __init__(self, matrix, site_dims: Sequence[int] | None = None, validate: bool = True):
        m = as_matrix(matrix, "density")
        if site_dims is None:
            site_dims = (m.shape[0],)
        site_dims = tuple(int(d) for d in site_dims)
        if any(d < 1 for d in site_dims) or int(np.prod(site_dims)) != m.shape[0]:
            raise ValidationError(
                f"site dims {site_dims} do not multiply to {m.shape[0]}", field="site_dims"
            )
        check_dim(m.shape[0])
        if validate:
            if not is_hermitian(m):
                raise ValidationError("density is not Hermitian", field="density")
            tr = np.trace(m)
            if abs(tr - 1) > TRACE_TOL:
                raise ValidationError(f"trace {tr.real:.12g} is not 1", field="density")
            lo = np.linalg.eigvalsh(m)[0]
            if lo < PSD_TOL:
                raise ValidationError(f"minimum eigenvalue {lo:.3g} is negative", field="density")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "site_dims", site_dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return len(self.site_dims)

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)
