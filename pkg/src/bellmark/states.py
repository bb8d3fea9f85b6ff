"""State constructors: GHZ family, products over partitions, random k-separable mixtures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import ValidationError
from .linalg import DensityOperator, check_dim, permute_sites, tensor_all


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks covering sites ``0..n-1`` (0-based)."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, n: int, blocks: Sequence[Sequence[int]]):
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValidationError("n must be a positive integer", field="n")
        blocks = tuple(tuple(int(j) for j in b) for b in blocks)
        if not blocks or any(len(b) == 0 for b in blocks):
            raise ValidationError("every block must be nonempty", field="blocks")
        flat = [j for b in blocks for j in b]
        if len(set(flat)) != len(flat):
            raise ValidationError("a site index appears in two blocks", field="blocks")
        if sorted(flat) != list(range(n)):
            missing = sorted(set(range(n)) - set(flat))
            extra = sorted(set(flat) - set(range(n)))
            raise ValidationError(
                f"blocks must cover every site exactly once (missing {missing}, out of range {extra})",
                field="blocks",
            )
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_one_based(cls, n: int, blocks) -> "Partition":
        try:
            zero = [[int(j) - 1 for j in b] for b in blocks]
        except (TypeError, ValueError):
            raise ValidationError("blocks must be lists of integers", field="blocks") from None
        return cls(n, zero)

    def one_based(self) -> list[list[int]]:
        return [[j + 1 for j in b] for b in self.blocks]

    @property
    def k(self) -> int:
        return len(self.blocks)


class PartitionProfile(NamedTuple):
    k: int
    m: int


def partition_profile(partition: Partition) -> PartitionProfile:
    """Block count and number of singleton blocks."""
    return PartitionProfile(len(partition.blocks), sum(len(b) == 1 for b in partition.blocks))


def enumerate_partitions(n: int) -> Iterator[Partition]:
    """All set partitions of ``0..n-1`` (restricted growth strings)."""

    def grow(i, blocks):
        if i == n:
            yield Partition(n, blocks)
            return
        for b in range(len(blocks)):
            blocks[b].append(i)
            yield from grow(i + 1, blocks)
            blocks[b].pop()
        blocks.append([i])
        yield from grow(i + 1, blocks)
        blocks.pop()

    yield from grow(0, [])


def ghz_vector(n: int) -> np.ndarray:
    d = 2 ** n
    check_dim(d)
    psi = np.zeros(d, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def ghz(n: int) -> DensityOperator:
    if n < 2:
        raise ValidationError("GHZ state needs n >= 2", field="n")
    psi = ghz_vector(n)
    return DensityOperator(np.outer(psi, psi.conj()), (2,) * n)


def ghz_noise(n: int, x: float) -> DensityOperator:
    """``x |GHZ><GHZ| + (1 - x) I / 2^n``."""
    if not 0 <= x <= 1:
        raise ValidationError(f"x={x} outside [0, 1]", field="x")
    pure = ghz(n).matrix
    d = pure.shape[0]
    return DensityOperator(x * pure + (1 - x) / d * np.eye(d), (2,) * n)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble density matrix ``G G^† / tr(G G^†)``."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _resolve_site_dims(partition: Partition, site_dims) -> tuple[int, ...]:
    if site_dims is None:
        return (2,) * partition.n
    site_dims = tuple(int(d) for d in site_dims)
    if len(site_dims) != partition.n:
        raise ValidationError("need one dimension per site", field="site_dims")
    return site_dims


def product_over_partition(partition: Partition, block_states, site_dims=None) -> DensityOperator:
    """Tensor product of block states, reordered so sites run 0..n-1.

    ``site_dims`` defaults to the dims carried by the block states when they
    match the block sizes, and to qubits otherwise.
    """
    if len(block_states) != partition.k:
        raise ValidationError(
            f"{partition.k} blocks but {len(block_states)} states", field="block_states"
        )
    if site_dims is None:
        dims = [2] * partition.n
        for block, st in zip(partition.blocks, block_states):
            if isinstance(st, DensityOperator) and len(st.site_dims) == len(block):
                for j, d in zip(block, st.site_dims):
                    dims[j] = d
        site_dims = dims
    site_dims = _resolve_site_dims(partition, site_dims)
    mats = []
    for i, (block, st) in enumerate(zip(partition.blocks, block_states)):
        m = st.matrix if isinstance(st, DensityOperator) else np.asarray(st, dtype=complex)
        want = int(np.prod([site_dims[j] for j in block]))
        if m.shape != (want, want):
            raise ValidationError(
                f"block {i} state has shape {m.shape}, expected {(want, want)}",
                field="block_states",
            )
        mats.append(m)
    order = [j for b in partition.blocks for j in b]
    full = permute_sites(tensor_all(mats), [site_dims[j] for j in order], order)
    return DensityOperator(full, site_dims)


def random_k_separable(
    partition: Partition,
    terms: int,
    seed,
    site_dims=None,
    rank: int | None = None,
) -> DensityOperator:
    """Random mixture of ``terms`` products of Ginibre block states.

    Mixture weights are uniform on the simplex.  ``rank`` limits the Ginibre
    rank of every block state (``rank=1`` gives pure blocks).
    """
    if terms < 1:
        raise ValidationError("terms must be >= 1", field="terms")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    site_dims = _resolve_site_dims(partition, site_dims)
    block_dims = [int(np.prod([site_dims[j] for j in b])) for b in partition.blocks]
    check_dim(int(np.prod(site_dims)))
    weights = rng.dirichlet(np.ones(terms)) if terms > 1 else np.ones(1)
    order = [j for b in partition.blocks for j in b]
    total = 0
    for w in weights:
        mats = [random_density(d, rng, None if rank is None else min(rank, d)) for d in block_dims]
        total = total + w * tensor_all(mats)
    full = permute_sites(total, [site_dims[j] for j in order], order)
    return DensityOperator(full, site_dims)
