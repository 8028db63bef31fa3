"""Spectral-scale task decomposition for heterogeneous teams.

The Fourier index set is partitioned into M frequency bands, one per
agent type. Types with wide sensor footprints take the low-frequency
bands (coarse structure); narrow-footprint types take high frequencies
(fine structure). Thresholds on the spatial frequency magnitude ``|k|``
are placed so each band's alpha-weighted spectral energy share is
proportional to the type's agent count.

Band targets are valid probability-map coefficient vectors: the banded
map is reconstructed on a grid, clipped at zero, renormalized and
re-transformed. Before clipping, the banded reconstructions sum exactly
to the full-map reconstruction (the transform is linear), which is the
key internal consistency check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateBandError
from .maps import clip_nonnegative, normalize
from .spectral import BasisSpec, map_coefficients, reconstruct_map

DEFAULT_TARGET_RESOLUTION = 128


@dataclass(frozen=True)
class BandPartition:
    """Assignment of basis indices to agent types.

    type_ids are ordered widest sensor footprint first; bands[i] holds
    the basis row indices owned by type_ids[i]. The k=0 carrier sits in
    band 0 for bookkeeping but re-enters every band's target map as the
    normalization term. thresholds are the M-1 increasing |k| cut
    values (a band ends at its threshold, inclusive).
    """

    type_ids: tuple
    bands: tuple
    thresholds: tuple

    @property
    def n_bands(self) -> int:
        return len(self.type_ids)

    def band_for_type(self, type_id: int) -> np.ndarray:
        for tid, band in zip(self.type_ids, self.bands):
            if tid == type_id:
                return band
        raise KeyError(f"no band for agent type {type_id}")

    def band_index_for_type(self, type_id: int) -> int:
        for i, tid in enumerate(self.type_ids):
            if tid == type_id:
                return i
        raise KeyError(f"no band for agent type {type_id}")


def _type_order_and_counts(specs):
    sigma = {}
    counts = {}
    for spec in specs:
        tid = spec.type_id
        counts[tid] = counts.get(tid, 0) + 1
        if tid in sigma:
            if sigma[tid] != spec.sensor.sigma:
                raise ConfigError(
                    f"agent type {tid} has inconsistent sensor sigma"
                )
        else:
            sigma[tid] = spec.sensor.sigma
    # widest footprint first; ties broken by type id for determinism
    order = sorted(sigma, key=lambda t: (-sigma[t], t))
    return order, [counts[t] for t in order]


def partition_bands(basis: BasisSpec, xi: np.ndarray, specs) -> BandPartition:
    """Split the index set into per-type frequency bands.

    Cut points between bands are chosen greedily on the cumulative
    alpha-weighted energy of ``xi`` over distinct |k| shells, targeting
    shares proportional to per-type agent counts. The k=0 coefficient
    carries no information about shape and is excluded from the energy
    accounting.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (basis.size,):
        raise ConfigError("coefficient vector does not match basis size")
    order, counts = _type_order_and_counts(specs)
    m = len(order)
    if m > 4:
        raise ConfigError(f"at most 4 agent types supported, got {m}")

    norm_sq = (basis.indices**2).sum(axis=1)
    if m == 1:
        all_idx = np.arange(basis.size)
        return BandPartition(type_ids=(order[0],), bands=(all_idx,), thresholds=())

    energies = basis.weights * xi**2
    energies = np.where(norm_sq == 0, 0.0, energies)

    shells = np.unique(norm_sq)
    nonzero_shells = shells[shells > 0]
    if len(nonzero_shells) < m:
        raise ConfigError(
            f"{m} bands need at least {m} distinct nonzero frequencies, "
            f"have {len(nonzero_shells)}"
        )
    shell_energy = np.array(
        [energies[norm_sq == s].sum() for s in nonzero_shells]
    )
    cum_energy = np.cumsum(shell_energy)
    total = cum_energy[-1]
    total_agents = sum(counts)
    n_shells = len(nonzero_shells)

    cuts = []  # index of last shell in each band, bands 0..m-2
    prev = -1
    for b in range(m - 1):
        target = total * sum(counts[: b + 1]) / total_agents
        lo = prev + 1
        hi = n_shells - (m - 1 - b) - 1  # leave one shell per later band
        gap = np.abs(cum_energy[lo : hi + 1] - target)
        cut = lo + int(np.argmin(gap))  # argmin takes the first minimum
        cuts.append(cut)
        prev = cut

    thresholds = tuple(float(np.sqrt(nonzero_shells[c])) for c in cuts)
    bounds = [-np.inf] + [nonzero_shells[c] for c in cuts] + [np.inf]
    bands = []
    for b in range(m):
        mask = (norm_sq > bounds[b]) & (norm_sq <= bounds[b + 1])
        if b == 0:
            mask |= norm_sq == 0
        bands.append(np.flatnonzero(mask))
    return BandPartition(
        type_ids=tuple(order), bands=tuple(bands), thresholds=thresholds
    )


def band_masked(xi: np.ndarray, partition: BandPartition, band: int) -> np.ndarray:
    """Coefficients restricted to one band, zero elsewhere (no carrier
    duplication; summing these over all bands recovers ``xi`` exactly)."""
    out = np.zeros_like(np.asarray(xi, dtype=float))
    idx = partition.bands[band]
    out[idx] = np.asarray(xi, dtype=float)[idx]
    return out


def band_targets(
    xi: np.ndarray,
    partition: BandPartition,
    basis: BasisSpec,
    resolution: int = DEFAULT_TARGET_RESOLUTION,
):
    """Per-type target coefficient vectors.

    Each band keeps its own coefficients plus the k=0 carrier, is
    reconstructed on a grid, clipped at zero, renormalized, and
    re-transformed. Returned list is aligned with partition.type_ids.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (basis.size,):
        raise ConfigError("coefficient vector does not match basis size")
    if partition.n_bands == 1:
        return [xi.copy()]

    zero_row = int(np.flatnonzero((basis.indices == 0).all(axis=1))[0])
    h0 = basis.normalizations[zero_row]
    targets = []
    for b in range(partition.n_bands):
        banded = band_masked(xi, partition, b)
        banded[zero_row] = xi[zero_row]  # carrier keeps the mean positive
        grid = reconstruct_map(banded, basis, resolution)
        if grid.cells.max() <= 0:
            raise DegenerateBandError(
                f"band {b} (type {partition.type_ids[b]}) reconstructs to a "
                "nonpositive map"
            )
        repaired = normalize(clip_nonnegative(grid))
        target = map_coefficients(repaired, basis)
        target[zero_row] = 1.0 / h0  # normalization carrier is analytic
        targets.append(target)
    return targets
