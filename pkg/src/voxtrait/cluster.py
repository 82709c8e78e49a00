"""Hierarchical agglomerative clustering of the acoustic correlation matrix.

Average linkage (UPGMA) over the correlation-row distance: leaf-pair
distances are computed once from the initial correlation matrix and the
linkage between two clusters is the mean of the member-pair leaf
distances. Merging never recomputes distances from merged data, which
keeps the merge sequence monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats import CorrelationMatrix, PrincipalComponent, distance_matrix, pca_first_component


@dataclass
class Merge:
    cluster_a: int
    cluster_b: int
    distance: float
    new_id: int
    size: int


@dataclass
class Dendrogram:
    """Full merge history over the leaf variables.

    Leaves are numbered 0..n-1 in input order; merge j creates cluster
    id n + j. For n leaves there are exactly n - 1 merges and the merge
    distances are non-decreasing.
    """

    merges: list[Merge]
    leaf_names: list[str]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_names)


@dataclass
class ClusterAssignment:
    """Partition of the leaf variables into k clusters.

    Cluster ids run 0..k-1 ordered by each cluster's smallest member
    index, so the labeling is deterministic for a given cut.
    """

    k: int
    membership: np.ndarray
    cluster_names: list[str]
    members: list[list[int]]


def build_dendrogram(R: CorrelationMatrix) -> Dendrogram:
    """UPGMA merge sequence over the correlation-row distances.

    At each step the pair of clusters with minimum average leaf-pair
    distance merges; ties break on the lowest (cluster_a, cluster_b) id
    pair. Leaf distances come from the |r| rows of ``R`` and stay fixed
    for the whole build.
    """
    n = R.dim
    if n < 2:
        raise ValueError("need at least 2 variables to cluster")
    D = distance_matrix(R)
    # sum of leaf-pair distances between current clusters; averages are
    # recovered by dividing by the member-count product
    sums = D.copy()
    sizes = {i: 1 for i in range(n)}
    active = list(range(n))
    pair_sum: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            pair_sum[(i, j)] = D[i, j]

    def linkage(a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        return pair_sum[key] / (sizes[a] * sizes[b])

    merges: list[Merge] = []
    next_id = n
    for _ in range(n - 1):
        best = None
        for ia in range(len(active)):
            for ib in range(ia + 1, len(active)):
                a, b = active[ia], active[ib]
                d = linkage(a, b)
                if best is None or d < best[0] - 1e-15 or (
                    abs(d - best[0]) <= 1e-15 and (a, b) < (best[1], best[2])
                ):
                    best = (d, a, b)
        d, a, b = best
        merged_size = sizes[a] + sizes[b]
        for c in active:
            if c in (a, b):
                continue
            key_a = (min(a, c), max(a, c))
            key_b = (min(b, c), max(b, c))
            pair_sum[(min(next_id, c), max(next_id, c))] = (
                pair_sum[key_a] + pair_sum[key_b]
            )
        sizes[next_id] = merged_size
        active = [c for c in active if c not in (a, b)] + [next_id]
        merges.append(Merge(a, b, float(d), next_id, merged_size))
        next_id += 1
    return Dendrogram(merges=merges, leaf_names=list(R.names))


def cut(dendro: Dendrogram, k: int) -> ClusterAssignment:
    """Partition into k clusters by undoing the last k - 1 merges."""
    n = dendro.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    parent = list(range(n + len(dendro.merges)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for merge in dendro.merges[: n - k]:
        parent[find(merge.cluster_a)] = merge.new_id
        parent[find(merge.cluster_b)] = merge.new_id
    groups: dict[int, list[int]] = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    members = sorted(groups.values(), key=lambda g: g[0])
    membership = np.empty(n, dtype=np.int64)
    names = []
    for cid, group in enumerate(members):
        for leaf in group:
            membership[leaf] = cid
        names.append("+".join(dendro.leaf_names[i] for i in group))
    return ClusterAssignment(k=k, membership=membership, cluster_names=names, members=members)


def represent_clusters(
    samples: np.ndarray, assignment: ClusterAssignment
) -> tuple[np.ndarray, list[PrincipalComponent]]:
    """Replace each cluster by a single representative column.

    Multi-member clusters are summarized by their leading principal
    component, re-standardized to zero mean and unit (population) SD;
    singleton clusters pass their column through unchanged.
    """
    X = np.asarray(samples, dtype=np.float64)
    out = np.empty((X.shape[0], assignment.k))
    components: list[PrincipalComponent] = []
    for cid, group in enumerate(assignment.members):
        if len(group) == 1:
            out[:, cid] = X[:, group[0]]
            components.append(PrincipalComponent(loadings=np.ones(1), explained_variance=1.0))
            continue
        component, proj = pca_first_component(X[:, group])
        sd = proj.std()
        if sd == 0.0:
            raise ValueError(
                f"degenerate cluster {assignment.cluster_names[cid]!r}: "
                "representative has zero variance"
            )
        out[:, cid] = (proj - proj.mean()) / sd
        components.append(component)
    return out, components
