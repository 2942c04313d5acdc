"""
Average linkage (UPGMA) agglomerative clustering over a divergence matrix.

Node numbering follows the usual linkage-matrix convention: leaves are
``0 .. m-1`` in matrix order and merge ``t`` creates node ``m + t``.
"""
import re
import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Tuple
from typing import Optional

from rolecluster.divergence import DistanceMatrix

logger = logging.getLogger(__name__)

_DOT_COLOURS = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """
    Merge tree. ``merges`` has ``len(leaves) - 1`` entries with
    non-decreasing heights.
    """
    leaves: Tuple[str, ...]
    merges: Tuple[Merge, ...]
    linkage: str = "average"

    def __len__(self) -> int:
        return len(self.leaves)

    def to_linkage(self) -> np.ndarray:
        """Linkage matrix in the (left, right, height, size) row layout."""
        return np.array([[m.left, m.right, m.height, m.size]
                         for m in self.merges], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "leaves": list(self.leaves),
            "linkage": self.linkage,
            "merges": [
                {"left": m.left, "right": m.right,
                 "height": m.height, "size": m.size}
                for m in self.merges
            ],
        }

    def _heights(self) -> Dict[int, float]:
        heights = {i: 0.0 for i in range(len(self.leaves))}
        for t, merge in enumerate(self.merges):
            heights[len(self.leaves) + t] = merge.height
        return heights

    def to_newick(self) -> str:
        """
        Newick string; a branch length is the parent height minus the child
        height.
        """
        m = len(self.leaves)
        heights = self._heights()

        def label(name: str) -> str:
            if re.fullmatch(r"[A-Za-z0-9_.\-]+", name):
                return name
            return "'" + name.replace("'", "''") + "'"

        def render(node: int, parent_height: float) -> str:
            length = format(parent_height - heights[node], ".17g")
            if node < m:
                return f"{label(self.leaves[node])}:{length}"
            merge = self.merges[node - m]
            inner = (f"{render(merge.left, merge.height)},"
                     f"{render(merge.right, merge.height)}")
            return f"({inner}):{length}"

        if m == 1:
            return f"{label(self.leaves[0])};"
        root = 2 * m - 2
        merge = self.merges[-1]
        return (f"({render(merge.left, heights[root])},"
                f"{render(merge.right, heights[root])});")

    def to_dot(self, assignment: Optional["ClusterAssignment"] = None) -> str:
        """
        Graphviz digraph of the tree. Leaves are coloured by cluster when an
        assignment is given.
        """
        m = len(self.leaves)
        lines = ["digraph dendrogram {", "  rankdir=LR;",
                 "  node [shape=point];"]
        for i, name in enumerate(self.leaves):
            attrs = f'shape=box, label="{name}"'
            if assignment is not None:
                colour = _DOT_COLOURS[assignment.labels[name]
                                      % len(_DOT_COLOURS)]
                attrs += f', style=filled, fillcolor="{colour}"'
            lines.append(f"  n{i} [{attrs}];")
        for t, merge in enumerate(self.merges):
            node = m + t
            lines.append(
                f'  n{node} [xlabel="{format(merge.height, ".4g")}"];')
            lines.append(f"  n{node} -> n{merge.left};")
            lines.append(f"  n{node} -> n{merge.right};")
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ClusterAssignment:
    """
    Flat partition into ``k`` clusters. Cluster ids follow the order of each
    cluster's first member in leaf order.
    """
    k: int
    labels: Dict[str, int]

    def clusters(self) -> List[List[str]]:
        members = [[] for _ in range(self.k)]
        for agent, cluster in self.labels.items():
            members[cluster].append(agent)
        return members

    def members(self, cluster: int) -> List[str]:
        return [a for a, c in self.labels.items() if c == cluster]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"agent": list(self.labels),
                             "cluster_id": list(self.labels.values())})


def _check_matrix(d: np.ndarray) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("Distance matrix must be square.")
    if not np.allclose(d, d.T, rtol=0, atol=1e-12):
        raise ValueError("Distance matrix must be symmetric.")
    if np.any(d < 0):
        raise ValueError("Distances must be non-negative.")
    if np.any(np.diag(d) != 0):
        raise ValueError("Distance matrix must have a zero diagonal.")


def _update(linkage: str, d_a: np.ndarray, d_b: np.ndarray,
            n_a: int, n_b: int) -> np.ndarray:
    if linkage == "average":
        return (n_a * d_a + n_b * d_b) / (n_a + n_b)
    if linkage == "single":
        return np.minimum(d_a, d_b)
    if linkage == "complete":
        return np.maximum(d_a, d_b)
    raise ValueError(f"Unknown linkage '{linkage}'.")


def upgma(d: DistanceMatrix, linkage: str = "average") -> Dendrogram:
    """
    Agglomerative clustering; average linkage by default.

    At every step the two clusters with the smallest linkage distance are
    merged. After merging A and B the distance to any other cluster C is
    ``(|A| d(A, C) + |B| d(B, C)) / (|A| + |B|)``, which equals the mean of
    all leaf-pair distances between AB and C.

    A cluster is represented by its smallest leaf index. Ties are broken by
    the smallest (lower representative, higher representative) pair.

    :param d: Divergence matrix with at least two agents.
    :type d: DistanceMatrix

    :param linkage: "average", or "single" / "complete" for experiments.
    :type linkage: str

    :return: Merge tree over ``d.agents``.
    :rtype: Dendrogram

    :raises ValueError: If the matrix is not a valid dissimilarity or has
        fewer than two agents.
    """
    matrix = np.array(d.d, dtype=np.float64)
    _check_matrix(matrix)
    m = matrix.shape[0]
    if m < 2:
        raise ValueError("Need at least two agents to cluster.")

    work = matrix.copy()
    np.fill_diagonal(work, np.inf)
    upper = np.triu(np.ones((m, m), dtype=bool), k=1)
    active = np.ones(m, dtype=bool)
    node = list(range(m))
    size = [1] * m
    merges = []

    for t in range(m - 1):
        candidates = np.where(upper & np.outer(active, active), work, np.inf)
        # argmin scans row-major, so ties resolve to the smallest (i, j)
        i, j = divmod(int(np.argmin(candidates)), m)
        height = float(work[i, j])

        merges.append(Merge(left=node[i], right=node[j], height=height,
                            size=size[i] + size[j]))

        row = _update(linkage, work[i], work[j], size[i], size[j])
        work[i, :] = row
        work[:, i] = row
        work[i, i] = np.inf
        work[j, :] = np.inf
        work[:, j] = np.inf
        active[j] = False
        node[i] = m + t
        size[i] += size[j]

    logger.info(f"Built {linkage} linkage dendrogram over {m} agents")
    return Dendrogram(leaves=tuple(d.agents), merges=tuple(merges),
                      linkage=linkage)


def cut(dendro: Dendrogram, k: int) -> ClusterAssignment:
    """
    Flat partition with exactly ``k`` clusters, obtained by undoing the last
    ``k - 1`` merges.

    :param dendro: Merge tree.
    :type dendro: Dendrogram

    :param k: Number of clusters, 1 <= k <= number of leaves.
    :type k: int

    :return: Assignment with ids numbered by first member in leaf order.
    :rtype: ClusterAssignment

    :raises ValueError: If ``k`` is out of range.
    """
    m = len(dendro.leaves)
    if not 1 <= k <= m:
        raise ValueError(f"k must be between 1 and {m}, got {k}.")

    parent = list(range(2 * m - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, merge in enumerate(dendro.merges[:m - k]):
        parent[find(merge.left)] = m + t
        parent[find(merge.right)] = m + t

    ids: Dict[int, int] = {}
    labels = {}
    for leaf, name in enumerate(dendro.leaves):
        labels[name] = ids.setdefault(find(leaf), len(ids))
    return ClusterAssignment(k=k, labels=labels)
