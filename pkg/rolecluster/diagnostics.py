"""
Silhouette scoring over the precomputed divergence matrix and selection of
the number of clusters.
"""
import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass
from typing import Dict
from typing import List
from concurrent.futures import ThreadPoolExecutor
from sklearn.metrics import silhouette_samples as _sklearn_samples

from rolecluster.hac import cut
from rolecluster.hac import Dendrogram
from rolecluster.hac import ClusterAssignment
from rolecluster.divergence import DistanceMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SilhouetteSweep:
    """
    Mean silhouette for every k in [2, m - 1]. ``best_k`` is the smallest k
    reaching ``best_score``.
    """
    scores: Dict[int, float]
    best_k: int
    best_score: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"k": list(self.scores),
                             "mean_silhouette": list(self.scores.values())})


@dataclass(frozen=True)
class Outlier:
    agent: str
    join_height: float


def _labels(d: DistanceMatrix, assignment: ClusterAssignment) -> np.ndarray:
    missing = [a for a in d.agents if a not in assignment.labels]
    if missing:
        raise ValueError(f"Assignment does not cover {missing}.")
    return np.array([assignment.labels[a] for a in d.agents])


def silhouette_samples(d: DistanceMatrix,
                       assignment: ClusterAssignment) -> np.ndarray:
    """
    Per-agent silhouette ``s(i) = (b - a) / max(a, b)`` in the order of
    ``d.agents``.

    ``a`` is the mean distance to the rest of the agent's own cluster and
    ``b`` the smallest mean distance to another cluster. Agents alone in their
    cluster score 0, so a partition into singletons scores 0 everywhere.

    :raises ValueError: If the assignment has fewer than two clusters or
        misses agents of ``d``.
    """
    labels = _labels(d, assignment)
    n_clusters = len(np.unique(labels))
    if n_clusters < 2:
        raise ValueError("Silhouette needs at least two clusters.")
    if n_clusters == len(labels):
        return np.zeros(len(labels))
    return _sklearn_samples(np.array(d.d, dtype=np.float64), labels,
                            metric="precomputed")


def silhouette(d: DistanceMatrix, assignment: ClusterAssignment) -> float:
    """
    Mean silhouette over all agents of ``d``.

    :param d: Precomputed divergence matrix.
    :type d: DistanceMatrix

    :param assignment: Partition covering every agent of ``d``, k >= 2.
    :type assignment: ClusterAssignment

    :return: Mean score in [-1, 1].
    :rtype: float
    """
    if assignment.k < 2:
        raise ValueError(f"Silhouette needs k >= 2, got {assignment.k}.")
    return float(np.mean(silhouette_samples(d, assignment)))


def sweep_k(d: DistanceMatrix, dendro: Dendrogram,
            workers: int = 1) -> SilhouetteSweep:
    """
    Score every cut of one dendrogram for k from 2 to m - 1.

    Ties on the best score go to the smaller k.

    :param d: Divergence matrix the dendrogram was built from.
    :type d: DistanceMatrix

    :param dendro: Merge tree over the same agents.
    :type dendro: Dendrogram

    :param workers: Threads scoring cuts in parallel.
    :type workers: int

    :return: Scores per k and the selected k.
    :rtype: SilhouetteSweep

    :raises ValueError: With fewer than three agents.
    """
    m = len(d)
    if m < 3:
        raise ValueError(
            f"A silhouette sweep needs at least 3 agents, got {m}.")

    ks = list(range(2, m))

    def score(k: int) -> float:
        return silhouette(d, cut(dendro, k))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(score, ks))
    else:
        values = [score(k) for k in ks]

    scores = dict(zip(ks, values))
    best_k = ks[0]
    for k in ks:
        if scores[k] > scores[best_k]:
            best_k = k
    logger.info(f"Silhouette sweep over k={ks[0]}..{ks[-1]}: best k={best_k} "
                f"({scores[best_k]:.4f})")
    return SilhouetteSweep(scores=scores, best_k=best_k,
                           best_score=scores[best_k])


def find_outliers(dendro: Dendrogram,
                  assignment: ClusterAssignment) -> List[Outlier]:
    """
    Agents alone in their cluster, with the height at which each first
    joins any other agent. Sorted by decreasing join height.
    """
    m = len(dendro.leaves)
    join = {}
    for merge in dendro.merges:
        for child in (merge.left, merge.right):
            if child < m:
                join[dendro.leaves[child]] = merge.height

    outliers = [
        Outlier(agent=members[0], join_height=join[members[0]])
        for members in assignment.clusters() if len(members) == 1
    ]
    return sorted(outliers, key=lambda o: (-o.join_height, o.agent))
