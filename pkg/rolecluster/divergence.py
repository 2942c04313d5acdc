"""
Jensen-Shannon divergence between teammate distributions.

All logarithms are base 2, so divergences lie in [0, 1].
"""
import logging
import numpy as np
import pandas as pd
from dataclasses import field
from dataclasses import dataclass
from typing import Tuple
from typing import Union
from typing import Sequence
from scipy.stats import entropy
from scipy.spatial.distance import squareform
from concurrent.futures import ThreadPoolExecutor

from rolecluster._config import LOG_BASE
from rolecluster.cooccur import ProbabilityVector
from rolecluster._exceptions import InputError

logger = logging.getLogger(__name__)

Distribution = Union[ProbabilityVector, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class DistanceMatrix:
    """
    Pairwise divergences between the defined agents.
    """
    agents: Tuple[str, ...]
    d: np.ndarray = field(repr=False)
    log_base: int = LOG_BASE
    metric: str = "jsd"

    def __len__(self) -> int:
        return len(self.agents)

    def position(self, agent: str) -> int:
        return self.agents.index(agent)

    def subset(self, agents: Sequence[str]) -> np.ndarray:
        idx = [self.position(a) for a in agents]
        return self.d[np.ix_(idx, idx)]

    def condensed(self) -> np.ndarray:
        """Upper triangle in the condensed form scipy.cluster expects."""
        return squareform(self.d, checks=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.d,
                            index=pd.Index(self.agents, name="agent"),
                            columns=list(self.agents))


def _as_array(p: Distribution) -> np.ndarray:
    if isinstance(p, ProbabilityVector):
        p = p.probs
    return np.asarray(p, dtype=np.float64)


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """
    Kullback-Leibler divergence D(p || q) in bits.

    Terms with p_k = 0 contribute nothing.

    :param p: Distribution summing to 1.
    :param q: Distribution with q_k > 0 wherever p_k > 0.

    :return: Non-negative divergence.
    :rtype: float

    :raises ValueError: On a dimension mismatch, or p_k > 0 where q_k = 0.
    """
    p = _as_array(p)
    q = _as_array(q)
    if p.shape != q.shape:
        raise ValueError(
            f"Dimension mismatch: {p.shape[0]} vs {q.shape[0]}.")
    support = p > 0
    if np.any(q[support] <= 0):
        raise ValueError("q must be positive wherever p is positive.")
    terms = p[support] * np.log2(p[support] / q[support])
    return float(np.sum(terms))


def jsd(v_i: Distribution, v_j: Distribution) -> float:
    """
    Jensen-Shannon divergence: the mean KL divergence of both inputs to
    their mixture ``m = (v_i + v_j) / 2``.

    :param v_i: First distribution.
    :param v_j: Second distribution.

    :return: Divergence in [0, 1].
    :rtype: float

    :raises ValueError: On a dimension mismatch or an undefined vector.
    """
    for v in (v_i, v_j):
        if isinstance(v, ProbabilityVector) and not v.defined:
            raise ValueError(f"Agent '{v.agent}' has no teammate data.")
    p = _as_array(v_i)
    q = _as_array(v_j)
    if p.shape != q.shape:
        raise ValueError(
            f"Dimension mismatch: {p.shape[0]} vs {q.shape[0]}.")
    m = (p + q) / 2
    value = 0.5 * (kl_divergence(p, m) + kl_divergence(q, m))
    return min(max(value, 0.0), 1.0)


def jsd_entropy_form(v_i: Distribution, v_j: Distribution) -> float:
    """
    H(m) - H(p)/2 - H(q)/2 with base-2 Shannon entropies. Agrees with
    :func:`jsd` up to rounding.
    """
    p = _as_array(v_i)
    q = _as_array(v_j)
    m = (p + q) / 2
    return float(entropy(m, base=LOG_BASE)
                 - 0.5 * entropy(p, base=LOG_BASE)
                 - 0.5 * entropy(q, base=LOG_BASE))


def _row(i: int, probs: Sequence[np.ndarray], sqrt: bool) -> np.ndarray:
    row = np.zeros(len(probs))
    for j in range(i + 1, len(probs)):
        value = jsd(probs[i], probs[j])
        row[j] = np.sqrt(value) if sqrt else value
    return row


def distance_matrix(
        vectors: Sequence[ProbabilityVector],
        sqrt: bool = False,
        workers: int = 1,
) -> DistanceMatrix:
    """
    All pairwise divergences between the defined vectors.

    Undefined vectors (agents never picked) are left out.

    :param vectors: Probability vectors of equal dimension.
    :type vectors: Sequence[ProbabilityVector]

    :param sqrt: Use the square root of JSD, which is a metric.
    :type sqrt: bool

    :param workers: Threads computing rows in parallel.
    :type workers: int

    :return: Symmetric matrix with a zero diagonal.
    :rtype: DistanceMatrix

    :raises InputError: With fewer than two defined vectors.
    """
    defined = [v for v in vectors if v.defined]
    if len(defined) < 2:
        raise InputError("nothing to cluster")
    if len({len(v) for v in defined}) != 1:
        raise ValueError("Vectors differ in dimension.")

    probs = [v.probs for v in defined]
    m = len(defined)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(lambda i: _row(i, probs, sqrt),
                                     range(m)))
    else:
        rows = [_row(i, probs, sqrt) for i in range(m)]

    upper = np.vstack(rows)
    d = upper + upper.T
    d.setflags(write=False)
    logger.info(f"Computed {m * (m - 1) // 2} pairwise divergences")
    return DistanceMatrix(
        agents=tuple(v.agent for v in defined),
        d=d,
        metric="sqrt_jsd" if sqrt else "jsd",
    )
