"""
Joint-pick counts and teammate probability vectors.
"""
import logging
import numpy as np
import pandas as pd
from dataclasses import field
from dataclasses import dataclass
from typing import List
from typing import Sequence
from concurrent.futures import as_completed
from concurrent.futures import ThreadPoolExecutor

from rolecluster.ingest import Roster
from rolecluster.ingest import TeamComposition
from rolecluster._exceptions import ConsistencyError

logger = logging.getLogger(__name__)

PAIRS_PER_COMPOSITION = 10


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """
    Symmetric count matrix, ``counts[i, j]`` = number of compositions
    holding both roster agents i and j. The diagonal is zero.
    """
    roster: Roster
    counts: np.ndarray

    def pair_total(self) -> int:
        """Sum over unordered pairs i < j."""
        return int(np.triu(self.counts, k=1).sum())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.counts,
                            index=pd.Index(self.roster.agents, name="agent"),
                            columns=list(self.roster.agents))


@dataclass(frozen=True)
class ProbabilityVector:
    """
    Teammate distribution of one agent over the whole roster.

    ``probs`` sums to 1 when ``support_count`` > 0. Agents never picked have
    an all-zero ``probs`` and ``defined`` is False.
    """
    agent: str
    probs: np.ndarray = field(repr=False)
    support_count: int

    @property
    def defined(self) -> bool:
        return self.support_count > 0

    def __len__(self) -> int:
        return len(self.probs)


def _membership(comps: Sequence[TeamComposition],
                roster: Roster) -> np.ndarray:
    rows = np.zeros((len(comps), len(roster)), dtype=np.int64)
    for r, comp in enumerate(comps):
        for agent in comp.agents:
            try:
                rows[r, roster.position(agent)] = 1
            except KeyError:
                raise ConsistencyError(
                    f"Agent '{agent}' of composition {comp.composition_id} "
                    f"is not in the roster.")
    return rows


def _chunk_counts(comps: Sequence[TeamComposition],
                  roster: Roster) -> np.ndarray:
    rows = _membership(comps, roster)
    return rows.T @ rows


def build_cooccurrence(
        comps: Sequence[TeamComposition],
        roster: Roster,
        workers: int = 1,
        chunk_size: int = 4096,
) -> CooccurrenceMatrix:
    """
    Count how often each pair of agents is fielded together.

    Every composition contributes its 10 unordered pairs. Identical
    compositions are counted every time they occur. Chunks of compositions
    are aggregated on ``workers`` threads and summed; integer addition makes
    the result independent of the schedule.

    :param comps: Compositions whose agents all belong to ``roster``.
    :type comps: Sequence[TeamComposition]

    :param roster: Agent roster defining the matrix axes.
    :type roster: Roster

    :param workers: Number of worker threads.
    :type workers: int

    :param chunk_size: Compositions per chunk.
    :type chunk_size: int

    :return: The co-occurrence matrix.
    :rtype: CooccurrenceMatrix

    :raises ConsistencyError: If a composition holds an agent missing from
        the roster.
    """
    n = len(roster)
    counts = np.zeros((n, n), dtype=np.int64)
    chunks = [comps[i:i + chunk_size]
              for i in range(0, len(comps), chunk_size)]

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_chunk_counts, chunk, roster)
                       for chunk in chunks]
            for future in as_completed(futures):
                counts += future.result()
    else:
        for chunk in chunks:
            counts += _chunk_counts(chunk, roster)

    np.fill_diagonal(counts, 0)
    logger.info(f"Counted {len(comps)} compositions over {n} agents")
    return CooccurrenceMatrix(roster=roster, counts=counts)


def pick_counts(comps: Sequence[TeamComposition],
                roster: Roster) -> np.ndarray:
    """Number of compositions each roster agent appears in."""
    if not comps:
        return np.zeros(len(roster), dtype=np.int64)
    return _membership(comps, roster).sum(axis=0)


def normalize(matrix: CooccurrenceMatrix) -> List[ProbabilityVector]:
    """
    L1-normalize every row of the co-occurrence matrix.

    The self position stays 0. Rows summing to zero are returned undefined
    (all-zero probs, ``support_count`` 0) instead of being divided.

    :param matrix: Co-occurrence matrix.
    :type matrix: CooccurrenceMatrix

    :return: One vector per roster agent, in roster order.
    :rtype: List[ProbabilityVector]
    """
    vectors = []
    for i, agent in enumerate(matrix.roster.agents):
        row = matrix.counts[i].astype(np.float64)
        support = int(matrix.counts[i].sum())
        if support > 0:
            probs = row / support
        else:
            probs = np.zeros_like(row)
        probs.setflags(write=False)
        vectors.append(ProbabilityVector(agent=agent, probs=probs,
                                         support_count=support))
    undefined = [v.agent for v in vectors if not v.defined]
    if undefined:
        logger.warning(f"No teammates recorded for {undefined}")
    return vectors


def probabilities_frame(vectors: Sequence[ProbabilityVector],
                        roster: Roster) -> pd.DataFrame:
    """Vectors as rows, roster agents as columns, plus support_count."""
    df = pd.DataFrame([v.probs for v in vectors],
                      index=pd.Index([v.agent for v in vectors],
                                     name="agent"),
                      columns=list(roster.agents))
    df.insert(0, "support_count", [v.support_count for v in vectors])
    return df
