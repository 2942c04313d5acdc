"""
Compare a pre-patch and a post-patch analysis.

Per agent: the absolute change in divergence to the centroid of its own
cluster. Per matched cluster pair: the absolute change in mean pairwise
divergence. Plus the agents whose cluster changed.
"""
import logging
import numpy as np
from dataclasses import field
from dataclasses import dataclass
from typing import List
from typing import Tuple
from typing import Optional
from typing import Sequence

from rolecluster.divergence import jsd
from rolecluster.ingest import Roster
from rolecluster.hac import Dendrogram
from rolecluster.hac import ClusterAssignment
from rolecluster.cooccur import ProbabilityVector
from rolecluster.cooccur import CooccurrenceMatrix
from rolecluster.divergence import DistanceMatrix
from rolecluster.diagnostics import Outlier
from rolecluster.diagnostics import SilhouetteSweep
from rolecluster._exceptions import InputError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class AnalysisSnapshot:
    """
    Everything one analysis produced. ``distances.agents`` are the agents
    with teammate data; the assignment partitions exactly those.
    """
    label: str
    roster: Roster
    cooccurrence: CooccurrenceMatrix = field(repr=False)
    vectors: Tuple[ProbabilityVector, ...] = field(repr=False)
    distances: DistanceMatrix = field(repr=False)
    dendrogram: Dendrogram = field(repr=False)
    assignment: ClusterAssignment
    sweep: Optional[SilhouetteSweep] = None
    outliers: Tuple[Outlier, ...] = ()
    k_source: str = "silhouette"

    def __post_init__(self):
        if set(self.assignment.labels) != set(self.distances.agents):
            raise ValueError(
                "Assignment does not partition the snapshot's agents.")

    @property
    def agents(self) -> Tuple[str, ...]:
        return self.distances.agents

    @property
    def excluded(self) -> List[str]:
        return [v.agent for v in self.vectors if not v.defined]

    def vector(self, agent: str) -> ProbabilityVector:
        return self.vectors[self.roster.position(agent)]

    def members(self, cluster: int) -> List[str]:
        return self.assignment.members(cluster)


@dataclass(frozen=True)
class ClusterCentroid:
    cluster_id: int
    centroid: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ClusterMatch:
    pre_id: int
    post_id: int
    jaccard: float
    centroid_jsd: float


@dataclass(frozen=True)
class ClusterMatching:
    """
    One-to-one correspondence between pre and post clusters.
    """
    pairs: Tuple[ClusterMatch, ...]
    unmatched_pre: Tuple[int, ...]
    unmatched_post: Tuple[int, ...]

    def post_for(self, pre_id: int) -> Optional[int]:
        for pair in self.pairs:
            if pair.pre_id == pre_id:
                return pair.post_id
        return None

    def to_dict(self) -> dict:
        return {
            "pairs": [{"pre": p.pre_id, "post": p.post_id,
                       "jaccard": p.jaccard,
                       "centroid_jsd": p.centroid_jsd} for p in self.pairs],
            "unmatched_pre": list(self.unmatched_pre),
            "unmatched_post": list(self.unmatched_post),
        }


@dataclass(frozen=True)
class AgentImpact:
    agent: str
    pre_cluster: int
    post_cluster: int
    matched: bool
    pre_distance: float
    post_distance: float
    delta_centroid: float
    pre_support: int
    post_support: int


@dataclass(frozen=True)
class InterDelta:
    pre_id: int
    post_id: int
    pre_mean_inter: Optional[float]
    post_mean_inter: Optional[float]
    delta_inter: Optional[float]
    reason: Optional[str] = None


@dataclass(frozen=True)
class MembershipShifts:
    moved: Tuple[str, ...]
    added: Tuple[str, ...]
    removed: Tuple[str, ...]


@dataclass(frozen=True)
class PatchImpactReport:
    """
    Result of :func:`compare`. All deltas are absolute values in plain JSD,
    whichever ``metric`` both snapshots were clustered on.
    """
    pre_label: str
    post_label: str
    pre_k: int
    post_k: int
    matching: ClusterMatching
    per_agent: Tuple[AgentImpact, ...]
    per_cluster: Tuple[InterDelta, ...]
    shifts: MembershipShifts
    log_base: int = 2
    metric: str = "jsd"

    @property
    def k_mismatch(self) -> bool:
        return self.pre_k != self.post_k

    def to_dict(self) -> dict:
        notes = []
        if self.k_mismatch:
            notes.append(
                f"cluster counts differ (pre k={self.pre_k}, post "
                f"k={self.post_k}); clusters matched by member overlap")
        return {
            "schema_version": SCHEMA_VERSION,
            "pre_label": self.pre_label,
            "post_label": self.post_label,
            "log_base": self.log_base,
            "clustering_metric": self.metric,
            "delta_metric": "jsd",
            "pre_k": self.pre_k,
            "post_k": self.post_k,
            "k_mismatch": self.k_mismatch,
            "notes": notes,
            "cluster_matching": self.matching.to_dict(),
            "per_agent": {
                a.agent: {
                    "pre_cluster": a.pre_cluster,
                    "post_cluster": a.post_cluster,
                    "matched": a.matched,
                    "pre_distance": a.pre_distance,
                    "post_distance": a.post_distance,
                    "delta_centroid": a.delta_centroid,
                    "pre_support": a.pre_support,
                    "post_support": a.post_support,
                } for a in self.per_agent
            },
            "per_cluster": [
                {"pre": c.pre_id, "post": c.post_id,
                 "pre_mean_inter": c.pre_mean_inter,
                 "post_mean_inter": c.post_mean_inter,
                 "delta_inter": c.delta_inter,
                 "reason": c.reason} for c in self.per_cluster
            ],
            "membership_shifts": list(self.shifts.moved),
            "roster_diff": {"added": list(self.shifts.added),
                            "removed": list(self.shifts.removed)},
            "unmatched_clusters": {
                "pre": list(self.matching.unmatched_pre),
                "post": list(self.matching.unmatched_post)},
        }

    def to_markdown(self) -> str:
        def num(value: Optional[float]) -> str:
            return "n/a" if value is None else f"{value:.4f}"

        lines = [
            f"# Patch impact: {self.pre_label} -> {self.post_label}",
            "",
            f"Clusters: pre k={self.pre_k}, post k={self.post_k}"
            + (" (k differs)" if self.k_mismatch else ""),
            "",
            f"Deltas in JSD, clusters built on {self.metric}.",
            "",
            "## Agents",
            "",
            "| agent | pre | post | matched | JSD pre | JSD post "
            "| delta centroid |",
            "|---|---|---|---|---|---|---|",
        ]
        for a in sorted(self.per_agent, key=lambda a: -a.delta_centroid):
            lines.append(
                f"| {a.agent} | {a.pre_cluster} | {a.post_cluster} | "
                f"{'yes' if a.matched else 'no'} | {num(a.pre_distance)} | "
                f"{num(a.post_distance)} | {num(a.delta_centroid)} |")
        lines += [
            "",
            "## Clusters",
            "",
            "| pre | post | jaccard | mean inter pre | mean inter post "
            "| delta inter |",
            "|---|---|---|---|---|---|",
        ]
        jaccard = {(p.pre_id, p.post_id): p.jaccard
                   for p in self.matching.pairs}
        for c in self.per_cluster:
            delta = num(c.delta_inter) if c.reason is None else c.reason
            lines.append(
                f"| {c.pre_id} | {c.post_id} | "
                f"{num(jaccard[(c.pre_id, c.post_id)])} | "
                f"{num(c.pre_mean_inter)} | {num(c.post_mean_inter)} | "
                f"{delta} |")
        lines += [
            "",
            "## Membership",
            "",
            f"- moved: {', '.join(self.shifts.moved) or 'none'}",
            f"- added: {', '.join(self.shifts.added) or 'none'}",
            f"- removed: {', '.join(self.shifts.removed) or 'none'}",
            f"- unmatched pre clusters: "
            f"{list(self.matching.unmatched_pre) or 'none'}",
            f"- unmatched post clusters: "
            f"{list(self.matching.unmatched_post) or 'none'}",
        ]
        return "\n".join(lines) + "\n"


def centroid(cluster_members: Sequence[ProbabilityVector],
             cluster_id: int = 0) -> ClusterCentroid:
    """
    Componentwise mean of the members' probability vectors.

    :raises ValueError: For an empty cluster or differing dimensions.
    """
    if not cluster_members:
        raise ValueError(f"Cluster {cluster_id} has no members.")
    if len({len(v) for v in cluster_members}) != 1:
        raise ValueError("Cluster members differ in dimension.")
    stacked = np.vstack([v.probs for v in cluster_members])
    return ClusterCentroid(cluster_id=cluster_id,
                           centroid=stacked.mean(axis=0))


def _snapshot_centroid(snapshot: AnalysisSnapshot,
                       cluster: int) -> ClusterCentroid:
    return centroid([snapshot.vector(a) for a in snapshot.members(cluster)],
                    cluster_id=cluster)


def _lift(probs: np.ndarray, roster: Roster,
          axis: Sequence[str]) -> np.ndarray:
    lifted = np.zeros(len(axis))
    position = {name: i for i, name in enumerate(axis)}
    for i, name in enumerate(roster.agents):
        lifted[position[name]] = probs[i]
    return lifted


def _jaccard(a: Sequence[str], b: Sequence[str]) -> float:
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def match_clusters(pre: AnalysisSnapshot,
                   post: AnalysisSnapshot) -> ClusterMatching:
    """
    Greedy maximum-overlap matching of pre clusters to post clusters.

    Candidate pairs are ranked by Jaccard overlap of their member sets
    (highest first), then by the divergence between the two centroids
    (smallest first), then by pre and post cluster id. Pairs are accepted
    while both sides are still free; pairs without overlap are never
    matched.

    :raises InputError: If the snapshots share no agent.
    """
    if not set(pre.agents) & set(post.agents):
        raise InputError(
            f"Snapshots '{pre.label}' and '{post.label}' share no agents.")

    axis = sorted(set(pre.roster.agents) | set(post.roster.agents))
    pre_centroids = {
        c: _lift(_snapshot_centroid(pre, c).centroid, pre.roster, axis)
        for c in range(pre.assignment.k)}
    post_centroids = {
        c: _lift(_snapshot_centroid(post, c).centroid, post.roster, axis)
        for c in range(post.assignment.k)}

    candidates = []
    for i in range(pre.assignment.k):
        for j in range(post.assignment.k):
            overlap = _jaccard(pre.members(i), post.members(j))
            if overlap > 0:
                candidates.append(ClusterMatch(
                    pre_id=i, post_id=j, jaccard=overlap,
                    centroid_jsd=jsd(pre_centroids[i], post_centroids[j])))
    candidates.sort(key=lambda c: (-c.jaccard, c.centroid_jsd,
                                   c.pre_id, c.post_id))

    pairs = []
    used_pre, used_post = set(), set()
    for candidate in candidates:
        if candidate.pre_id in used_pre or candidate.post_id in used_post:
            continue
        pairs.append(candidate)
        used_pre.add(candidate.pre_id)
        used_post.add(candidate.post_id)

    pairs.sort(key=lambda p: p.pre_id)
    return ClusterMatching(
        pairs=tuple(pairs),
        unmatched_pre=tuple(c for c in range(pre.assignment.k)
                            if c not in used_pre),
        unmatched_post=tuple(c for c in range(post.assignment.k)
                             if c not in used_post),
    )


def _distance_to_centroid(snapshot: AnalysisSnapshot, agent: str) -> float:
    cluster = snapshot.assignment.labels[agent]
    mu = _snapshot_centroid(snapshot, cluster).centroid
    return jsd(snapshot.vector(agent), mu)


def delta_centroid(agent: str, pre: AnalysisSnapshot,
                   post: AnalysisSnapshot) -> Optional[float]:
    """
    ``|JSD(v_post, mu_post) - JSD(v_pre, mu_pre)|`` where each mu is the
    centroid of the agent's own cluster in that snapshot.

    :return: The change, or None when the agent is missing from either
        snapshot (a new or removed agent).
    :rtype: Optional[float]
    """
    if agent not in pre.assignment.labels or \
            agent not in post.assignment.labels:
        return None
    return abs(_distance_to_centroid(post, agent)
               - _distance_to_centroid(pre, agent))


def mean_inter_distance(d: DistanceMatrix,
                        members: Sequence[str]) -> Optional[float]:
    """
    Mean pairwise JSD inside a cluster; None for singletons. Square root
    distances are squared back first.
    """
    if len(members) < 2:
        return None
    sub = d.subset(members)
    if d.metric == "sqrt_jsd":
        sub = sub ** 2
    n = len(members)
    return float(np.triu(sub, k=1).sum() * 2 / (n * (n - 1)))


def delta_inter(pair: ClusterMatch, pre: AnalysisSnapshot,
                post: AnalysisSnapshot) -> InterDelta:
    """
    Absolute change of mean pairwise divergence between a matched pair of
    clusters. Undefined (None, reason "singleton") when either side has a
    single member.
    """
    pre_mean = mean_inter_distance(pre.distances, pre.members(pair.pre_id))
    post_mean = mean_inter_distance(post.distances,
                                    post.members(pair.post_id))
    if pre_mean is None or post_mean is None:
        return InterDelta(pair.pre_id, pair.post_id, pre_mean, post_mean,
                          None, reason="singleton")
    return InterDelta(pair.pre_id, pair.post_id, pre_mean, post_mean,
                      abs(post_mean - pre_mean))


def membership_shifts(pre: AnalysisSnapshot, post: AnalysisSnapshot,
                      matching: ClusterMatching) -> MembershipShifts:
    """
    Agents whose post cluster is not the match of their pre cluster, and the
    agents present in only one snapshot.
    """
    pre_agents = pre.assignment.labels
    post_agents = post.assignment.labels
    moved = tuple(
        agent for agent in pre.agents
        if agent in post_agents
        and matching.post_for(pre_agents[agent]) != post_agents[agent])
    return MembershipShifts(
        moved=moved,
        added=tuple(a for a in post.agents if a not in pre_agents),
        removed=tuple(a for a in pre.agents if a not in post_agents),
    )


def compare(pre: AnalysisSnapshot,
            post: AnalysisSnapshot) -> PatchImpactReport:
    """
    Full pre/post comparison.

    :raises InputError: If the snapshots share no agent or were clustered on
        different metrics.
    """
    if pre.distances.metric != post.distances.metric:
        raise InputError(
            f"Cannot compare '{pre.label}' ({pre.distances.metric}) with "
            f"'{post.label}' ({post.distances.metric}): clustered on "
            f"different metrics.")
    matching = match_clusters(pre, post)

    per_agent = []
    for agent in pre.agents:
        if agent not in post.assignment.labels:
            continue
        pre_cluster = pre.assignment.labels[agent]
        post_cluster = post.assignment.labels[agent]
        pre_distance = _distance_to_centroid(pre, agent)
        post_distance = _distance_to_centroid(post, agent)
        per_agent.append(AgentImpact(
            agent=agent,
            pre_cluster=pre_cluster,
            post_cluster=post_cluster,
            matched=matching.post_for(pre_cluster) == post_cluster,
            pre_distance=pre_distance,
            post_distance=post_distance,
            delta_centroid=abs(post_distance - pre_distance),
            pre_support=pre.vector(agent).support_count,
            post_support=post.vector(agent).support_count,
        ))

    per_cluster = tuple(delta_inter(pair, pre, post)
                        for pair in matching.pairs)
    shifts = membership_shifts(pre, post, matching)
    logger.info(
        f"Compared '{pre.label}' with '{post.label}': "
        f"{len(matching.pairs)} matched clusters, "
        f"{len(shifts.moved)} agents moved")
    return PatchImpactReport(
        pre_label=pre.label,
        post_label=post.label,
        pre_k=pre.assignment.k,
        post_k=post.assignment.k,
        matching=matching,
        per_agent=tuple(per_agent),
        per_cluster=per_cluster,
        shifts=shifts,
        log_base=pre.distances.log_base,
        metric=pre.distances.metric,
    )
