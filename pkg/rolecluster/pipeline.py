import os
import hashlib
import logging
from typing import Tuple
from typing import Optional
from typing import Sequence

from rolecluster import __version__
from rolecluster._config import AnalysisConfig
from rolecluster._loggers import StageMonitor
from rolecluster._exceptions import InputError
from rolecluster.ingest import AgentNames
from rolecluster.ingest import DataQuality
from rolecluster.ingest import TeamComposition
from rolecluster.ingest import build_roster
from rolecluster.ingest import read_records
from rolecluster.ingest import expand_and_filter
from rolecluster.cooccur import normalize
from rolecluster.cooccur import build_cooccurrence
from rolecluster.divergence import distance_matrix
from rolecluster.hac import cut
from rolecluster.hac import upgma
from rolecluster.diagnostics import sweep_k
from rolecluster.diagnostics import find_outliers
from rolecluster.patch_impact import AnalysisSnapshot

logger = logging.getLogger(__name__)


def analyze_compositions(
        comps: Sequence[TeamComposition],
        label: str = "analysis",
        k: Optional[int] = None,
        sqrt_jsd: bool = False,
        linkage: str = "average",
        workers: int = 1,
        monitor: Optional[StageMonitor] = None,
) -> AnalysisSnapshot:
    """
    Run co-occurrence counting, divergences, clustering and the silhouette
    sweep over a list of compositions.

    :param comps: Canonical compositions.
    :type comps: Sequence[TeamComposition]

    :param label: Name of the snapshot, e.g. a patch version.
    :type label: str

    :param k: Cluster count override; the silhouette-selected k otherwise.
    :type k: Optional[int]

    :param sqrt_jsd: Cluster on the square root of JSD.
    :type sqrt_jsd: bool

    :param linkage: Linkage rule, "average" unless experimenting.
    :type linkage: str

    :param workers: Threads for the parallel stages.
    :type workers: int

    :param monitor: Stage logger, a default one is created if omitted.
    :type monitor: Optional[StageMonitor]

    :return: The analysis snapshot.
    :rtype: AnalysisSnapshot

    :raises InputError: With no compositions, fewer than three agents to
        cluster, or ``k`` outside [2, m - 1].
    """
    monitor = monitor or StageMonitor()

    roster = build_roster(comps)
    matrix = monitor.run("co-occurrence", build_cooccurrence,
                         comps, roster, workers=workers)
    vectors = normalize(matrix)
    distances = monitor.run("divergence", distance_matrix,
                            vectors, sqrt=sqrt_jsd, workers=workers)
    m = len(distances)
    if m < 3:
        raise InputError(f"Need at least 3 agents to cluster, got {m}.")

    dendro = monitor.run("clustering", upgma, distances, linkage=linkage)
    sweep = monitor.run("silhouette sweep", sweep_k, distances, dendro,
                        workers=workers)

    if k is not None:
        if not 2 <= k <= m - 1:
            raise InputError(f"k must be between 2 and {m - 1}, got {k}.")
        chosen, source = k, "override"
    else:
        chosen, source = sweep.best_k, "silhouette"

    assignment = cut(dendro, chosen)
    logger.info(f"'{label}': {m} agents in {chosen} clusters ({source})")
    return AnalysisSnapshot(
        label=label,
        roster=roster,
        cooccurrence=matrix,
        vectors=tuple(vectors),
        distances=distances,
        dendrogram=dendro,
        assignment=assignment,
        sweep=sweep,
        outliers=tuple(find_outliers(dendro, assignment)),
        k_source=source,
    )


def _default_label(config: AnalysisConfig) -> str:
    if config.label:
        return config.label
    return os.path.splitext(os.path.basename(config.inputs[0]))[0]


def analyze(config: AnalysisConfig, names: Optional[AgentNames] = None
            ) -> Tuple[AnalysisSnapshot, DataQuality]:
    """
    Read the configured inputs and analyze them.

    :param config: Analysis settings.
    :type config: AnalysisConfig

    :param names: Agent name canonicalizer to share with another analysis,
        so both spell each agent the same way.
    :type names: Optional[AgentNames]

    :return: Snapshot and the data quality counters of the ingest.
    :rtype: Tuple[AnalysisSnapshot, DataQuality]
    """
    config.validate()
    if not config.inputs:
        raise InputError("No input files given.")

    monitor = StageMonitor()
    quality = DataQuality()
    records = monitor.run("ingest", read_records, config.inputs,
                          config.input_format, config.lenient, quality, names)
    comps = expand_and_filter(records, config.map_filter, quality)
    logger.info(f"{len(records)} records expanded to {len(comps)} "
                f"compositions (map filter: {config.map_filter})")

    snapshot = analyze_compositions(
        comps,
        label=_default_label(config),
        k=config.k,
        sqrt_jsd=config.sqrt_jsd,
        linkage=config.linkage,
        workers=config.workers,
        monitor=monitor,
    )
    return snapshot, quality


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def fingerprint(config: AnalysisConfig) -> dict:
    """
    Identify a run by its input bytes, result-affecting options and the
    tool version.
    """
    return {
        "tool": "rolecluster",
        "version": __version__,
        "inputs": [{"path": path, "sha256": _sha256(path)}
                   for path in config.inputs],
        "options": {
            "input_format": config.input_format,
            "map_filter": config.map_filter,
            "k": config.k,
            "log_base": config.log_base,
            "strictness": config.strictness,
            "sqrt_jsd": config.sqrt_jsd,
            "linkage": config.linkage,
        },
    }
