import os
import json
import logging
import numpy as np
import pandas as pd
from typing import Any
from typing import Dict
from typing import Iterable
from typing import Tuple
from typing import Optional

from rolecluster.ingest import DataQuality
from rolecluster.cooccur import probabilities_frame
from rolecluster.diagnostics import silhouette
from rolecluster.patch_impact import SCHEMA_VERSION
from rolecluster.patch_impact import AnalysisSnapshot
from rolecluster.patch_impact import PatchImpactReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def snapshot_to_dict(snapshot: AnalysisSnapshot,
                     quality: Optional[DataQuality] = None,
                     run: Optional[dict] = None) -> Dict[str, Any]:
    """
    Machine readable analysis report.

    :param snapshot: Analysis result.
    :type snapshot: AnalysisSnapshot

    :param quality: Ingest counters, if known.
    :type quality: Optional[DataQuality]

    :param run: Config fingerprint, if known.
    :type run: Optional[dict]

    :return: JSON compatible dictionary.
    :rtype: Dict[str, Any]
    """
    assignment = snapshot.assignment
    sweep = snapshot.sweep
    chosen_score = silhouette(snapshot.distances, assignment) \
        if assignment.k >= 2 else None
    return _plain({
        "schema_version": SCHEMA_VERSION,
        "label": snapshot.label,
        "fingerprint": run,
        "log_base": snapshot.distances.log_base,
        "metric": snapshot.distances.metric,
        "linkage": snapshot.dendrogram.linkage,
        "roster": list(snapshot.roster.agents),
        "clustered_agents": list(snapshot.agents),
        "excluded_agents": snapshot.excluded,
        "support_count": {v.agent: v.support_count
                          for v in snapshot.vectors},
        "k": assignment.k,
        "k_source": snapshot.k_source,
        "silhouette": chosen_score,
        "silhouette_sweep": None if sweep is None else {
            "scores": sweep.scores,
            "best_k": sweep.best_k,
            "best_score": sweep.best_score,
        },
        "clusters": [{"id": i, "members": members}
                     for i, members in enumerate(assignment.clusters())],
        "assignment": assignment.labels,
        "outliers": [{"agent": o.agent, "join_height": o.join_height}
                     for o in snapshot.outliers],
        "cooccurrence": snapshot.cooccurrence.counts,
        "distances": snapshot.distances.d,
        "dendrogram": snapshot.dendrogram.to_dict(),
        "data_quality": None if quality is None else quality.to_dict(),
    })


class ReportStore:
    """
    Writes analysis and comparison artifacts into an output directory.

    :param out_dir: Directory to write to; created if missing.
    :type out_dir: str

    :param over_write: Replace existing files. When False an existing file
        raises FileExistsError.
    :type over_write: bool
    """

    def __init__(self, out_dir: str, over_write: bool = True):
        self._out_dir = out_dir
        self._over_write = over_write
        os.makedirs(out_dir, exist_ok=True)

    @property
    def out_dir(self) -> str:
        return self._out_dir

    def path(self, name: str) -> str:
        return os.path.join(self._out_dir, name)

    def check_exists(self, name: str) -> bool:
        return os.path.exists(self.path(name))

    def _target(self, name: str) -> str:
        target = self.path(name)
        if not self._over_write and self.check_exists(name):
            raise FileExistsError(f"{target} already exists.")
        os.makedirs(os.path.dirname(target), exist_ok=True)
        logger.info(f"Writing {target}")
        return target

    def write_json(self, name: str, data: Any) -> str:
        target = self._target(name)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            json.dump(_plain(data), f, indent=2, sort_keys=True,
                      allow_nan=False)
            f.write("\n")
        return target

    def write_text(self, name: str, text: str) -> str:
        target = self._target(name)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return target

    def write_frame(self, name: str, df: pd.DataFrame,
                    index: bool = True) -> str:
        target = self._target(name)
        df.to_csv(target, index=index, float_format=FLOAT_FORMAT,
                  lineterminator="\n")
        return target

    def write_snapshot(
            self,
            snapshot: AnalysisSnapshot,
            emit: Iterable[str] = ("json", "csv", "newick", "dot"),
            quality: Optional[DataQuality] = None,
            run: Optional[dict] = None,
            prefix: str = "",
    ) -> None:
        """
        Write the artifacts of one analysis selected by ``emit``.

        :param snapshot: Analysis result.
        :type snapshot: AnalysisSnapshot

        :param emit: Any of "json", "csv", "newick", "dot".
        :type emit: Iterable[str]

        :param quality: Ingest counters for the report.
        :type quality: Optional[DataQuality]

        :param run: Config fingerprint for the report.
        :type run: Optional[dict]

        :param prefix: Sub-directory inside the output directory.
        :type prefix: str
        """
        emit = set(emit)

        def name(file: str) -> str:
            return os.path.join(prefix, file) if prefix else file

        if "json" in emit:
            self.write_json(name("report.json"),
                            snapshot_to_dict(snapshot, quality, run))
            self.write_json(name("dendrogram.json"),
                            snapshot.dendrogram.to_dict())
        if "csv" in emit:
            self.write_frame(name("cooccurrence.csv"),
                             snapshot.cooccurrence.to_frame())
            self.write_frame(name("probabilities.csv"),
                             probabilities_frame(snapshot.vectors,
                                                 snapshot.roster))
            self.write_frame(name("distances.csv"),
                             snapshot.distances.to_frame())
            self.write_frame(name("assignment.csv"),
                             snapshot.assignment.to_frame(), index=False)
            if snapshot.sweep is not None:
                self.write_frame(name("sweep.csv"),
                                 snapshot.sweep.to_frame(), index=False)
        if "newick" in emit:
            self.write_text(name("dendrogram.nwk"),
                            snapshot.dendrogram.to_newick() + "\n")
        if "dot" in emit:
            self.write_text(name("dendrogram.dot"),
                            snapshot.dendrogram.to_dot(snapshot.assignment))

    def write_comparison(
            self,
            report: PatchImpactReport,
            pre: AnalysisSnapshot,
            post: AnalysisSnapshot,
            emit: Iterable[str] = ("json", "csv", "newick", "dot"),
            qualities: Tuple[Optional[DataQuality], ...] = (None, None),
            runs: Tuple[Optional[dict], ...] = (None, None),
    ) -> None:
        """
        Write the impact report and both snapshots side by side under
        ``pre/`` and ``post/``. ``qualities`` and ``runs`` hold the pre and
        post ingest counters and fingerprints.
        """
        self.write_json("impact.json", report.to_dict())
        self.write_text("impact.md", report.to_markdown())
        self.write_snapshot(pre, emit=emit, quality=qualities[0],
                            run=runs[0], prefix="pre")
        self.write_snapshot(post, emit=emit, quality=qualities[1],
                            run=runs[1], prefix="post")
