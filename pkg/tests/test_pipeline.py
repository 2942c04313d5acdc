import os
import unittest

from rolecluster import __version__
from rolecluster.ingest import read_records
from rolecluster.ingest import TeamComposition
from rolecluster.ingest import expand_and_filter
from rolecluster.pipeline import analyze
from rolecluster.pipeline import fingerprint
from rolecluster.pipeline import analyze_compositions
from rolecluster._config import AnalysisConfig
from rolecluster._loggers import StageMonitor
from rolecluster._exceptions import InputError

SAMPLE = os.path.join(os.path.dirname(__file__), "..", "data",
                      "sample_haven.csv")

ROLES = [
    {"Astra", "Brimstone", "Omen"},
    {"Chamber", "Cypher", "Killjoy"},
    {"Jett", "Neon", "Raze"},
    {"Breach", "KAY/O", "Skye", "Sova"},
    {"Fade"},
]


def _haven_compositions():
    return expand_and_filter(read_records([SAMPLE]), "Haven")


class TestAnalyzeCompositions(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        """ Set up variables shared across tests """
        cls.comps = _haven_compositions()
        cls.snapshot = analyze_compositions(cls.comps, label="haven")

    def test_haven_roles(self):
        """ Silhouette picks five clusters, one per role plus Fade """
        snapshot = self.snapshot
        self.assertEqual(len(snapshot.roster), 14)
        self.assertEqual(snapshot.assignment.k, 5)
        self.assertEqual(snapshot.k_source, "silhouette")
        self.assertEqual(
            sorted(map(sorted, ROLES)),
            sorted(sorted(c) for c in snapshot.assignment.clusters()))
        self.assertEqual([o.agent for o in snapshot.outliers], ["Fade"])
        self.assertEqual(snapshot.excluded, [])

    def test_sweep_range(self):
        sweep = self.snapshot.sweep
        self.assertEqual(sorted(sweep.scores), list(range(2, 14)))
        self.assertEqual(sweep.best_k, 5)
        self.assertAlmostEqual(sweep.best_score, 0.7905, delta=1e-3)
        self.assertAlmostEqual(sweep.scores[2], 0.6018, delta=1e-3)
        self.assertAlmostEqual(sweep.scores[4], 0.6017, delta=1e-3)
        self.assertEqual(max(sweep.scores.values()), sweep.best_score)

    def test_snapshot_is_consistent(self):
        snapshot = self.snapshot
        self.assertEqual(snapshot.agents, snapshot.roster.agents)
        self.assertEqual(len(snapshot.dendrogram.merges), 13)
        self.assertEqual(snapshot.distances.metric, "jsd")
        self.assertEqual(snapshot.cooccurrence.counts.sum(),
                         len(self.comps) * 20)

    def test_k_override(self):
        snapshot = analyze_compositions(self.comps, k=4)
        self.assertEqual(snapshot.assignment.k, 4)
        self.assertEqual(snapshot.k_source, "override")
        self.assertEqual(len(snapshot.assignment.clusters()), 4)

    def test_k_out_of_range(self):
        for k in (1, 14):
            with self.assertRaises(InputError):
                analyze_compositions(self.comps, k=k)

    def test_sqrt_metric(self):
        snapshot = analyze_compositions(self.comps, sqrt_jsd=True)
        self.assertEqual(snapshot.distances.metric, "sqrt_jsd")

    def test_too_few_agents(self):
        comp = TeamComposition(composition_id="0", map="Haven", team="T",
                               agents=("A", "B", "C", "D", "E"))
        with self.assertRaises(InputError):
            analyze_compositions([], label="empty")
        snapshot = analyze_compositions([comp], k=2)
        self.assertEqual(len(snapshot.assignment.clusters()), 2)

    def test_stage_logging(self):
        with self.assertLogs("rolecluster", level="INFO") as logs:
            analyze_compositions(self.comps, monitor=StageMonitor())
        text = "\n".join(logs.output)
        for stage in ("co-occurrence", "divergence", "clustering",
                      "silhouette sweep"):
            self.assertIn(f"Started {stage}", text)
            self.assertIn(f"Finished {stage}", text)


class TestAnalyze(unittest.TestCase):

    def setUp(self):
        """ Set up variables shared across tests """
        self.config = AnalysisConfig(inputs=[SAMPLE], map_filter="Haven")

    def test_quality(self):
        snapshot, quality = analyze(self.config)
        self.assertEqual(snapshot.label, "sample_haven")
        self.assertEqual(quality.rows_read, 166)
        self.assertEqual(quality.records_parsed, 166)
        self.assertEqual(quality.dropped_by_filter, 3)
        self.assertEqual(quality.bad_lines, [])

    def test_no_filter_keeps_bind(self):
        self.config.map_filter = None
        snapshot, quality = analyze(self.config)
        self.assertIn("Viper", snapshot.roster)
        self.assertEqual(quality.dropped_by_filter, 0)

    def test_unknown_map(self):
        self.config.map_filter = "Lotus"
        with self.assertRaises(InputError) as ctx:
            analyze(self.config)
        self.assertIn("no compositions after filtering", str(ctx.exception))

    def test_no_inputs(self):
        with self.assertRaises(InputError):
            analyze(AnalysisConfig())

    def test_fingerprint(self):
        run = fingerprint(self.config)
        self.assertEqual(run["tool"], "rolecluster")
        self.assertEqual(run["version"], __version__)
        self.assertEqual(len(run["inputs"]), 1)
        self.assertEqual(len(run["inputs"][0]["sha256"]), 64)
        self.assertEqual(run["options"]["map_filter"], "Haven")
        self.assertEqual(run["options"]["log_base"], 2)
        self.assertEqual(fingerprint(self.config), run)


if __name__ == "__main__":
    unittest.main()
