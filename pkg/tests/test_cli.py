import io
import os
import json
import unittest
import tempfile
import contextlib

from rolecluster.cli import main
from rolecluster.cli import build_parser
from rolecluster.cli import resolve_config

DATA = os.path.join(os.path.dirname(__file__), "..", "data")
SAMPLE = os.path.join(DATA, "sample_haven.csv")
MODEL = os.path.join(DATA, "synth_roles.toml")


def _run(*argv):
    """ Run the command line, returning (status, stdout, stderr) """
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = main(list(argv))
    return status, out.getvalue(), err.getvalue()


def _read(path, mode="r"):
    with open(path, mode) as f:
        return f.read()


class TestAnalyzeCommand(unittest.TestCase):

    def setUp(self):
        """ Set up variables shared across tests """
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def test_writes_all_artifacts(self):
        status, out, _ = _run("analyze", "--input", SAMPLE, "--map", "Haven",
                              "--out", self.tmp)
        self.assertEqual(status, 0)
        self.assertIn("sample_haven: k=5 (silhouette)", out)
        self.assertIn("outlier: Fade", out)
        for name in ("report.json", "dendrogram.json", "cooccurrence.csv",
                     "probabilities.csv", "distances.csv", "assignment.csv",
                     "sweep.csv", "dendrogram.nwk", "dendrogram.dot"):
            self.assertTrue(os.path.exists(os.path.join(self.tmp, name)),
                            name)

        report = json.loads(_read(os.path.join(self.tmp, "report.json")))
        self.assertEqual(report["k"], 5)
        self.assertEqual(report["log_base"], 2)
        self.assertEqual(len(report["roster"]), 14)
        self.assertEqual(report["data_quality"]["dropped_by_filter"], 3)
        self.assertEqual(report["fingerprint"]["options"]["map_filter"],
                         "Haven")
        self.assertEqual(report["outliers"][0]["agent"], "Fade")

    def test_deterministic_output(self):
        """ Re-running on the same input gives byte-identical reports """
        first = os.path.join(self.tmp, "a")
        second = os.path.join(self.tmp, "b")
        for out_dir in (first, second):
            status, _, _ = _run("analyze", "--input", SAMPLE, "--map",
                                "Haven", "--out", out_dir, "--workers", "2")
            self.assertEqual(status, 0)
        for name in ("report.json", "distances.csv", "dendrogram.nwk"):
            self.assertEqual(_read(os.path.join(first, name), "rb"),
                             _read(os.path.join(second, name), "rb"))

    def test_emit_subset(self):
        status, _, _ = _run("analyze", "--input", SAMPLE, "--out", self.tmp,
                            "--emit", "newick")
        self.assertEqual(status, 0)
        self.assertEqual(os.listdir(self.tmp), ["dendrogram.nwk"])

    def test_k_override(self):
        status, out, _ = _run("analyze", "--input", SAMPLE, "--map", "Haven",
                              "--out", self.tmp, "--k", "3", "--emit",
                              "json")
        self.assertEqual(status, 0)
        self.assertIn("k=3 (override)", out)

    def test_empty_input(self):
        empty = os.path.join(self.tmp, "empty.csv")
        with open(empty, "w"):
            pass
        status, _, err = _run("analyze", "--input", empty, "--out", self.tmp)
        self.assertEqual(status, 2)
        self.assertIn("no compositions after filtering", err)

    def test_invalid_row(self):
        bad = os.path.join(self.tmp, "bad.csv")
        with open(bad, "w") as f:
            f.write("tournament,stage,match_type,map,team,agent_1,agent_2,"
                    "agent_3,agent_4,agent_5,wins,losses,maps_played\n"
                    "VCT,Groups,Bo3,Haven,T,Jett,Jett,Sova,Omen,Killjoy,"
                    "1,0,1\n")
        status, _, err = _run("analyze", "--input", bad, "--out", self.tmp)
        self.assertEqual(status, 2)
        self.assertIn("duplicate", err)

    def test_missing_file(self):
        status, _, err = _run("analyze", "--input",
                              os.path.join(self.tmp, "nope.csv"))
        self.assertEqual(status, 2)
        self.assertIn("rolecluster: error:", err)

    def test_bad_config(self):
        config = os.path.join(self.tmp, "config.toml")
        with open(config, "w") as f:
            f.write('linkage = "ward"\n')
        status, _, err = _run("analyze", "--input", SAMPLE, "--config",
                              config, "--out", self.tmp)
        self.assertEqual(status, 2)
        self.assertIn("linkage", err)

    def test_no_overwrite(self):
        argv = ["analyze", "--input", SAMPLE, "--out", self.tmp, "--emit",
                "json"]
        self.assertEqual(_run(*argv)[0], 0)
        status, _, err = _run(*argv, "--no-overwrite")
        self.assertEqual(status, 2)
        self.assertIn("report.json already exists", err)

    def test_no_overwrite_into_new_directory(self):
        status, _, _ = _run("analyze", "--input", SAMPLE, "--out",
                            os.path.join(self.tmp, "fresh"), "--emit", "json",
                            "--no-overwrite")
        self.assertEqual(status, 0)

    def test_bad_emit(self):
        status, _, _ = _run("analyze", "--input", SAMPLE, "--emit", "png",
                            "--out", self.tmp)
        self.assertEqual(status, 2)


class TestCompareCommand(unittest.TestCase):

    def test_self_comparison(self):
        """ Comparing a dataset with itself reports no change """
        with tempfile.TemporaryDirectory() as tmp:
            status, out, _ = _run("compare", "--pre", SAMPLE, "--post",
                                  SAMPLE, "--map", "Haven", "--out", tmp,
                                  "--pre-label", "before", "--post-label",
                                  "after")
            self.assertEqual(status, 0)
            self.assertIn("before -> after", out)
            impact = json.loads(_read(os.path.join(tmp, "impact.json")))
            self.assertTrue(os.path.exists(os.path.join(tmp, "impact.md")))
            self.assertTrue(
                os.path.exists(os.path.join(tmp, "pre", "report.json")))
            self.assertTrue(
                os.path.exists(os.path.join(tmp, "post", "report.json")))

        self.assertFalse(impact["k_mismatch"])
        self.assertEqual(impact["membership_shifts"], [])
        self.assertEqual(len(impact["per_agent"]), 14)
        for row in impact["per_agent"].values():
            self.assertEqual(row["delta_centroid"], 0.0)
        for row in impact["per_cluster"]:
            if row["delta_inter"] is not None:
                self.assertEqual(row["delta_inter"], 0.0)

    def test_spelling_shared_between_datasets(self):
        """ Kayo in the post data is the KAY/O of the pre data """
        with tempfile.TemporaryDirectory() as tmp:
            post = os.path.join(tmp, "post.csv")
            with open(post, "w", encoding="utf-8") as f:
                f.write(_read(SAMPLE).replace("KAY/O", "Kayo"))
            status, _, _ = _run("compare", "--pre", SAMPLE, "--post", post,
                                "--map", "Haven", "--out", tmp, "--emit",
                                "json")
            self.assertEqual(status, 0)
            impact = json.loads(_read(os.path.join(tmp, "impact.json")))
            post_report = json.loads(
                _read(os.path.join(tmp, "post", "report.json")))

        self.assertEqual(impact["roster_diff"]["added"], [])
        self.assertEqual(impact["roster_diff"]["removed"], [])
        self.assertIn("KAY/O", impact["per_agent"])
        self.assertEqual(impact["per_agent"]["KAY/O"]["delta_centroid"], 0.0)
        self.assertIn("KAY/O", post_report["roster"])
        self.assertNotIn("Kayo", post_report["roster"])

    def test_no_overwrite(self):
        """ --no-overwrite refuses to replace an earlier report """
        with tempfile.TemporaryDirectory() as tmp:
            argv = ["compare", "--pre", SAMPLE, "--post", SAMPLE, "--map",
                    "Haven", "--out", tmp, "--emit", "json"]
            self.assertEqual(_run(*argv)[0], 0)
            before = _read(os.path.join(tmp, "impact.json"))
            status, _, err = _run(*argv, "--no-overwrite")
            self.assertEqual(status, 2)
            self.assertIn("already exists", err)
            self.assertEqual(_read(os.path.join(tmp, "impact.json")), before)
            self.assertEqual(_run(*argv)[0], 0)


class TestSynthCommand(unittest.TestCase):

    def test_reproducible_dataset(self):
        """ Same model and seed write identical bytes, readable by analyze """
        with tempfile.TemporaryDirectory() as tmp:
            paths = [os.path.join(tmp, f"{n}.csv") for n in ("a", "b")]
            for path in paths:
                status, _, _ = _run("synth", "--model", MODEL, "--seed", "7",
                                    "--compositions", "2000", "--out", path)
                self.assertEqual(status, 0)
            self.assertEqual(_read(paths[0], "rb"), _read(paths[1], "rb"))

            status, out, _ = _run("analyze", "--input", paths[0], "--out",
                                  os.path.join(tmp, "out"), "--emit", "json")
            self.assertEqual(status, 0)
            report = json.loads(
                _read(os.path.join(tmp, "out", "report.json")))
        self.assertEqual(len(report["roster"]), 15)

    def test_noise_sweep_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "sweep.csv")
            status, out, _ = _run("synth", "--model", MODEL, "--out", path,
                                  "--compositions", "2000", "--sweep-noise",
                                  "0", "--seeds", "1", "2")
            self.assertEqual(status, 0)
            lines = _read(path).splitlines()
        self.assertEqual(lines[0], "noise,seed,best_k,ari")
        self.assertEqual(len(lines), 3)
        self.assertIn("mean ARI", out)

    def test_infeasible_model(self):
        with tempfile.TemporaryDirectory() as tmp:
            model = os.path.join(tmp, "model.toml")
            with open(model, "w") as f:
                f.write('[[roles]]\nname = "x"\n'
                        'agents = ["a", "b", "c", "d"]\n')
            status, _, err = _run("synth", "--model", model, "--out",
                                  os.path.join(tmp, "out.csv"))
        self.assertEqual(status, 2)
        self.assertIn("Infeasible", err)


class TestParser(unittest.TestCase):

    def test_flags_override_settings(self):
        args = build_parser().parse_args(
            ["analyze", "--input", SAMPLE, "--k", "4", "--lenient",
             "--emit", "json,csv", "--linkage", "complete"])
        config = resolve_config(args, args.inputs, args.label)
        self.assertEqual(config.k, 4)
        self.assertTrue(config.lenient)
        self.assertEqual(config.emit, ["json", "csv"])
        self.assertEqual(config.linkage, "complete")
        self.assertEqual(config.out_dir, "out")
        self.assertTrue(config.over_write)

        args = build_parser().parse_args(
            ["compare", "--pre", SAMPLE, "--post", SAMPLE, "--no-overwrite"])
        self.assertFalse(resolve_config(args, args.pre).over_write)

    def test_unknown_command(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                build_parser().parse_args(["cluster"])
        self.assertEqual(ctx.exception.code, 2)


if __name__ == "__main__":
    unittest.main()
