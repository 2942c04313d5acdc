import unittest
import itertools
import numpy as np

from rolecluster.ingest import Roster
from rolecluster.ingest import TeamComposition
from rolecluster.ingest import build_roster
from rolecluster.cooccur import normalize
from rolecluster.cooccur import pick_counts
from rolecluster.cooccur import build_cooccurrence
from rolecluster.cooccur import probabilities_frame
from rolecluster.cooccur import CooccurrenceMatrix
from rolecluster._exceptions import ConsistencyError


def _comp(cid, agents):
    return TeamComposition(composition_id=str(cid), map="Haven", team="T",
                           agents=tuple(agents))


def _random_comps(rng, agents, n):
    return [_comp(i, [str(a) for a in rng.choice(agents, size=5,
                                                  replace=False)])
            for i in range(n)]


class TestBuildCooccurrence(unittest.TestCase):

    def setUp(self):
        """ Set up variables shared across tests """
        self.comps = [_comp(0, "ABCDE"), _comp(1, "ABCDF")]
        self.roster = build_roster(self.comps)
        self.matrix = build_cooccurrence(self.comps, self.roster)

    def _count(self, a, b):
        r = self.roster
        return self.matrix.counts[r.position(a), r.position(b)]

    def test_pair_counts(self):
        self.assertEqual(self._count("A", "B"), 2)
        self.assertEqual(self._count("A", "E"), 1)
        self.assertEqual(self._count("E", "F"), 0)

    def test_symmetric_zero_diagonal(self):
        counts = self.matrix.counts
        np.testing.assert_array_equal(counts, counts.T)
        np.testing.assert_array_equal(np.diag(counts), 0)
        self.assertEqual(counts.dtype, np.int64)

    def test_single_composition(self):
        """ One composition has exactly 10 unit pairs """
        comps = [_comp(0, "ABCDE")]
        matrix = build_cooccurrence(comps, build_roster(comps))
        upper = np.triu(matrix.counts, k=1)
        self.assertEqual(np.count_nonzero(upper), 10)
        self.assertEqual(upper.max(), 1)

    def test_empty(self):
        roster = Roster(("A", "B", "C", "D", "E"))
        matrix = build_cooccurrence([], roster)
        self.assertFalse(matrix.counts.any())
        self.assertEqual(matrix.counts.shape, (5, 5))

    def test_unknown_agent(self):
        roster = Roster(("A", "B", "C", "D", "E"))
        with self.assertRaises(ConsistencyError):
            build_cooccurrence([_comp(0, "ABCDF")], roster)

    def test_brute_force(self):
        """ Matrix equals enumeration of all unordered pairs """
        rng = np.random.default_rng(7)
        agents = [f"agent{i:02d}" for i in range(12)]
        comps = _random_comps(rng, agents, 300)
        roster = build_roster(comps)
        expected = np.zeros((len(roster), len(roster)), dtype=np.int64)
        for comp in comps:
            for a, b in itertools.combinations(comp.agents, 2):
                i, j = roster.position(a), roster.position(b)
                expected[i, j] += 1
                expected[j, i] += 1
        matrix = build_cooccurrence(comps, roster)
        np.testing.assert_array_equal(matrix.counts, expected)
        self.assertEqual(matrix.pair_total(), 10 * len(comps))

    def test_workers_do_not_change_result(self):
        """ Threaded chunked aggregation is order independent """
        rng = np.random.default_rng(11)
        agents = [f"agent{i:02d}" for i in range(15)]
        comps = _random_comps(rng, agents, 1000)
        roster = build_roster(comps)
        serial = build_cooccurrence(comps, roster)
        threaded = build_cooccurrence(comps, roster, workers=4,
                                      chunk_size=64)
        np.testing.assert_array_equal(serial.counts, threaded.counts)

    def test_order_invariance(self):
        """ Shuffling the composition list leaves the matrix unchanged """
        rng = np.random.default_rng(5)
        agents = [f"agent{i:02d}" for i in range(13)]
        comps = _random_comps(rng, agents, 400)
        roster = build_roster(comps)
        expected = build_cooccurrence(comps, roster)
        for _ in range(5):
            shuffled = [comps[i] for i in rng.permutation(len(comps))]
            self.assertEqual(build_roster(shuffled), roster)
            matrix = build_cooccurrence(shuffled, roster, workers=3,
                                        chunk_size=50)
            np.testing.assert_array_equal(matrix.counts, expected.counts)

    def test_pick_counts(self):
        """ Row sums are four times the pick counts """
        picks = pick_counts(self.comps, self.roster)
        np.testing.assert_array_equal(self.matrix.counts.sum(axis=1),
                                      4 * picks)
        self.assertEqual(int(picks[self.roster.position("A")]), 2)

    def test_to_frame(self):
        df = self.matrix.to_frame()
        self.assertEqual(list(df.columns), list(self.roster.agents))
        self.assertEqual(df.loc["A", "B"], 2)


class TestNormalize(unittest.TestCase):

    def test_row_example(self):
        """ Counts (2, 2, 2, 1, 1) normalize by their sum 8 """
        roster = Roster(("A", "B", "C", "D", "E", "F"))
        counts = np.zeros((6, 6), dtype=np.int64)
        for j, value in zip(range(1, 6), (2, 2, 2, 1, 1)):
            counts[0, j] = counts[j, 0] = value
        vectors = normalize(CooccurrenceMatrix(roster=roster, counts=counts))
        np.testing.assert_allclose(
            vectors[0].probs, [0, 0.25, 0.25, 0.25, 0.125, 0.125])
        self.assertEqual(vectors[0].support_count, 8)

    def test_sums_to_one(self):
        rng = np.random.default_rng(3)
        agents = [f"agent{i:02d}" for i in range(10)]
        comps = _random_comps(rng, agents, 200)
        roster = build_roster(comps)
        vectors = normalize(build_cooccurrence(comps, roster))
        for i, vector in enumerate(vectors):
            self.assertAlmostEqual(vector.probs.sum(), 1.0, places=12)
            self.assertEqual(vector.probs[i], 0.0)
            self.assertTrue(np.all(vector.probs >= 0))

    def test_already_normalized_row(self):
        """ A row whose counts are already a distribution is unchanged """
        roster = Roster(("A", "B"))
        counts = np.array([[0, 1], [1, 0]], dtype=np.int64)
        vectors = normalize(CooccurrenceMatrix(roster=roster, counts=counts))
        np.testing.assert_array_equal(vectors[0].probs, [0.0, 1.0])

    def test_idempotent(self):
        """ Normalizing support-scaled vectors again gives them back """
        rng = np.random.default_rng(8)
        agents = [f"agent{i:02d}" for i in range(11)]
        comps = _random_comps(rng, agents, 250)
        roster = build_roster(comps)
        vectors = normalize(build_cooccurrence(comps, roster))
        scaled = np.vstack([v.probs * v.support_count for v in vectors])
        again = normalize(CooccurrenceMatrix(
            roster=roster, counts=np.rint(scaled).astype(np.int64)))
        for first, second in zip(vectors, again):
            self.assertEqual(first.support_count, second.support_count)
            np.testing.assert_allclose(second.probs, first.probs,
                                       rtol=0, atol=1e-12)

    def test_zero_row_undefined(self):
        """ A never-picked agent gets an undefined all-zero vector """
        comps = [_comp(0, "ABCDE")]
        roster = Roster(("A", "B", "C", "D", "E", "Z"))
        with self.assertLogs("rolecluster.cooccur", level="WARNING"):
            vectors = normalize(build_cooccurrence(comps, roster))
        self.assertFalse(vectors[-1].defined)
        self.assertEqual(vectors[-1].support_count, 0)
        self.assertFalse(vectors[-1].probs.any())
        self.assertTrue(all(v.defined for v in vectors[:-1]))

    def test_probabilities_frame(self):
        comps = [_comp(0, "ABCDE")]
        roster = build_roster(comps)
        df = probabilities_frame(normalize(build_cooccurrence(comps, roster)),
                                 roster)
        self.assertEqual(list(df.columns), ["support_count"] + list("ABCDE"))
        self.assertEqual(df.loc["A", "support_count"], 4)
        self.assertAlmostEqual(df.loc["A", "B"], 0.25)


if __name__ == "__main__":
    unittest.main()
