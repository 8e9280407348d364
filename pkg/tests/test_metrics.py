import json

import numpy as np
import pytest

from lfpad import metrics
from lfpad.errors import ClassTooSmall, EmptyInput, EmptyMatrix, NoNegatives, NoPositives
from oracles import brute_force_cmc, count_far_frr_crr


def random_predictions(rng, n, k):
    y_true = rng.integers(0, k, n)
    y_pred = rng.integers(0, k, n)
    return y_true, y_pred


class TestConfusionAndRates:
    def test_far_arithmetic(self):
        cm = np.array([[10, 0], [2, 8]])
        assert metrics.far(cm) == pytest.approx(0.2)

    def test_far_perfect_rejection(self):
        cm = np.array([[5, 0], [0, 10]])
        assert metrics.far(cm) == 0.0

    def test_frr_arithmetic(self):
        cm = np.array([[3, 1], [0, 6]])
        assert metrics.frr(cm) == pytest.approx(0.25)

    def test_crr_binary_arithmetic(self):
        cm = np.array([[3, 1], [2, 4]])
        assert metrics.crr(cm) == pytest.approx(0.7)

    def test_crr_diagonal_is_one(self):
        cm = np.diag([4, 5, 6])
        assert metrics.crr(cm) == 1.0

    def test_no_negatives_raises(self):
        cm = np.array([[5, 1], [0, 0]])
        with pytest.raises(NoNegatives):
            metrics.far(cm)

    def test_no_positives_raises(self):
        cm = np.array([[0, 0], [1, 9]])
        with pytest.raises(NoPositives):
            metrics.frr(cm)

    def test_empty_matrix_raises(self):
        with pytest.raises(EmptyMatrix):
            metrics.crr(np.zeros((3, 3), dtype=np.int64))

    def test_matches_count_loop_oracle_binary(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            y_true, y_pred = random_predictions(rng, int(rng.integers(4, 40)), 2)
            if not (np.any(y_true == 0) and np.any(y_true != 0)):
                continue
            cm = metrics.confusion_matrix(y_true, y_pred, 2)
            far_o, frr_o, crr_o = count_far_frr_crr(y_true, y_pred)
            assert metrics.far(cm) == far_o
            assert metrics.frr(cm) == frr_o
            assert metrics.crr(cm) == crr_o

    def test_matches_count_loop_oracle_multiclass_collapse(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            y_true, y_pred = random_predictions(rng, 30, 5)
            if not (np.any(y_true == 0) and np.any(y_true != 0)):
                continue
            cm = metrics.confusion_matrix(y_true, y_pred, 5)
            # oracle collapses: positive iff class 0
            far_o, frr_o, _ = count_far_frr_crr(
                (y_true != 0).astype(int), (y_pred != 0).astype(int), positive=0
            )
            # in the collapsed labels, 0 stays the positive class
            assert metrics.far(cm) == far_o
            assert metrics.frr(cm) == frr_o

    def test_collapse_invariant_under_spoof_relabeling(self):
        rng = np.random.default_rng(2)
        y_true, y_pred = random_predictions(rng, 50, 5)
        cm = metrics.confusion_matrix(y_true, y_pred, 5)
        perm = np.array([0, 3, 1, 4, 2])  # fixes the real class, shuffles spoofs
        cm_p = metrics.confusion_matrix(perm[y_true], perm[y_pred], 5)
        assert metrics.far(cm) == metrics.far(cm_p)
        assert metrics.frr(cm) == metrics.frr(cm_p)
        assert metrics.crr(cm) == metrics.crr(cm_p)


class TestTerHter:
    def test_arithmetic(self):
        ter, hter = metrics.ter_hter(0.1, 0.05)
        assert ter == pytest.approx(0.15)
        assert hter == pytest.approx(0.075)

    def test_zero(self):
        assert metrics.ter_hter(0.0, 0.0) == (0.0, 0.0)

    def test_published_spoof_row_relation(self):
        # TER 0.777 halves to 0.38850, not the printed 0.3888: the
        # definitions win over the table's last-digit rounding
        ter = 0.777
        _, hter = metrics.ter_hter(ter, 0.0)
        assert hter == pytest.approx(0.3885, abs=1e-12)
        assert abs(hter - 0.3888) > 1e-4

    def test_identity_chain_on_random_matrices(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            cm = rng.integers(0, 20, (2, 2))
            if cm[0].sum() == 0 or cm[1].sum() == 0:
                continue
            f, r = metrics.far(cm), metrics.frr(cm)
            ter, hter = metrics.ter_hter(f, r)
            assert abs(ter - (f + r)) < 1e-12
            assert abs(hter - ter / 2) < 1e-12


class TestPerClassAndAttackTer:
    def test_per_class_crr_is_recall(self):
        cm = np.array([[8, 2, 0], [1, 6, 3], [0, 0, 5]])
        got = metrics.per_class_crr(cm)
        assert got[0] == pytest.approx(0.8)
        assert got[1] == pytest.approx(0.6)
        assert got[2] == pytest.approx(1.0)

    def test_attack_ter_uses_attack_pool(self):
        # rows: real, attack1, attack2
        cm = np.array([[9, 1, 0], [2, 8, 0], [0, 0, 10]])
        far_a, ter_a, hter_a = metrics.attack_ter(cm, attack=1)
        assert far_a == pytest.approx(0.2)
        assert ter_a == pytest.approx(0.2 + 0.1)
        assert hter_a == pytest.approx(ter_a / 2)


class TestCmc:
    def test_rank_k_always_one(self):
        rng = np.random.default_rng(4)
        scores = rng.random((30, 5))
        y = rng.integers(0, 5, 30)
        curve = metrics.cmc_curve(scores, y)
        assert curve[-1] == (5, 1.0)

    def test_all_correct_constant_curve(self):
        scores = np.tile(np.array([0.9, 0.05, 0.05]), (10, 1))
        y = np.zeros(10, dtype=int)
        curve = metrics.cmc_curve(scores, y)
        assert all(acc == 1.0 for _, acc in curve)

    def test_monotone_nondecreasing(self):
        rng = np.random.default_rng(5)
        scores = rng.random((50, 6))
        y = rng.integers(0, 6, 50)
        curve = metrics.cmc_curve(scores, y)
        accs = [acc for _, acc in curve]
        assert all(a <= b for a, b in zip(accs, accs[1:]))

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            scores = rng.random((12, 5))
            y = rng.integers(0, 5, 12)
            assert metrics.cmc_curve(scores, y) == brute_force_cmc(scores, y)

    def test_ties_break_toward_lower_index(self):
        scores = np.array([[0.5, 0.5]])
        assert metrics.cmc_curve(scores, [0])[0] == (1, 1.0)
        assert metrics.cmc_curve(scores, [1])[0] == (1, 0.0)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            metrics.cmc_curve(np.zeros((0, 3)), [])


class TestSplit:
    def test_stratified_even(self):
        labels = [0, 0, 1, 1, 2, 2, 3, 3, 4, 4]
        train, test = metrics.stratified_split(labels, seed=0)
        for c in range(5):
            assert sum(1 for i in train if labels[i] == c) == 1
            assert sum(1 for i in test if labels[i] == c) == 1

    def test_partition(self):
        rng = np.random.default_rng(7)
        labels = rng.integers(0, 3, 30)
        train, test = metrics.stratified_split(labels, seed=1)
        combined = sorted(list(train) + list(test))
        assert combined == list(range(30))

    def test_deterministic(self):
        labels = [0, 1] * 10
        a = metrics.stratified_split(labels, seed=5)
        b = metrics.stratified_split(labels, seed=5)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_class_too_small(self):
        with pytest.raises(ClassTooSmall):
            metrics.stratified_split([0, 0, 1], seed=0)

    def test_split_dataset_wrapper(self):
        class S:
            def __init__(self, label):
                self.label = label

        samples = [S(i % 2) for i in range(8)]
        train, test = metrics.split_dataset(samples, seed=3)
        assert len(train) == 4 and len(test) == 4
        assert not (set(id(s) for s in train) & set(id(s) for s in test))


class TestReport:
    def make_report(self):
        rng = np.random.default_rng(8)
        scores = rng.random((20, 2))
        scores /= scores.sum(axis=1, keepdims=True)
        y = rng.integers(0, 2, 20)
        preds = scores.argmax(axis=1)
        cm = metrics.confusion_matrix(y, preds, 2)
        return metrics.build_report("two", cm, scores, y, ["real", "spoof"], 7, "abc123")

    def test_fixed_key_set(self):
        report = self.make_report()
        payload = json.loads(report.to_json())
        assert set(payload) == {
            "mode", "confusion", "far", "frr", "ter", "hter", "crr",
            "per_class_crr", "cmc", "seed", "config_digest",
        }

    def test_identities_hold(self):
        report = self.make_report()
        assert report.ter == pytest.approx(report.far + report.frr, abs=1e-12)
        assert report.hter == pytest.approx(report.ter / 2, abs=1e-12)

    def test_two_class_single_per_class_entry(self):
        report = self.make_report()
        assert list(report.per_class_crr) == ["spoof"]

    def test_multi_class_five_entries(self):
        rng = np.random.default_rng(9)
        scores = rng.random((40, 5))
        scores /= scores.sum(axis=1, keepdims=True)
        y = np.repeat(np.arange(5), 8)
        preds = scores.argmax(axis=1)
        cm = metrics.confusion_matrix(y, preds, 5)
        names = ["real", "print", "wrapped_print", "scan", "mobile"]
        report = metrics.build_report("multi", cm, scores, y, names, 7, "abc123")
        assert sorted(report.per_class_crr) == sorted(names)

    def test_json_deterministic(self):
        a = self.make_report().to_json()
        b = self.make_report().to_json()
        assert a == b

    def test_cmc_csv_shape(self):
        report = self.make_report()
        lines = report.cmc_csv().strip().splitlines()
        assert lines[0] == "rank,accuracy"
        assert len(lines) == 3
