"""Synthetic crowd generation: determinism, structure and calibration."""

import numpy as np
import pytest

from crowdbwa.baselines import majority_vote
from crowdbwa.dataset import load_labels, load_truth, save_labels, save_truth
from crowdbwa.evaluation import accuracy
from crowdbwa.synthetic import SplitMix64, SynthSpec, draw_worker_confusions, generate


class TestSplitMix64:
    def test_reference_vector_seed_zero(self):
        rng = SplitMix64(0)
        assert [rng.next_uint64() for _ in range(3)] == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_reference_vector_seed_1234567(self):
        rng = SplitMix64(1234567)
        assert [rng.next_uint64() for _ in range(5)] == [
            6457827717110365317,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ]

    def test_uniform_range(self):
        rng = SplitMix64(99)
        values = [rng.uniform() for _ in range(1000)]
        assert all(0.0 <= u < 1.0 for u in values)

    def test_categorical_inverts_cdf(self):
        rng = SplitMix64(5)
        cdf = np.array([0.2, 0.5, 1.0])
        draws = [rng.categorical(cdf) for _ in range(3000)]
        fractions = np.bincount(draws, minlength=3) / len(draws)
        assert fractions == pytest.approx([0.2, 0.3, 0.5], abs=0.03)


class TestSpecValidation:
    def test_redundancy_exceeding_workers(self):
        with pytest.raises(ValueError, match="redundancy"):
            SynthSpec(num_items=5, num_workers=3, num_classes=2, redundancy=4)

    def test_bad_prior(self):
        with pytest.raises(ValueError):
            SynthSpec(num_items=5, num_workers=5, num_classes=2, redundancy=2,
                      class_prior=(0.9, 0.2))

    def test_bad_confusion_rows(self):
        conf = np.full((2, 2, 2), 0.4)
        with pytest.raises(ValueError):
            SynthSpec(num_items=5, num_workers=2, num_classes=2, redundancy=1,
                      confusion=conf)

    def test_bad_accuracy_range(self):
        with pytest.raises(ValueError):
            SynthSpec(num_items=5, num_workers=5, num_classes=2, redundancy=2,
                      accuracy_range=(0.9, 0.5))


class TestGenerate:
    def test_exact_redundancy_from_distinct_workers(self):
        spec = SynthSpec(num_items=50, num_workers=9, num_classes=3, redundancy=4, seed=1)
        matrix, _ = generate(spec)
        assert np.all(matrix.labels_per_item == 4)
        # distinctness is enforced by construction: duplicate pairs would
        # have been rejected when the matrix was built
        assert matrix.num_labels == 200

    def test_fixed_seed_reproduces_bit_identically(self):
        spec = SynthSpec(num_items=40, num_workers=8, num_classes=2, redundancy=3, seed=7)
        m1, t1 = generate(spec)
        m2, t2 = generate(spec)
        assert m1 == m2
        assert t1.mapping == t2.mapping

    def test_different_seeds_differ(self):
        base = dict(num_items=40, num_workers=8, num_classes=2, redundancy=3)
        m1, _ = generate(SynthSpec(seed=1, **base))
        m2, _ = generate(SynthSpec(seed=2, **base))
        assert m1 != m2

    def test_perfect_workers_reproduce_truth(self):
        k = 3
        conf = np.tile(np.eye(k), (6, 1, 1))
        spec = SynthSpec(num_items=60, num_workers=6, num_classes=k, redundancy=3,
                         seed=3, confusion=conf)
        matrix, truth = generate(spec)
        assert np.array_equal(matrix.labels, np.array(
            [truth[int(i)] for i in matrix.items]))
        assert accuracy(majority_vote(matrix).labels, truth) == 1.0

    def test_random_workers_leave_majority_vote_at_chance(self):
        conf = np.full((20, 2, 2), 0.5)
        spec = SynthSpec(num_items=10000, num_workers=20, num_classes=2, redundancy=3,
                         seed=17, confusion=conf)
        matrix, truth = generate(spec)
        assert accuracy(majority_vote(matrix).labels, truth) == pytest.approx(0.5, abs=0.05)

    def test_class_prior_respected(self):
        spec = SynthSpec(num_items=8000, num_workers=5, num_classes=3, redundancy=1,
                         seed=23, class_prior=(0.6, 0.3, 0.1))
        _, truth = generate(spec)
        _, labels = truth.as_arrays()
        fractions = np.bincount(labels, minlength=3) / len(truth)
        assert fractions == pytest.approx([0.6, 0.3, 0.1], abs=0.02)

    def test_empirical_worker_accuracy_tracks_confusion_diagonal(self):
        rng = np.random.default_rng(0)
        k = 2
        diagonals = rng.uniform(0.55, 0.95, size=8)
        conf = np.empty((8, k, k))
        for j, d in enumerate(diagonals):
            conf[j] = np.array([[d, 1 - d], [1 - d, d]])
        spec = SynthSpec(num_items=4000, num_workers=8, num_classes=k, redundancy=3,
                         seed=29, confusion=conf)
        matrix, truth = generate(spec)
        truth_arr = np.array([truth[int(i)] for i in matrix.items])
        correct = matrix.labels == truth_arr
        for j, d in enumerate(diagonals):
            mask = matrix.workers == j
            m = int(mask.sum())
            rate = correct[mask].mean()
            se = np.sqrt(d * (1 - d) / m)
            assert abs(rate - d) <= 3 * se

    def test_symmetric_confusions_replayable(self):
        spec = SynthSpec(num_items=10, num_workers=4, num_classes=3, redundancy=2,
                         seed=11, accuracy_range=(0.6, 0.9))
        conf = draw_worker_confusions(spec)
        # the accuracy draws are the first uniforms of the stream
        rng = SplitMix64(11)
        expected = [0.6 + rng.uniform() * 0.3 for _ in range(4)]
        assert np.diagonal(conf, axis1=1, axis2=2) == pytest.approx(
            np.repeat(np.array(expected)[:, None], 3, axis=1), rel=1e-12
        )
        assert conf.sum(axis=2) == pytest.approx(np.ones((4, 3)), rel=1e-12)

    def test_written_files_reload(self, tmp_path):
        spec = SynthSpec(num_items=30, num_workers=6, num_classes=2, redundancy=3, seed=5)
        matrix, truth = generate(spec)
        save_labels(matrix, tmp_path / "labels.csv")
        save_truth(truth, matrix, tmp_path / "truth.csv")
        reloaded = load_labels(tmp_path / "labels.csv", num_classes=2)
        retruth = load_truth(tmp_path / "truth.csv", reloaded)
        assert reloaded.num_labels == matrix.num_labels
        # content matches under external ids
        original = {
            (matrix.item_ids[i], matrix.worker_ids[j]): matrix.label_names[k]
            for i, j, k in zip(matrix.items, matrix.workers, matrix.labels)
        }
        round_tripped = {
            (reloaded.item_ids[i], reloaded.worker_ids[j]): reloaded.label_names[k]
            for i, j, k in zip(reloaded.items, reloaded.workers, reloaded.labels)
        }
        assert original == round_tripped
        assert {reloaded.item_ids[i]: k for i, k in retruth.mapping.items()} == {
            matrix.item_ids[i]: k for i, k in truth.mapping.items()
        }
