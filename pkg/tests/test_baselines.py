"""Majority vote and Dawid-Skene reference aggregators.

The vectorised Dawid-Skene fit is cross-checked against a plain-loop
re-implementation of the same smoothed EM updates.
"""

import numpy as np
import pytest

from crowdbwa.baselines import DsParams, dawid_skene, majority_vote
from crowdbwa.dataset import LabelMatrix
from crowdbwa.synthetic import SynthSpec, generate


def matrix_from(rows, **kwargs):
    return LabelMatrix.from_triples(rows, **kwargs)


class TestMajorityVote:
    def test_simple_majority(self):
        m = matrix_from([("q0", "w0", "0"), ("q0", "w1", "0"), ("q0", "w2", "1")])
        assert majority_vote(m).labels.tolist() == [0]

    def test_tie_goes_to_smallest_class(self):
        m = matrix_from(
            [("q0", "w0", "0"), ("q0", "w1", "0"), ("q0", "w2", "1"), ("q0", "w3", "1")]
        )
        assert majority_vote(m).labels.tolist() == [0]

    def test_three_class_majority(self):
        rows = [("q0", "w0", "0")] + [("q0", f"w{j}", "2") for j in range(1, 5)]
        m = matrix_from(rows, num_classes=3)
        assert majority_vote(m).labels.tolist() == [2]

    def test_unlabelled_item_flagged(self):
        m = matrix_from([("q0", "w0", "1")], item_ids=["q0", "q1"], num_classes=2)
        result = majority_vote(m)
        assert result.labels.tolist() == [1, 0]
        assert result.is_unlabeled.tolist() == [False, True]

    def test_worker_identity_irrelevant(self):
        rows = [("q0", "w0", "0"), ("q0", "w1", "1"), ("q1", "w1", "1"), ("q1", "w2", "1")]
        renamed = [(q, {"w0": "a", "w1": "b", "w2": "c"}[w], y) for q, w, y in rows]
        assert np.array_equal(
            majority_vote(matrix_from(rows)).labels,
            majority_vote(matrix_from(renamed)).labels,
        )

    def test_class_permutation_equivariance(self):
        rng = np.random.default_rng(0)
        rows = [
            (f"q{i}", f"w{j}", str(rng.integers(3)))
            for i in range(15)
            for j in rng.choice(6, size=3, replace=False)
        ]
        m = matrix_from(rows, num_classes=3)
        perm = np.array([1, 2, 0])
        permuted = LabelMatrix(
            items=m.items.copy(), workers=m.workers.copy(), labels=perm[m.labels].copy(),
            num_items=m.num_items, num_workers=m.num_workers, num_classes=3,
            item_ids=m.item_ids, worker_ids=m.worker_ids,
            label_names=tuple(np.array(m.label_names)[np.argsort(perm)]),
        )
        base, moved = majority_vote(m).labels, majority_vote(permuted).labels
        # equivariance holds wherever the original argmax was untied
        counts = np.stack(
            [np.bincount(m.items[m.labels == k], minlength=m.num_items) for k in range(3)]
        ).T
        untied = (counts == counts.max(axis=1, keepdims=True)).sum(axis=1) == 1
        assert np.array_equal(perm[base[untied]], moved[untied])


def naive_dawid_skene(matrix, params):
    """Plain-loop reference of the same smoothed EM updates."""
    n, w, k = matrix.num_items, matrix.num_workers, matrix.num_classes
    triples = list(zip(matrix.items, matrix.workers, matrix.labels))
    s = params.smoothing

    posteriors = np.full((n, k), 1.0 / k)
    counts = np.zeros((n, k))
    for i, _, l in triples:
        counts[i, l] += 1
    totals = counts.sum(axis=1)
    for i in range(n):
        if totals[i]:
            posteriors[i] = counts[i] / totals[i]

    for _ in range(params.max_iters):
        priors = (posteriors.sum(axis=0) + s) / (n + k * s)
        confusion = np.zeros((w, k, k))
        for i, j, l in triples:
            confusion[j, :, l] += posteriors[i]
        confusion += s
        confusion /= confusion.sum(axis=2, keepdims=True)

        new_posteriors = np.tile(np.log(priors), (n, 1))
        for i, j, l in triples:
            new_posteriors[i] += np.log(confusion[j, :, l])
        new_posteriors = np.exp(new_posteriors - new_posteriors.max(axis=1, keepdims=True))
        new_posteriors /= new_posteriors.sum(axis=1, keepdims=True)
        delta = np.abs(new_posteriors - posteriors).max()
        posteriors = new_posteriors
        if delta <= params.tolerance:
            break
    return posteriors


class TestDawidSkene:
    def test_unanimous_matches_majority_vote(self):
        rng = np.random.default_rng(5)
        truth = rng.integers(3, size=10)
        rows = [
            (f"q{i}", f"w{j}", str(truth[i]))
            for i in range(10)
            for j in rng.choice(6, size=3, replace=False)
        ]
        m = matrix_from(rows, num_classes=3)
        assert np.array_equal(dawid_skene(m).hard_labels, majority_vote(m).labels)

    def test_single_item_single_worker(self):
        m = matrix_from([("q0", "w0", "1")], num_classes=2)
        assert dawid_skene(m).hard_labels.tolist() == [1]

    def test_consistent_majority_pair_wins(self):
        # workers a and b agree on all three items; c always disagrees
        rows = []
        pair_labels = ["0", "1", "0"]
        for i, lab in enumerate(pair_labels):
            rows += [(f"q{i}", "a", lab), (f"q{i}", "b", lab),
                     (f"q{i}", "c", "1" if lab == "0" else "0")]
        m = matrix_from(rows, num_classes=2)
        result = dawid_skene(m)
        assert result.hard_labels.tolist() == [0, 1, 0]

    def test_posteriors_sum_to_one(self):
        m, _ = generate(SynthSpec(num_items=80, num_workers=10, num_classes=4,
                                  redundancy=4, seed=9, accuracy_range=(0.3, 0.9)))
        result = dawid_skene(m)
        assert np.abs(result.posteriors.sum(axis=1) - 1.0).max() <= 1e-12

    def test_objective_non_decreasing(self):
        for seed in range(5):
            m, _ = generate(SynthSpec(num_items=60, num_workers=8, num_classes=3,
                                      redundancy=3, seed=seed, accuracy_range=(0.3, 0.95)))
            trace = dawid_skene(m).objective_trace
            assert np.all(np.diff(trace) >= -1e-9)

    def test_identical_workers_reduce_to_majority_vote(self):
        rng = np.random.default_rng(2)
        pattern = rng.integers(2, size=12)
        rows = [
            (f"q{i}", f"w{j}", str(pattern[i])) for i in range(12) for j in range(4)
        ]
        m = matrix_from(rows, num_classes=2)
        assert np.array_equal(dawid_skene(m).hard_labels, majority_vote(m).labels)

    def test_matches_naive_reference(self):
        params = DsParams(max_iters=40, tolerance=1e-10)
        for seed in range(4):
            m, _ = generate(SynthSpec(num_items=25, num_workers=6, num_classes=3,
                                      redundancy=3, seed=seed, accuracy_range=(0.4, 0.9)))
            fast = dawid_skene(m, params)
            slow = naive_dawid_skene(m, params)
            assert fast.posteriors == pytest.approx(slow, abs=1e-10)

    def test_deterministic(self):
        m, _ = generate(SynthSpec(num_items=40, num_workers=7, num_classes=3,
                                  redundancy=3, seed=13))
        a, b = dawid_skene(m), dawid_skene(m)
        assert np.array_equal(a.posteriors, b.posteriors)
        assert np.array_equal(a.hard_labels, b.hard_labels)

    def test_param_validation(self):
        for kwargs in ({"max_iters": 0}, {"tolerance": 0.0}, {"smoothing": 0.0}):
            with pytest.raises(ValueError):
                DsParams(**kwargs)
