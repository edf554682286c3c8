"""Bayesian weighted-average aggregation of crowd labels.

The binary model treats each item's latent truth ``z_i`` as a continuous
value in [0, 1] with a Gaussian prior (mean ``mu``, precision ``lam``),
and each worker's labels as Gaussian observations of ``z_i`` whose
precision ``v_j`` carries a conjugate Gamma(a_v/2, b_v/2) prior. The
hyper-parameters read as pseudo-counts: a worker is assumed to have
labelled ``a_v`` items before and made ``b_v`` mistakes.

Inference alternates two closed-form steps until the truth estimates
stop moving:

* expectation: ``E[v_j] = (a_v + |N_j|) / (b_v + SSE_j)``, a smoothed
  inverse error rate, where ``SSE_j`` is worker j's sum of squared
  errors against the current truth estimates;
* maximisation: ``z_i`` becomes the weighted arithmetic average of the
  prior mean and the item's labels (weights ``lam`` and ``E[v_j]``),
  after which ``mu`` is reset to the mean of all ``z_i``.

Multi-class tasks are handled one-versus-rest: the binary model scores
each class against the rest and the highest-scoring class wins.

All reductions accumulate in a fixed order determined by the summand
values alone (never by array position), so repeated runs are
bit-identical and relabelling items or workers permutes every output
without perturbing a single bit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dataset import BinaryView, LabelMatrix, binary_view, vote_counts

#: Denominator floor for the relative convergence test, which is
#: otherwise undefined at z_prev = 0.
REL_DIFF_FLOOR = 1e-8

EPSILON_STRATEGIES = ("original", "adjusted", "fixed")


@dataclass(frozen=True)
class BwaHyperParams:
    """Hyper-parameters of the weighted-average model.

    ``a_v``/``b_v`` are the prior pseudo-counts of items labelled and
    mistakes made. ``b_v`` is usually derived from the data error rate
    (strategy ``"original"`` uses the rate as estimated, ``"adjusted"``
    rescales it by ``4 * (1 - 1/K)`` so a worst-case worker is believed
    to be no better than random guessing); strategy ``"fixed"`` takes
    ``b_v`` verbatim.
    """

    lam: float = 1.0
    a_v: float = 15.0
    b_v: float | None = None
    epsilon_strategy: str = "adjusted"
    tolerance: float = 1e-3
    max_iters: int = 500
    epsilon_floor: float = 1e-6

    def __post_init__(self):
        if self.epsilon_strategy not in EPSILON_STRATEGIES:
            raise ValueError(
                f"epsilon_strategy must be one of {EPSILON_STRATEGIES}, "
                f"got {self.epsilon_strategy!r}"
            )
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.a_v > 0:
            raise ValueError("a_v must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.epsilon_floor > 0:
            raise ValueError("epsilon_floor must be positive")
        if self.epsilon_strategy == "fixed":
            if self.b_v is None or not self.b_v > 0:
                raise ValueError("strategy 'fixed' requires a positive b_v")
        elif self.b_v is not None:
            raise ValueError(
                "b_v is derived from the data unless epsilon_strategy='fixed'"
            )


#: The two hyper-parameter profiles exposed by the command line.
PROFILES = {
    "av30-original": BwaHyperParams(a_v=30.0, epsilon_strategy="original"),
    "av15-adjusted": BwaHyperParams(a_v=15.0, epsilon_strategy="adjusted"),
}


@dataclass
class BwaState:
    """Mutable inference state for one binary run."""

    z: np.ndarray       # per-item truth estimate in [0, 1]
    mu: float           # prior mean, mean of z
    eqv: np.ndarray     # per-worker expected precision E[v_j]
    sse: np.ndarray     # per-worker sum of squared errors at z
    nll: float          # objective value at (z, mu), additive constant dropped
    iteration: int


@dataclass(frozen=True)
class BinaryResult:
    """Converged binary aggregation."""

    scores: np.ndarray
    hard_labels: np.ndarray
    mu: float
    worker_weights: np.ndarray
    nll_trace: np.ndarray
    converged: bool
    iterations: int


@dataclass(frozen=True)
class MultiClassResult:
    """One-versus-rest aggregation over all classes."""

    score_matrix: np.ndarray        # (num_classes, num_items)
    hard_labels: np.ndarray         # per item, argmax class (ties -> smallest)
    per_class: tuple[BinaryResult, ...]
    worker_weights: np.ndarray      # mean E[v_j] across the class runs
    epsilon: float                  # error rate used to derive b_v
    b_v: float


# ---------------------------------------------------------------------------
# order-canonical reductions
# ---------------------------------------------------------------------------


def _sum_by_value(values: np.ndarray) -> float:
    """Sum after sorting, so the result depends only on the multiset."""
    return float(np.sort(values, kind="stable").sum())


def _ranks(values: np.ndarray) -> np.ndarray:
    """Ascending-value ranks (ties broken by position, which only ever
    reorders equal floats)."""
    ranks = np.empty(values.size, dtype=np.int64)
    ranks[np.argsort(values, kind="stable")] = np.arange(values.size)
    return ranks


def _group_sums(groups, subkey, stride, num_groups, *summands):
    """Per-group sums accumulated in ascending ``subkey`` order.

    ``subkey`` must be an integer key in [0, stride) computed from the
    summand values alone (callers build it from value ranks); any two
    elements it fails to distinguish must hold equal floats, which add
    identically in any order. The accumulation order within a group is
    then a function of the group's value multiset, making the sums
    bit-identical under any relabelling of items or workers.
    """
    outs = [np.zeros(num_groups) for _ in summands]
    if groups.size:
        order = np.argsort(groups * stride + subkey, kind="stable")
        g = groups[order]
        starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
        heads = g[starts]
        for out, s in zip(outs, summands):
            out[heads] = np.add.reduceat(s[order], starts)
    return outs


# ---------------------------------------------------------------------------
# error-rate machinery for setting b_v
# ---------------------------------------------------------------------------


def estimate_error_rate(matrix: LabelMatrix, epsilon_floor: float = 1e-6) -> float:
    """Overall error rate of the crowd against its own soft majority vote.

    Pooled over the one-versus-rest views: each item/class cell with
    ``n`` of the item's ``m`` workers voting for the class contributes
    ``n * (m - n) / m`` disagreement mass. For two classes this is the
    classic ``sum_i n_i0 n_i1 / (n_i0 + n_i1)`` over the total label
    count. The raw value never exceeds 1/4; it is clamped below at
    ``epsilon_floor`` so downstream pseudo-counts stay positive.
    """
    if matrix.num_labels == 0:
        raise ValueError("cannot estimate an error rate without labels")
    counts = vote_counts(matrix).counts.astype(np.float64)
    totals = counts.sum(axis=1)
    labelled = totals > 0
    counts = counts[labelled]
    totals_l = totals[labelled]
    per_cell = counts * (totals_l[:, None] - counts) / totals_l[:, None]
    raw = _sum_by_value(per_cell.ravel()) / (matrix.num_classes * totals_l.sum())
    return max(raw, epsilon_floor)


def adjust_error_rate(epsilon: float, num_classes: int) -> float:
    """Rescale a raw error rate by ``4 * (1 - 1/K)``.

    Extends the estimate's natural [0, 1/4] range to [0, 1 - 1/K], the
    error rate of a random guesser over K classes (doubling, at K=2).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if num_classes < 2:
        raise ValueError("num_classes must be at least 2")
    return epsilon * 4.0 * (1.0 - 1.0 / num_classes)


def derive_bv(a_v: float, epsilon: float, epsilon_floor: float = 1e-6) -> float:
    """Prior mistake count implied by an error rate: ``b_v = a_v * eps``."""
    if not a_v > 0:
        raise ValueError("a_v must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    b_v = a_v * max(epsilon, epsilon_floor)
    if b_v > a_v:
        warnings.warn(
            f"b_v={b_v:g} exceeds a_v={a_v:g}; workers may receive weights "
            "below 1, which rewards prolific error-makers",
            stacklevel=2,
        )
    return b_v


def resolve(hp: BwaHyperParams, matrix: LabelMatrix) -> BwaHyperParams:
    """Pin ``b_v`` for ``matrix``, returning a ``"fixed"``-strategy copy."""
    if hp.epsilon_strategy == "fixed":
        return hp
    eps = estimate_error_rate(matrix, hp.epsilon_floor)
    if hp.epsilon_strategy == "adjusted":
        eps = adjust_error_rate(eps, matrix.num_classes)
    return replace(
        hp,
        b_v=derive_bv(hp.a_v, eps, hp.epsilon_floor),
        epsilon_strategy="fixed",
    )


# ---------------------------------------------------------------------------
# EM steps for the binary model
# ---------------------------------------------------------------------------


def _resolved(hp: BwaHyperParams, view: BinaryView) -> BwaHyperParams:
    return resolve(hp, view.matrix)


def _expectation(z, view: BinaryView, hp) -> tuple[np.ndarray, np.ndarray]:
    """(SSE_j, E[v_j]) for every worker at truth estimates ``z``."""
    residuals = z[view.items] - view.y
    squared = residuals * residuals
    # Within each worker, accumulate the indicator-0 residuals in
    # ascending z order, then the indicator-1 residuals in descending z
    # order: both sequences are ascending in the squared residual, so
    # the order is determined by the values alone.
    n = view.num_items
    rank_z = _ranks(z)[view.items]
    subkey = np.where(view.y == 1.0, 2 * n - 1 - rank_z, rank_z)
    (sse,) = _group_sums(view.workers, subkey, 2 * n, view.num_workers, squared)
    # Each squared residual is <= 1, so SSE_j <= |N_j| exactly; clamp away
    # any accumulated rounding overshoot to preserve the minimum-weight
    # guarantee E[v_j] >= 1 when b_v <= a_v.
    n_j = view.labels_per_worker
    np.minimum(sse, n_j, out=sse)
    eqv = (hp.a_v + n_j) / (hp.b_v + sse)
    return sse, eqv


def _objective(z, mu, sse, view: BinaryView, hp) -> float:
    """Negative log likelihood at (z, mu), additive constant dropped."""
    dev = z - mu
    item_term = 0.5 * hp.lam * _sum_by_value(dev * dev)
    worker_term = _sum_by_value(
        0.5 * (hp.a_v + view.labels_per_worker) * np.log(hp.b_v + sse)
    )
    return item_term + worker_term


def init_state(view: BinaryView, hp: BwaHyperParams) -> BwaState:
    """Start from the soft majority vote.

    ``z_i`` is the fraction of the item's workers voting for the focal
    class (0.5 for unlabelled items), ``mu`` the mean of those values;
    worker precisions follow from one expectation pass.
    """
    hp = _resolved(hp, view)
    totals = view.labels_per_item
    z = np.where(
        totals > 0,
        view.positives_per_item / np.maximum(totals, 1),
        0.5,
    )
    mu = _sum_by_value(z) / view.num_items
    sse, eqv = _expectation(z, view, hp)
    nll = _objective(z, mu, sse, view, hp)
    return BwaState(z=z, mu=mu, eqv=eqv, sse=sse, nll=nll, iteration=0)


def e_step(state: BwaState, view: BinaryView, hp: BwaHyperParams) -> BwaState:
    """Refresh worker error sums and expected precisions at the current z.

    Workers with no labels fall back to the prior mean ``a_v / b_v``.
    """
    hp = _resolved(hp, view)
    sse, eqv = _expectation(state.z, view, hp)
    return replace(state, sse=sse, eqv=eqv)


def m_step(state: BwaState, view: BinaryView, hp: BwaHyperParams) -> BwaState:
    """Re-solve the truth estimates, then the prior mean.

    ``z_i`` is the weighted average of the previous ``mu`` (weight
    ``lam``) and the item's labels (weights ``E[v_j]``); items with no
    labels therefore sit at ``mu``. The new ``mu`` is the mean of the
    new ``z``. Updating sequentially keeps the objective non-increasing.
    """
    hp = _resolved(hp, view)
    w = state.eqv[view.workers]
    # Ascending-weight order within each item; the zero summands that
    # indicator masking introduces into the numerator are exact no-ops,
    # so one ordering serves both reductions.
    subkey = _ranks(state.eqv)[view.workers]
    den, num = _group_sums(
        view.items, subkey, view.num_workers, view.num_items, w, w * view.y
    )
    z = (hp.lam * state.mu + num) / (hp.lam + den)
    # z is a convex combination of mu and {0,1} labels; clip the odd
    # one-ulp division overshoot so the [0,1] range invariant is exact.
    np.clip(z, 0.0, 1.0, out=z)
    mu = _sum_by_value(z) / view.num_items
    return replace(state, z=z, mu=mu)


def neg_log_likelihood(state: BwaState, view: BinaryView, hp: BwaHyperParams) -> float:
    """Objective value at the state's (z, mu), recomputing error sums."""
    hp = _resolved(hp, view)
    sse, _ = _expectation(state.z, view, hp)
    return _objective(state.z, state.mu, sse, view, hp)


def run_em_binary(view: BinaryView, hp: BwaHyperParams) -> BinaryResult:
    """Alternate the two steps from the majority-vote start to convergence.

    Stops when every ``z_i`` moves by at most ``hp.tolerance`` relative
    to its previous value, or after ``hp.max_iters`` iterations (the
    result is then flagged unconverged, never an error). Hard labels
    threshold the scores at 0.5; an exact tie resolves to 0. The
    objective value after every iteration is recorded in ``nll_trace``
    and is non-increasing. Fully deterministic.
    """
    if view.num_labels == 0:
        raise ValueError("cannot run aggregation on a view with no labels")
    hp = _resolved(hp, view)
    state = init_state(view, hp)
    trace = [state.nll]
    converged = False
    iterations = 0
    for iterations in range(1, hp.max_iters + 1):
        z_prev = state.z
        state = m_step(state, view, hp)
        state = e_step(state, view, hp)
        state.nll = _objective(state.z, state.mu, state.sse, view, hp)
        state.iteration = iterations
        trace.append(state.nll)
        rel = np.abs(state.z - z_prev) / np.maximum(np.abs(z_prev), REL_DIFF_FLOOR)
        if float(rel.max()) <= hp.tolerance:
            converged = True
            break
    return BinaryResult(
        scores=state.z,
        hard_labels=(state.z > 0.5).astype(np.int64),
        mu=state.mu,
        worker_weights=state.eqv,
        nll_trace=np.array(trace),
        converged=converged,
        iterations=iterations,
    )


def aggregate_multiclass(matrix: LabelMatrix, hp: BwaHyperParams) -> MultiClassResult:
    """Score every class one-versus-rest and pick the per-item argmax.

    The error rate is estimated once from the full matrix and the
    resulting ``b_v`` is shared by all class runs. Ties in the argmax
    resolve to the smallest class index. The class runs are independent
    and deterministic, so executing them concurrently would be safe.
    """
    if matrix.num_classes < 2:
        raise ValueError("multi-class aggregation needs at least 2 classes")
    hp = resolve(hp, matrix)
    per_class = tuple(
        run_em_binary(binary_view(matrix, k), hp) for k in range(matrix.num_classes)
    )
    scores = np.stack([r.scores for r in per_class])
    weights = np.mean([r.worker_weights for r in per_class], axis=0)
    return MultiClassResult(
        score_matrix=scores,
        hard_labels=np.argmax(scores, axis=0).astype(np.int64),
        per_class=per_class,
        worker_weights=weights,
        epsilon=hp.b_v / hp.a_v,
        b_v=hp.b_v,
    )


def worker_accuracy(v) -> np.ndarray | float:
    """Accuracy implied by a precision: ``sqrt(e^v) / (1 + sqrt(e^v))``.

    Maps precision 0 to 0.5 (a coin-flipping worker) and grows towards 1
    for highly precise workers. Diagnostic only; computed in the stable
    form ``1 / (1 + e^(-v/2))``.
    """
    arr = np.asarray(v, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("precision must be non-negative")
    acc = 1.0 / (1.0 + np.exp(-arr / 2.0))
    return float(acc) if np.isscalar(v) or arr.ndim == 0 else acc
