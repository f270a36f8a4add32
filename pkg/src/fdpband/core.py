"""Data model for competition experiments.

A competition pairs each hypothesis's observed (target) score with a matched
null (decoy) score.  The winning score and win label feed every downstream
procedure, which only ever looks at hypotheses sorted by decreasing winning
score together with the prefix counts of decoy and target wins.
"""

from dataclasses import dataclass, field

import numpy as np

from ._util import DomainError, as_rng

TIE_RANDOM_BREAK = "random_break"
TIE_DROP = "drop"


@dataclass(frozen=True)
class ScorePair:
    """One hypothesis's competing scores.

    The target score may be -inf (sentinel for a hypothesis that can only
    lose its competition); the decoy score must be finite.
    """

    target_score: float
    decoy_score: float


@dataclass(frozen=True)
class LabeledHypothesis:
    """Winning score plus win label: +1 target win, -1 decoy win."""

    score: float
    label: int


@dataclass(frozen=True)
class SimulationTruth:
    """Per-hypothesis ground truth: True where the hypothesis is a true null."""

    is_true_null: np.ndarray

    def __len__(self):
        return len(self.is_true_null)


@dataclass(frozen=True)
class CompetitionSequence:
    """Hypotheses sorted by non-increasing winning score, with prefix counts.

    decoy_counts[i-1] and target_counts[i-1] hold the number of decoy and
    target wins among the top i scores, so decoy_counts[i-1] +
    target_counts[i-1] == i.  orig_index maps each position back to the
    caller's identifier for the hypothesis (pre-sort position by default).
    """

    scores: np.ndarray
    labels: np.ndarray
    decoy_counts: np.ndarray
    target_counts: np.ndarray
    orig_index: np.ndarray

    @property
    def m(self):
        return len(self.labels)

    @property
    def hypotheses(self):
        """The sorted hypotheses as LabeledHypothesis objects."""
        return [LabeledHypothesis(float(s), int(l)) for s, l in zip(self.scores, self.labels)]

    def align_truth(self, truth):
        """Reorder ground truth from original indexing to sequence order."""
        if len(truth) != self.m:
            raise DomainError(f"truth has length {len(truth)}, sequence has m={self.m}")
        return SimulationTruth(np.asarray(truth.is_true_null, dtype=bool)[self.orig_index])


@dataclass(frozen=True)
class DiscoveryReport:
    """Outcome of one procedure run.

    k is the rejection index into the sorted sequence (0 means nothing is
    reported); reported_indices are the 1-based positions of the target wins
    among the top k; original_ids are the same discoveries named by the
    caller's identifiers when provenance is available.
    """

    k: int
    num_targets: int
    num_decoys: int
    reported_indices: np.ndarray
    procedure_id: str
    alpha: float
    gamma: float | None = None
    bound: float | None = None
    original_ids: np.ndarray | None = field(default=None, repr=False)


def _empty_report(procedure_id, alpha, gamma=None, bound=None):
    idx = np.empty(0, dtype=np.int64)
    return DiscoveryReport(0, 0, 0, idx, procedure_id, alpha, gamma, bound, idx)


def _report_at(seq, k, procedure_id, alpha, gamma=None, bound=None):
    """Build the report for rejecting all target wins in the top k scores."""
    if k == 0:
        return _empty_report(procedure_id, alpha, gamma, bound)
    positions = np.nonzero(seq.labels[:k] == 1)[0].astype(np.int64) + 1
    return DiscoveryReport(
        k=int(k),
        num_targets=int(seq.target_counts[k - 1]),
        num_decoys=int(seq.decoy_counts[k - 1]),
        reported_indices=positions,
        procedure_id=procedure_id,
        alpha=alpha,
        gamma=gamma,
        bound=bound,
        original_ids=seq.orig_index[positions - 1],
    )


def _compete_arrays(target, decoy, tie_policy, rng):
    """Array version of compete; returns (scores, labels, index_map)."""
    target = np.asarray(target, dtype=np.float64)
    decoy = np.asarray(decoy, dtype=np.float64)
    if target.size == 0:
        raise DomainError("compete requires at least one score pair")
    if not np.all(np.isfinite(decoy)):
        raise DomainError("decoy scores must be finite")
    bad = ~np.isfinite(target) & ~np.isneginf(target)
    if np.any(bad):
        raise DomainError("target scores must be finite or -inf")

    scores = np.maximum(target, decoy)
    labels = np.where(target > decoy, 1, -1).astype(np.int8)
    ties = target == decoy
    if not np.any(ties):
        return scores, labels, np.arange(target.size, dtype=np.int64)
    if tie_policy == TIE_RANDOM_BREAK:
        rng = as_rng(rng)
        coin = rng.integers(0, 2, size=int(ties.sum())) * 2 - 1
        labels[ties] = coin
        return scores, labels, np.arange(target.size, dtype=np.int64)
    if tie_policy == TIE_DROP:
        keep = ~ties
        if not np.any(keep):
            raise DomainError("all pairs were exact ties and were dropped")
        idx = np.nonzero(keep)[0].astype(np.int64)
        return scores[keep], labels[keep], idx
    raise DomainError(f"unknown tie policy {tie_policy!r}")


def compete(pairs, tie_policy=TIE_RANDOM_BREAK, rng=None):
    """Run each target/decoy competition.

    Each pair yields winning score max(target, decoy) and label +1 / -1 for a
    strict target / decoy win.  Exact ties are resolved by a fair coin
    (``random_break``, the default) or removed (``drop``).

    Returns (labeled, index_map): the surviving hypotheses and, for each, the
    index of the pair it came from.
    """
    if isinstance(pairs, np.ndarray):
        target, decoy = pairs[:, 0], pairs[:, 1]
    else:
        pairs = list(pairs)
        if pairs and isinstance(pairs[0], ScorePair):
            target = np.array([p.target_score for p in pairs])
            decoy = np.array([p.decoy_score for p in pairs])
        else:
            arr = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
            target, decoy = arr[:, 0], arr[:, 1]
    scores, labels, idx = _compete_arrays(target, decoy, tie_policy, rng)
    labeled = [LabeledHypothesis(float(s), int(l)) for s, l in zip(scores, labels)]
    return labeled, idx.tolist()


def _build_sequence_arrays(scores, labels, rng, orig_index=None):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if not np.all(np.isin(labels, (-1, 1))):
        raise DomainError("labels must be +1 or -1")
    labels = labels.astype(np.int8)
    m = scores.size
    if m == 0:
        raise DomainError("cannot build a sequence from zero hypotheses")
    if orig_index is None:
        orig_index = np.arange(m, dtype=np.int64)
    else:
        orig_index = np.asarray(orig_index, dtype=np.int64)

    # Tie groups are permuted uniformly at random, independently of labels:
    # a uniform tiebreak key per element makes the within-group order uniform.
    u = as_rng(rng).random(m)
    order = np.lexsort((u, -scores))
    scores = scores[order]
    labels = labels[order]
    decoy = np.cumsum(labels == -1, dtype=np.int64)
    target = np.cumsum(labels == 1, dtype=np.int64)
    return CompetitionSequence(scores, labels, decoy, target, orig_index[order])


def build_sequence(labeled, rng=None, orig_index=None):
    """Sort labeled hypotheses by non-increasing score and count prefixes.

    Equal-score groups are internally shuffled uniformly at random so the
    ordering carries no information about the labels.  orig_index, when
    given, supplies the provenance identifier for each input hypothesis.
    """
    if isinstance(labeled, CompetitionSequence):
        return labeled
    scores = np.array([h.score for h in labeled], dtype=np.float64)
    labels = np.array([h.label for h in labeled])
    return _build_sequence_arrays(scores, labels, rng, orig_index)


def true_fdp(report, truth):
    """Fraction of true nulls among the reported target discoveries.

    truth must be indexed like the sequence the report was computed on (use
    CompetitionSequence.align_truth for generator output).  Returns 0.0 for
    an empty report.
    """
    if report.k == 0:
        return 0.0
    is_null = np.asarray(truth.is_true_null, dtype=bool)
    if report.k > len(is_null):
        raise DomainError(f"report k={report.k} exceeds truth length {len(is_null)}")
    idx = np.asarray(report.reported_indices, dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > len(is_null)):
        raise DomainError("reported index out of range of the truth array")
    false_hits = int(is_null[idx - 1].sum())
    return false_hits / max(report.num_targets, 1)
