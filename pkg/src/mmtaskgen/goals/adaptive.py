"""Adaptive goal search: draw candidates in proportion to a feasibility
score, and after each failed check halve the scores of the failed
candidate's neighbors so whole infeasible regions fade quickly."""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_rng
from ..errors import DomainError, ExhaustedError
from .kdtree import LAMBDA, NEIGHBOR_RADIUS, PoseIndex


@dataclass
class CandidateSet:
    candidates: list
    scores: np.ndarray
    neighbor_index: PoseIndex
    removed: set = field(default_factory=set)
    neighbor_radius: float = NEIGHBOR_RADIUS
    checks: int = 0

    def alive_mask(self):
        return self.neighbor_index.alive.copy()

    def probabilities(self):
        """Sampling distribution over all ids (zero for removed ones)."""
        s = np.where(self.neighbor_index.alive, self.scores, 0.0)
        total = s.sum()
        if total <= 0:
            raise ExhaustedError("every candidate has been removed", self.checks)
        return s / total


def init_session(cands, neighbor_radius=NEIGHBOR_RADIUS, lam=LAMBDA):
    """Index the candidates and set ``scores = exp(-E) / max exp(-E)``."""
    cands = list(cands)
    if not cands:
        raise DomainError("candidate set is empty")
    if not neighbor_radius >= 0:
        raise DomainError("neighbor_radius must be non-negative")
    e = np.array([c.energy for c in cands], dtype=float)
    # shift by the minimum energy so the exponent never overflows
    scores = np.exp(-(e - e.min()))
    scores /= scores.max()
    index = PoseIndex([c.pose for c in cands], lam)
    return CandidateSet(cands, scores, index, set(), float(neighbor_radius))


def draw_candidate(cs, rng):
    """Id drawn with probability ``score / sum of live scores``."""
    p = cs.probabilities()
    u = rng.random()
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    i = min(i, len(p) - 1)
    # never land on a zero-probability (removed) id through rounding
    while p[i] == 0.0:
        i -= 1
    return i


def report_failure(cs, i):
    """Halve the scores of live neighbors of ``i`` and remove ``i``."""
    if not isinstance(i, (int, np.integer)) or not 0 <= i < len(cs.candidates):
        raise DomainError(f"unknown candidate id {i!r}")
    if i in cs.removed:
        raise DomainError(f"candidate {i} was already removed")
    pose = cs.candidates[i].pose
    cs.neighbor_index.remove(int(i))
    cs.removed.add(int(i))
    nb = cs.neighbor_index.query_radius(pose, cs.neighbor_radius)
    cs.scores[nb] *= 0.5
    return cs


def adaptive_goal_search(cs, check, budget, seed=0):
    """First candidate passing ``check``; each candidate is checked at most once."""
    if int(budget) < 1:
        raise DomainError("budget must be at least 1")
    rng = check_rng(seed)
    while cs.checks < budget:
        if len(cs.neighbor_index) == 0:
            raise ExhaustedError("candidate set exhausted", cs.checks)
        i = draw_candidate(cs, rng)
        cs.checks += 1
        if check(cs.candidates[i]):
            return cs.candidates[i]
        report_failure(cs, i)
    raise ExhaustedError("check budget exhausted", cs.checks)


def uniform_goal_search(cands, check, budget, seed=0):
    """Baseline: uniform draws without replacement. Returns ``(candidate, checks)``."""
    rng = check_rng(seed)
    order = rng.permutation(len(cands))
    for n, i in enumerate(order[:budget], start=1):
        if check(cands[i]):
            return cands[i], n
    raise ExhaustedError("uniform search found no feasible candidate", min(budget, len(cands)))


class AdaptiveGoalSampler(BaseEstimator):
    """``fit(candidates)`` opens a session; ``search(check)`` runs the adaptive loop."""

    def __init__(self, neighbor_radius=NEIGHBOR_RADIUS, lam=LAMBDA, budget=50, random_state=0):
        self.neighbor_radius = neighbor_radius
        self.lam = lam
        self.budget = budget
        self.random_state = random_state

    def fit(self, candidates, y=None):
        self.session_ = init_session(candidates, self.neighbor_radius, self.lam)
        return self

    def search(self, check):
        check_is_fitted(self, "session_")
        return adaptive_goal_search(self.session_, check, self.budget, self.random_state)

    def predict(self, check):
        return self.search(check)

    @property
    def n_checks_(self):
        check_is_fitted(self, "session_")
        return self.session_.checks
