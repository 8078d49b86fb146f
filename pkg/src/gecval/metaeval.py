"""Meta-evaluation statistics for comparing metrics against human judgments.

Covers TrueSkill aggregation of pairwise outcomes into system rankings,
system-level correlation (Pearson/Spearman over rating means), sentence
level agreement (accuracy and Kendall tau with metric ties counted as
discordant and human ties excluded), Williams significance tests,
bootstrap resampling, sliding-window correlation analysis, and pairwise
rank-group agreement matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, t as student_t

from .corpus import JudgmentSet
from .errors import DataError, MetaevalError

SCORE_TIE_EPS = 1e-9


# ---------------------------------------------------------------------------
# TrueSkill
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrueSkillConfig:
    """Two-player TrueSkill constants; defaults are the standard ones."""

    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float | None = None  # defaults to sigma0 / 2
    tau: float | None = None  # dynamics, defaults to sigma0 / 100
    draw_probability: float = 0.10

    def resolved(self) -> tuple[float, float, float, float, float]:
        beta = self.sigma0 / 2.0 if self.beta is None else self.beta
        tau = self.sigma0 / 100.0 if self.tau is None else self.tau
        draw_margin = norm.ppf((self.draw_probability + 1.0) / 2.0) * math.sqrt(2.0) * beta
        return self.mu0, self.sigma0, beta, tau, draw_margin


DEFAULT_TRUESKILL = TrueSkillConfig()


@dataclass
class Rating:
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class RankedSystem:
    system: str
    mu: float
    sigma: float


def _v_win(diff: float, margin: float) -> float:
    x = diff - margin
    denom = norm.cdf(x)
    return norm.pdf(x) / denom if denom > 0 else -x


def _w_win(diff: float, margin: float) -> float:
    v = _v_win(diff, margin)
    return v * (v + diff - margin)


def _v_draw(diff: float, margin: float) -> float:
    abs_diff = abs(diff)
    a, b = margin - abs_diff, -margin - abs_diff
    denom = norm.cdf(a) - norm.cdf(b)
    numer = norm.pdf(b) - norm.pdf(a)
    value = numer / denom if denom > 0 else a
    return -value if diff < 0 else value

def _w_draw(diff: float, margin: float) -> float:
    abs_diff = abs(diff)
    a, b = margin - abs_diff, -margin - abs_diff
    denom = norm.cdf(a) - norm.cdf(b)
    if denom <= 0:
        raise MetaevalError("degenerate draw update (zero probability mass)")
    v = _v_draw(abs_diff, margin)
    return v * v + (a * norm.pdf(a) - b * norm.pdf(b)) / denom


def _update_pair(r1: Rating, r2: Rating, outcome: str, beta: float, tau: float,
                 margin: float) -> tuple[Rating, Rating]:
    """One sequential update; outcome is from r1's perspective: win or draw."""
    var1 = r1.sigma * r1.sigma + tau * tau
    var2 = r2.sigma * r2.sigma + tau * tau
    c = math.sqrt(var1 + var2 + 2.0 * beta * beta)
    diff = (r1.mu - r2.mu) / c
    eps = margin / c
    if outcome == "win":
        v = _v_win(diff, eps)
        w = _w_win(diff, eps)
        mu1 = r1.mu + var1 / c * v
        mu2 = r2.mu - var2 / c * v
    else:  # draw
        w = _w_draw(diff, eps)
        mu1 = r1.mu + var1 / c * _v_draw(diff, eps)
        mu2 = r2.mu + var2 / c * _v_draw(-diff, eps)
    sigma1 = math.sqrt(var1 * max(1e-12, 1.0 - w * var1 / (c * c)))
    sigma2 = math.sqrt(var2 * max(1e-12, 1.0 - w * var2 / (c * c)))
    return Rating(mu1, sigma1), Rating(mu2, sigma2)


def trueskill_rank(systems, outcomes, config: TrueSkillConfig = DEFAULT_TRUESKILL,
                   passes: int = 1) -> list[RankedSystem]:
    """Sequential two-player TrueSkill over (A, B, verdict) outcomes.

    Verdicts are "a", "b", or "tie". Outcomes are processed in input order
    for ``passes`` rounds; the result is sorted by mu descending (system
    name breaks exact ties deterministically).
    """
    systems = list(systems)
    outcomes = list(outcomes)
    if not outcomes:
        raise MetaevalError("at least one outcome is required")
    mu0, sigma0, beta, tau, margin = config.resolved()
    ratings = {s: Rating(mu0, sigma0) for s in systems}
    for a, b, verdict in outcomes:
        if a not in ratings or b not in ratings:
            raise DataError(f"outcome references unknown system: ({a!r}, {b!r})")
        if verdict not in ("a", "b", "tie"):
            raise DataError(f"bad verdict {verdict!r}")
    for _ in range(max(1, passes)):
        for a, b, verdict in outcomes:
            if verdict == "a":
                ratings[a], ratings[b] = _update_pair(ratings[a], ratings[b], "win",
                                                      beta, tau, margin)
            elif verdict == "b":
                ratings[b], ratings[a] = _update_pair(ratings[b], ratings[a], "win",
                                                      beta, tau, margin)
            else:
                ratings[a], ratings[b] = _update_pair(ratings[a], ratings[b], "draw",
                                                      beta, tau, margin)
    ranked = [RankedSystem(s, ratings[s].mu, ratings[s].sigma) for s in systems]
    ranked.sort(key=lambda r: (-r.mu, r.system))
    return ranked


def _shuffled(outcomes, seed):
    order = np.random.default_rng(seed).permutation(len(outcomes))
    return [outcomes[i] for i in order]


def scores_as_dict(scores) -> dict:
    """Accept ScoreRecord lists or {(source_id, system): score} dicts."""
    if isinstance(scores, dict):
        return scores
    return {(r.source_id, r.system): r.score for r in scores}


def metric_ranking_trueskill(scores, judgments: JudgmentSet,
                             config: TrueSkillConfig = DEFAULT_TRUESKILL,
                             seed: int = 0, passes: int = 1,
                             tie_eps: float = SCORE_TIE_EPS) -> list[RankedSystem]:
    """Rank systems by a metric: every per-source system pair becomes an
    outcome (higher score wins, near-equal scores draw), the outcome list
    is deterministically shuffled, then rated sequentially."""
    table = scores_as_dict(scores)
    outcomes = []
    for source in judgments.sources:
        for i, sys_a in enumerate(judgments.systems):
            for sys_b in judgments.systems[i + 1 :]:
                try:
                    sa = table[(source.id, sys_a)]
                    sb = table[(source.id, sys_b)]
                except KeyError as exc:
                    raise DataError(
                        f"missing score for source {source.id!r} and system {exc.args[0][1]!r}"
                    ) from None
                if abs(sa - sb) < tie_eps:
                    verdict = "tie"
                elif sa > sb:
                    verdict = "a"
                else:
                    verdict = "b"
                outcomes.append((sys_a, sys_b, verdict))
    return trueskill_rank(judgments.systems, _shuffled(outcomes, seed), config, passes)


def human_ranking_trueskill(judgments: JudgmentSet,
                            config: TrueSkillConfig = DEFAULT_TRUESKILL,
                            seed: int = 0, passes: int = 1) -> list[RankedSystem]:
    """Rank systems from the human pairwise records."""
    outcomes = [(r.a, r.b, r.verdict) for r in judgments.human_pairwise]
    return trueskill_rank(judgments.systems, _shuffled(outcomes, seed), config, passes)


# ---------------------------------------------------------------------------
# Correlation statistics
# ---------------------------------------------------------------------------

def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise MetaevalError("pearson needs two equal-length vectors of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise MetaevalError("correlation undefined for a constant vector")
    return float(dx @ dy) / (sx * sy)


def rank_average(values) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their mean rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    return pearson(rank_average(x), rank_average(y))


def kendall_tau(x, y) -> float:
    """Kendall tau-b over two score vectors (pairwise O(n^2) counting)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise MetaevalError("kendall needs two equal-length vectors of size >= 2")
    concordant = discordant = ties_x = ties_y = 0
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            a = x[i] - x[j]
            b = y[i] - y[j]
            if a == 0 and b == 0:
                continue
            if a == 0:
                ties_x += 1
            elif b == 0:
                ties_y += 1
            elif (a > 0) == (b > 0):
                concordant += 1
            else:
                discordant += 1
    denom = math.sqrt(
        (concordant + discordant + ties_x) * (concordant + discordant + ties_y)
    )
    if denom == 0:
        raise MetaevalError("kendall tau undefined for a constant vector")
    return (concordant - discordant) / denom


@dataclass(frozen=True)
class CorrelationReport:
    """System- and sentence-level agreement of one metric with humans."""

    pearson_r: float
    spearman_rho: float
    accuracy: float
    kendall_tau: float
    n: int  # judged sentence pairs
    n_systems: int = 0


# ---------------------------------------------------------------------------
# Sentence-level agreement
# ---------------------------------------------------------------------------

def sentence_agreement(scores, human_pairwise, tie_eps: float = SCORE_TIE_EPS
                       ) -> tuple[float, float]:
    """(accuracy, kendall tau) of a metric against human pairwise verdicts.

    Human ties are excluded. A metric tie (|delta| < tie_eps) counts as
    discordant, which makes tau = 2 * accuracy - 1 hold exactly.
    """
    table = scores_as_dict(scores)
    concordant = total = 0
    for rec in human_pairwise:
        if rec.verdict == "tie":
            continue
        try:
            sa = table[(rec.source_id, rec.a)]
            sb = table[(rec.source_id, rec.b)]
        except KeyError as exc:
            raise DataError(f"missing metric score for {exc.args[0]!r}") from None
        total += 1
        delta = sa - sb
        if delta > tie_eps and rec.verdict == "a":
            concordant += 1
        elif delta < -tie_eps and rec.verdict == "b":
            concordant += 1
    if total == 0:
        raise MetaevalError("no non-tie human judgments to compare against")
    accuracy = concordant / total
    # (concordant - discordant) / total simplifies to this exactly.
    tau = 2.0 * accuracy - 1.0
    return accuracy, tau


# ---------------------------------------------------------------------------
# Significance tests
# ---------------------------------------------------------------------------

def williams_test(r12: float, r13: float, r23: float, n: int) -> tuple[float, float]:
    """Williams t for the difference of two correlations sharing variable 1.

    Returns (t, one-tailed p) with n - 3 degrees of freedom; p is small
    when r12 significantly exceeds r13.
    """
    if n < 4:
        raise MetaevalError("williams test requires n >= 4")
    for r in (r12, r13, r23):
        if not -1.0 < r < 1.0:
            raise MetaevalError(f"correlation {r} outside the open interval (-1, 1)")
    k = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23
    denom = 2.0 * k * (n - 1) / (n - 3) + ((r12 + r13) ** 2 / 4.0) * (1.0 - r23) ** 3
    if denom <= 0:
        raise MetaevalError("degenerate correlation triple for the williams test")
    t_stat = (r12 - r13) * math.sqrt((n - 1) * (1.0 + r23)) / math.sqrt(denom)
    p_value = float(student_t.sf(t_stat, n - 3))
    return t_stat, p_value


def bootstrap_compare(scores_a, scores_b, human_pairwise, iterations: int = 1000,
                      seed: int = 0, tie_eps: float = SCORE_TIE_EPS) -> float:
    """Paired bootstrap over judged pairs.

    Returns the fraction of resamples in which metric B's accuracy is at
    least metric A's (small values mean A reliably beats B).
    """
    if iterations < 1:
        raise ValueError("iterations must be positive")
    table_a = scores_as_dict(scores_a)
    table_b = scores_as_dict(scores_b)
    hits_a = []
    hits_b = []
    for rec in human_pairwise:
        if rec.verdict == "tie":
            continue
        for table, hits in ((table_a, hits_a), (table_b, hits_b)):
            try:
                sa = table[(rec.source_id, rec.a)]
                sb = table[(rec.source_id, rec.b)]
            except KeyError as exc:
                raise DataError(f"missing metric score for {exc.args[0]!r}") from None
            delta = sa - sb
            good = (delta > tie_eps and rec.verdict == "a") or (
                delta < -tie_eps and rec.verdict == "b"
            )
            hits.append(1.0 if good else 0.0)
    n = len(hits_a)
    if n == 0:
        raise MetaevalError("no non-tie human judgments to compare against")
    hits_a = np.asarray(hits_a)
    hits_b = np.asarray(hits_b)
    rng = np.random.default_rng(seed)
    wins = 0
    for _ in range(iterations):
        idx = rng.integers(0, n, size=n)
        if hits_b[idx].mean() >= hits_a[idx].mean():
            wins += 1
    return wins / iterations


# ---------------------------------------------------------------------------
# Window analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowStat:
    start_rank: int  # 1-based rank in the human ranking
    pearson: float
    spearman: float


def window_analysis(metric_ranking, human_ranking, w: int) -> list[WindowStat]:
    """Correlations over sliding windows of the human system ranking.

    Window x covers the systems human-ranked x .. x+w-1; both correlation
    inputs are TrueSkill means restricted to that window.
    """
    if w < 2:
        raise MetaevalError("window size must be at least 2")
    human_order = [r.system for r in human_ranking]
    n = len(human_order)
    if w > n:
        raise MetaevalError(f"window size {w} exceeds the {n} ranked systems")
    human_mu = {r.system: r.mu for r in human_ranking}
    metric_mu = {r.system: r.mu for r in metric_ranking}
    missing = [s for s in human_order if s not in metric_mu]
    if missing:
        raise DataError(f"metric ranking misses systems {missing}")
    rows = []
    for x in range(n - w + 1):
        subset = human_order[x : x + w]
        mx = [metric_mu[s] for s in subset]
        hx = [human_mu[s] for s in subset]
        rows.append(WindowStat(x + 1, pearson(mx, hx), spearman(mx, hx)))
    return rows


# ---------------------------------------------------------------------------
# Pairwise rank-group analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairwiseCell:
    n: int
    concordant: int
    agreement: float
    tau: float


@dataclass
class PairwiseRankGroups:
    """Agreement statistics grouped by metric rank positions (A < B)."""

    n_systems: int
    cells: dict = field(default_factory=dict)  # (rank_a, rank_b) -> PairwiseCell
    tie_breaks: int = 0  # score ties broken by system-name order


def pairwise_rank_groups(scores, judgments: JudgmentSet, n_systems: int | None = None,
                         tie_eps: float = SCORE_TIE_EPS) -> PairwiseRankGroups:
    """Group judged hypothesis pairs by their metric ranks per source.

    For each source the hypotheses are ranked by metric score (ties broken
    by system name and counted); each judged pair then lands in the cell
    of its (better rank, worse rank). Cell agreement follows the
    sentence_agreement conventions.
    """
    table = scores_as_dict(scores)
    systems = list(judgments.systems)
    n_sys = len(systems) if n_systems is None else n_systems
    judged_sources = sorted({r.source_id for r in judgments.human_pairwise})
    rank_of: dict[tuple[str, str], int] = {}
    tie_breaks = 0
    for sid in judged_sources:
        missing = [s for s in systems if (sid, s) not in table]
        if missing:
            raise DataError(f"incomplete scores for source {sid!r}: missing {missing}")
        ordered = sorted(systems, key=lambda s: (-table[(sid, s)], s))
        for pos in range(1, len(ordered)):
            if abs(table[(sid, ordered[pos])] - table[(sid, ordered[pos - 1])]) < tie_eps:
                tie_breaks += 1
        for pos, system in enumerate(ordered, start=1):
            rank_of[(sid, system)] = pos
    counts: dict[tuple[int, int], list[int]] = {}
    for rec in judgments.human_pairwise:
        if rec.verdict == "tie":
            continue
        ra = rank_of[(rec.source_id, rec.a)]
        rb = rank_of[(rec.source_id, rec.b)]
        better, worse = (rec.a, rec.b) if ra < rb else (rec.b, rec.a)
        cell = (min(ra, rb), max(ra, rb))
        delta = table[(rec.source_id, rec.a)] - table[(rec.source_id, rec.b)]
        metric_tie = abs(delta) < tie_eps
        human_prefers = rec.a if rec.verdict == "a" else rec.b
        concordant = (not metric_tie) and human_prefers == better
        bucket = counts.setdefault(cell, [0, 0])
        bucket[0] += 1
        bucket[1] += 1 if concordant else 0
    cells = {}
    for cell, (n, conc) in sorted(counts.items()):
        agreement = conc / n
        cells[cell] = PairwiseCell(n=n, concordant=conc, agreement=agreement,
                                   tau=2.0 * agreement - 1.0)
    return PairwiseRankGroups(n_systems=n_sys, cells=cells, tie_breaks=tie_breaks)


def pairwise_tau_difference(groups_a: PairwiseRankGroups, groups_b: PairwiseRankGroups
                            ) -> dict:
    """Cell-wise tau difference (a minus b) over cells present in both."""
    common = sorted(set(groups_a.cells) & set(groups_b.cells))
    return {cell: groups_a.cells[cell].tau - groups_b.cells[cell].tau for cell in common}


def pairwise_matrix(groups: PairwiseRankGroups, values: dict | None = None,
                    attribute: str = "tau") -> np.ndarray:
    """(n_systems x n_systems) matrix of a cell attribute; NaN where empty."""
    n = groups.n_systems
    out = np.full((n + 1, n + 1), np.nan)
    source = values if values is not None else {
        cell: getattr(stat, attribute) for cell, stat in groups.cells.items()
    }
    for (a, b), value in source.items():
        out[a, b] = value
    return out[1:, 1:]


# ---------------------------------------------------------------------------
# Full correlation report
# ---------------------------------------------------------------------------

def correlation_report(scores, judgments: JudgmentSet, human_ranking=None,
                       metric_ranking=None, seed: int = 0,
                       config: TrueSkillConfig = DEFAULT_TRUESKILL) -> CorrelationReport:
    """System correlations (TrueSkill means) plus sentence-level agreement."""
    if human_ranking is None:
        human_ranking = human_ranking_trueskill(judgments, config=config, seed=seed)
    if metric_ranking is None:
        metric_ranking = metric_ranking_trueskill(scores, judgments, config=config,
                                                  seed=seed)
    human_mu = {r.system: r.mu for r in human_ranking}
    metric_mu = {r.system: r.mu for r in metric_ranking}
    order = sorted(human_mu)
    hx = [human_mu[s] for s in order]
    mx = [metric_mu[s] for s in order]
    accuracy, tau = sentence_agreement(scores, judgments.human_pairwise)
    n_pairs = sum(1 for r in judgments.human_pairwise if r.verdict != "tie")
    return CorrelationReport(
        pearson_r=pearson(mx, hx),
        spearman_rho=spearman(mx, hx),
        accuracy=accuracy,
        kendall_tau=tau,
        n=n_pairs,
        n_systems=len(order),
    )
