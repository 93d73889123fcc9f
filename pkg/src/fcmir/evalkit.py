"""Evaluation mathematics: ROUGE, embedding similarity, the summarization reward,
rubric aggregation, inter-rater agreement and OLS regression.

Everything here is pure and thread-safe.
"""

import logging
import re
from collections import Counter
from collections.abc import Sequence
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.metrics import cohen_kappa_score

from .models import (
    RUBRIC_METRICS,
    AgreementStats,
    FormatRewardParams,
    RegressionFit,
    RewardBreakdown,
    RewardWeights,
    RougeScores,
    ScoreCard,
)

if TYPE_CHECKING:
    from .embeddings import EmbeddingProvider

logger = logging.getLogger(__name__)

_CJK = "\u4e00-\u9fff\u3400-\u4dbf\uf900-\ufaff\u3040-\u30ff\uac00-\ud7af"
_TOKEN = re.compile(rf"[{_CJK}]|[^\W_{_CJK}]+")
_DIGIT = re.compile(r"\d")


def tokenize(text: str) -> list[str]:
    """CJK characters are single tokens; other runs split on space, punctuation and underscores."""
    return [t.lower() for t in _TOKEN.findall(text)]


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(pred: str, ref: str, n: int) -> RougeScores:
    """Clipped n-gram overlap.

    Raises:
        ValueError: If n < 1 or the reference has fewer than n tokens
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ref_tokens = tokenize(ref)
    if len(ref_tokens) < n:
        raise ValueError(f"reference too short for ROUGE-{n}: {len(ref_tokens)} tokens")
    pred_grams = _ngrams(tokenize(pred), n)
    ref_grams = _ngrams(ref_tokens, n)
    overlap = sum((pred_grams & ref_grams).values())
    return RougeScores.from_counts(overlap, sum(pred_grams.values()), sum(ref_grams.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length (two-row dynamic programme)."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pred: str, ref: str) -> RougeScores:
    """LCS-based precision, recall and F1.

    Raises:
        ValueError: If the reference has no tokens
    """
    ref_tokens = tokenize(ref)
    if not ref_tokens:
        raise ValueError("empty reference")
    pred_tokens = tokenize(pred)
    overlap = lcs_length(pred_tokens, ref_tokens)
    return RougeScores.from_counts(overlap, len(pred_tokens), len(ref_tokens))


def embedding_similarity(pred: str, ref: str, provider: "EmbeddingProvider") -> float:
    """Cosine similarity of the two embeddings, clipped to [-1, 1].

    Raises:
        ValueError: If either embedding has zero norm
        EmbeddingError: Propagated from the provider
    """
    a = np.asarray(provider.embed(pred), dtype=np.float64)
    b = np.asarray(provider.embed(ref), dtype=np.float64)
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise ValueError("zero-norm embedding")
    return float(np.clip(a @ b / (norm_a * norm_b), -1.0, 1.0))


@lru_cache(maxsize=8)
def load_location_keywords(path: str | None = None) -> tuple[str, ...]:
    """Lowercased lexicon entries; ``#`` starts a comment line."""
    if path is None:
        text = resources.files("fcmir").joinpath("data", "location_keywords.txt").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = (line.strip().lower() for line in text.splitlines())
    return tuple(w for w in words if w and not w.startswith("#"))


def length_score(text: str, p: FormatRewardParams | None = None) -> float:
    p = p or FormatRewardParams()
    n = len(text.strip())
    if p.ideal_chars[0] <= n <= p.ideal_chars[1]:
        return p.ideal_score
    if p.near_chars[0] <= n <= p.near_chars[1]:
        return p.near_score
    if n < p.near_chars[0]:
        return p.short_score
    return p.long_score if n <= p.long_max else p.overlong_score


def delimiter_score(text: str, p: FormatRewardParams | None = None) -> float:
    p = p or FormatRewardParams()
    if not text.strip():
        return 0.0
    count = sum(text.count(d) for d in p.delimiters)
    if count <= p.delimiter_full_max:
        return 1.0
    if count <= p.delimiter_half_max:
        return 0.5
    return 0.0


def format_reward(pred: str, p: FormatRewardParams | None = None) -> float:
    """Mean of the length, delimiter, digit and location-keyword components.

    The digit component rewards any number regardless of whether the trajectory
    shows it.
    """
    p = p or FormatRewardParams()
    lowered = pred.lower()
    keywords = load_location_keywords(p.location_keywords_path)
    components = (
        length_score(pred, p),
        delimiter_score(pred, p),
        1.0 if _DIGIT.search(pred) else 0.0,
        1.0 if any(k in lowered for k in keywords) else 0.0,
    )
    return float(np.clip(sum(components) / len(components), -1.0, 1.0))


def combine_reward(
    similarity: float, fmt: float, w: RewardWeights | None = None
) -> RewardBreakdown:
    """w_sim · similarity + w_fmt · format, clipped to [-1, 1]."""
    w = w or RewardWeights()
    total = float(np.clip(w.w_sim * similarity + w.w_fmt * fmt, -1.0, 1.0))
    return RewardBreakdown(similarity=float(similarity), format=float(fmt), total=total)


def rouge_average(pred: str, ref: str) -> float:
    """Mean F1 of ROUGE-1, ROUGE-2 and ROUGE-L; ROUGE-2 is left out for one-token references."""
    scores = [rouge_n(pred, ref, 1).f1, rouge_l(pred, ref).f1]
    if len(tokenize(ref)) >= 2:
        scores.append(rouge_n(pred, ref, 2).f1)
    return float(np.mean(scores))


def total_reward(
    pred: str,
    label: str,
    provider: "EmbeddingProvider",
    w: RewardWeights | None = None,
    fmt_params: FormatRewardParams | None = None,
) -> RewardBreakdown:
    """Summarization reward of a prediction against its label.

    An empty prediction has no embedding and contributes similarity 0 from the
    semantic term.

    Raises:
        ValueError: If the label has no tokens
    """
    w = w or RewardWeights()
    if not tokenize(label):
        raise ValueError("label must be nonempty")
    semantic = embedding_similarity(pred, label, provider) if tokenize(pred) else 0.0
    similarity = w.sim_sbert_weight * semantic + w.sim_rouge_weight * rouge_average(pred, label)
    return combine_reward(similarity, format_reward(pred, fmt_params), w)


def agreement(a: Sequence[int] | np.ndarray, b: Sequence[int] | np.ndarray) -> AgreementStats:
    """Exact-match accuracy and Cohen's kappa between two raters.

    kappa is None when chance agreement is 1 (both raters constant on one label).

    Raises:
        ValueError: Empty input or length mismatch
    """
    if len(a) != len(b):
        raise ValueError(f"Rating length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ValueError("agreement requires at least one rating pair")
    x, y = np.asarray(a), np.asarray(b)
    accuracy = float(np.mean(x == y))

    labels = np.union1d(x, y)
    p_e = float(sum(np.mean(x == k) * np.mean(y == k) for k in labels))
    kappa = None if p_e == 1.0 else float(cohen_kappa_score(x, y, labels=labels))
    return AgreementStats(accuracy=accuracy, kappa=kappa, n=len(x))


def ols_fit(xs: Sequence[float], ys: Sequence[float]) -> RegressionFit:
    """Least-squares line with a two-sided t-test p-value for the slope (n − 2 dof).

    Raises:
        ValueError: n < 3, length mismatch, or all x equal
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"Length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise ValueError(f"ols_fit requires n >= 3, got {x.size}")
    if np.all(x == x[0]):
        raise ValueError("degenerate x: all values are equal")
    result = stats.linregress(x, y)
    return RegressionFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        p_value=float(result.pvalue),
        n=int(x.size),
        r_squared=float(result.rvalue**2),
        stderr=float(result.stderr),
    )


def aggregate_scorecards(cards: Sequence[ScoreCard]) -> pd.DataFrame:
    """Per-metric raw sums and means normalized by 2·N, in rubric order.

    Raises:
        ValueError: Empty input or mixed rubrics
    """
    if not cards:
        raise ValueError("aggregate_scorecards requires at least one card")
    rubrics = {c.rubric for c in cards}
    if len(rubrics) > 1:
        raise ValueError(f"mixed rubrics: {sorted(rubrics)}")
    metrics = RUBRIC_METRICS[cards[0].rubric]
    sums = [sum(c.scores[m] for c in cards) for m in metrics]
    return pd.DataFrame(
        {
            "metric": list(metrics),
            "sum": sums,
            "normalized": [s / (2 * len(cards)) for s in sums],
        }
    )
