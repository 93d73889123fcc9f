"""Batch screenshot stitching for vertical scroll sequences.

Common status/navigation bars are detected with per-strip perceptual hashes and
stripped, the remaining content is matched with ORB features (FAST corners,
steered BRIEF) under a k-NN Hamming search and Lowe's ratio test, and the
vertical overlap is the median of the matched y displacements.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import StitchError
from .imgproc import phash, to_grayscale
from .models import Descriptor, Frame, GrayImage, Keypoint, MatchPair, StitchedImage, StitchParams

logger = logging.getLogger(__name__)

MIN_FEATURE_SIDE = 32


@dataclass
class AcceptedMatch:
    """A ratio-test survivor with coordinates in both images."""

    x: float
    y: float
    x2: float
    y2: float
    distance: int


def _pixels(image: Frame | np.ndarray) -> np.ndarray:
    return image.pixels if isinstance(image, Frame) else np.asarray(image)


def detect_common_bars(
    a: Frame | np.ndarray, b: Frame | np.ndarray, p: StitchParams | None = None
) -> tuple[int, int]:
    """Heights of the bars shared by two screenshots.

    Both images are cut into strips of ``p.strip_height`` rows from the top
    (and, separately, from the bottom); consecutive strips whose pHash distance
    is at most ``p.bar_hamming_max`` and whose mean intensities agree count as
    bar. Each height is capped at ``p.max_bar_frac`` of the shorter image.

    Raises:
        ValueError: If the widths differ
    """
    p = p or StitchParams()
    pa, pb = _pixels(a), _pixels(b)
    if pa.shape[1] != pb.shape[1]:
        raise ValueError(f"Width mismatch: {pa.shape[1]} vs {pb.shape[1]}")

    ga, gb = to_grayscale(pa).data, to_grayscale(pb).data
    height = min(ga.shape[0], gb.shape[0])
    cap = int(p.max_bar_frac * height)
    s = p.strip_height

    def strips_match(rows_a: np.ndarray, rows_b: np.ndarray) -> bool:
        if abs(rows_a.mean() - rows_b.mean()) > p.bar_mean_delta_max:
            return False
        return phash(GrayImage(rows_a)) - phash(GrayImage(rows_b)) <= p.bar_hamming_max

    h_top = 0
    while h_top + s <= cap and strips_match(ga[h_top : h_top + s], gb[h_top : h_top + s]):
        h_top += s

    h_bot = 0
    ha, hb = ga.shape[0], gb.shape[0]
    while h_bot + s <= cap and strips_match(
        ga[ha - h_bot - s : ha - h_bot], gb[hb - h_bot - s : hb - h_bot]
    ):
        h_bot += s

    # A partial last strip up to the cap still counts when it matches.
    if h_top < cap and cap - h_top < s and strips_match(ga[h_top:cap], gb[h_top:cap]):
        h_top = cap
    if h_bot < cap and cap - h_bot < s and strips_match(
        ga[ha - cap : ha - h_bot], gb[hb - cap : hb - h_bot]
    ):
        h_bot = cap

    logger.debug(f"Common bars: top={h_top}px bottom={h_bot}px (cap {cap}px)")
    return h_top, h_bot


def _orb(p: StitchParams) -> cv2.ORB:
    # Single pyramid level with FAST scores: plain FAST-9 + intensity-centroid + steered BRIEF.
    return cv2.ORB_create(
        nfeatures=p.max_features,
        scaleFactor=1.2,
        nlevels=1,
        edgeThreshold=31,
        firstLevel=0,
        WTA_K=2,
        scoreType=cv2.ORB_FAST_SCORE,
        patchSize=31,
        fastThreshold=p.fast_threshold,
    )


def orb_features(g: GrayImage, p: StitchParams | None = None) -> list[Descriptor]:
    """ORB keypoints and 256-bit descriptors, strongest first, at most ``p.max_features``.

    Raises:
        ValueError: If the image is smaller than 32×32
    """
    p = p or StitchParams()
    if g.height < MIN_FEATURE_SIDE or g.width < MIN_FEATURE_SIDE:
        raise ValueError(f"Image too small for features: {g.height}×{g.width}")

    image = np.clip(np.rint(g.data), 0, 255).astype(np.uint8)
    keypoints, descriptors = _orb(p).detectAndCompute(image, None)
    if descriptors is None or not keypoints:
        return []

    result = [
        Descriptor(
            bits=row,
            keypoint=Keypoint(
                x=float(kp.pt[0]),
                y=float(kp.pt[1]),
                score=float(kp.response),
                orientation=float(np.deg2rad(kp.angle)),
            ),
        )
        for kp, row in zip(keypoints, descriptors)
    ]
    result.sort(key=lambda d: (-d.keypoint.score, d.keypoint.y, d.keypoint.x))
    return result[: p.max_features]


def _stack(descriptors: Sequence[Descriptor]) -> np.ndarray:
    return np.stack([d.bits for d in descriptors]).astype(np.uint8)


def knn_match(
    query: Sequence[Descriptor], train: Sequence[Descriptor], k: int = 2
) -> list[MatchPair]:
    """Best and second-best Hamming matches in ``train`` for each query descriptor.

    Queries are omitted when ``train`` holds fewer than two descriptors.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if not query or len(train) < 2:
        return []

    matcher = cv2.BFMatcher(cv2.NORM_HAMMING, crossCheck=False)
    neighbours = matcher.knnMatch(_stack(query), _stack(train), k=min(k, len(train)))
    pairs = []
    for candidates in neighbours:
        if len(candidates) < 2:
            continue
        best, second = sorted(candidates, key=lambda m: (m.distance, m.trainIdx))[:2]
        pairs.append(
            MatchPair(
                query_index=best.queryIdx,
                best_train_index=best.trainIdx,
                d1=int(best.distance),
                d2=int(second.distance),
                second_train_index=second.trainIdx,
            )
        )
    return pairs


def lowe_filter(pairs: Sequence[MatchPair], tau: float) -> list[MatchPair]:
    """Keep pairs with d1/d2 < τ; pairs with d2 = 0 are degenerate and dropped."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    return [m for m in pairs if m.d2 > 0 and m.d1 / m.d2 < tau]


def overlap_offset(
    matches: Sequence[AcceptedMatch | tuple[float, float, float, float]],
    p: StitchParams | None = None,
) -> int:
    """Vertical offset of the second image inside the first: median(y - y').

    The upper median (element ⌊N/2⌋ of the sorted offsets) is used for even N.

    Raises:
        StitchError: Too few matches, or horizontal drift beyond ``p.max_x_drift``
    """
    p = p or StitchParams()
    coords = np.array(
        [
            (m.x, m.y, m.x2, m.y2) if isinstance(m, AcceptedMatch) else tuple(m)
            for m in matches
        ],
        dtype=np.float64,
    ).reshape(-1, 4)
    if len(coords) < p.min_matches:
        raise StitchError(f"too few matches: {len(coords)} < {p.min_matches}")

    drift = float(np.median(np.abs(coords[:, 0] - coords[:, 2])))
    if drift > p.max_x_drift:
        raise StitchError(f"horizontal drift {drift:.1f}px exceeds {p.max_x_drift}px")

    offsets = np.sort(coords[:, 1] - coords[:, 3])
    return int(round(offsets[len(offsets) // 2]))


def match_content(acc: np.ndarray, nxt: np.ndarray, p: StitchParams) -> list[AcceptedMatch]:
    """ORB matches between the tail of ``acc`` and all of ``nxt``, in ``acc`` coordinates.

    Only the last ``height(nxt)`` rows of the accumulator can overlap the next
    screenshot, so features are extracted from that tail.
    """
    tail_top = max(0, acc.shape[0] - nxt.shape[0])
    query = orb_features(to_grayscale(acc[tail_top:]), p)
    train = orb_features(to_grayscale(nxt), p)
    accepted = lowe_filter(knn_match(query, train, p.knn_k), p.ratio_threshold)
    logger.debug(
        f"ORB: {len(query)} query / {len(train)} train features, {len(accepted)} accepted"
    )
    return [
        AcceptedMatch(
            x=query[m.query_index].keypoint.x,
            y=query[m.query_index].keypoint.y + tail_top,
            x2=train[m.best_train_index].keypoint.x,
            y2=train[m.best_train_index].keypoint.y,
            distance=m.d1,
        )
        for m in accepted
    ]


def stitch_pair(
    acc: np.ndarray, nxt: np.ndarray, p: StitchParams | None = None
) -> tuple[np.ndarray, int] | None:
    """Stitch two bar-free content images.

    Returns the composite (rows [0, y_pos) of ``acc`` above all of ``nxt``) and
    y_pos, or None when no valid overlap is found.
    """
    p = p or StitchParams()
    if acc.shape[1] != nxt.shape[1]:
        return None
    if min(acc.shape[0], nxt.shape[0]) < MIN_FEATURE_SIDE:
        return None
    try:
        y_pos = overlap_offset(match_content(acc, nxt, p), p)
    except StitchError as e:
        logger.debug(f"No stitch: {e}")
        return None
    if not 0 < y_pos < acc.shape[0]:
        logger.debug(f"No stitch: y_pos {y_pos} outside (0, {acc.shape[0]})")
        return None
    return np.vstack([acc[:y_pos], nxt]), y_pos


@dataclass
class _Accumulator:
    pixels: np.ndarray
    members: list[int]
    seams: list[int]
    h_top: int = 0
    h_bot: int = 0

    def emit(self) -> StitchedImage:
        return StitchedImage(
            pixels=self.pixels,
            member_indices=list(self.members),
            seam_offsets=list(self.seams),
            h_top=self.h_top,
            h_bot=self.h_bot,
        )


def stitch_batch(frames: Sequence[Frame], p: StitchParams | None = None) -> list[StitchedImage]:
    """Greedy left-to-right stitching of ordered keyframes.

    Each incoming frame is stripped of the bars it shares with the accumulator and
    stitched onto it; on success the accumulator's own bars are re-attached, on
    failure the accumulator is emitted and restarted with the incoming frame.

    Raises:
        ValueError: If ``frames`` is empty
    """
    p = p or StitchParams()
    if not frames:
        raise ValueError("stitch_batch requires at least one frame")

    outputs: list[StitchedImage] = []
    acc: _Accumulator | None = None
    i = 0
    while i < len(frames):
        frame = frames[i]
        if acc is None:
            acc = _Accumulator(pixels=frame.pixels, members=[frame.index], seams=[])
            i += 1
            continue

        stitched = None
        if acc.pixels.shape[1] == frame.width:
            h_top, h_bot = detect_common_bars(acc.pixels, frame.pixels, p)
            acc_h = acc.pixels.shape[0]
            content_acc = acc.pixels[h_top : acc_h - h_bot]
            content_next = frame.pixels[h_top : frame.height - h_bot]
            stitched = stitch_pair(content_acc, content_next, p)

        if stitched is not None:
            content, y_pos = stitched
            acc.pixels = np.vstack(
                [acc.pixels[:h_top], content, acc.pixels[acc_h - h_bot :]]
            )
            acc.members.append(frame.index)
            acc.seams.append(y_pos)
            acc.h_top, acc.h_bot = h_top, h_bot
            logger.debug(f"Stitched frame {frame.index} at y_pos={y_pos}")
            i += 1
        else:
            outputs.append(acc.emit())
            acc = None

    if acc is not None:
        outputs.append(acc.emit())

    logger.info(f"Stitched {len(frames)} keyframes into {len(outputs)} images")
    return outputs
