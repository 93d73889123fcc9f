"""Data models for fcmir.

This module defines the core data structures shared by the pixel algorithms,
the keyframe/stitch stages, the endpoint client, the evaluation kit and the
pipeline manifest (manifest.json).
"""

from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

COMPARATORS = ("phash_ssim", "l1", "phash_l1")
COMPARE_AGAINST = ("last_sampled", "last_retained")
PROMPT_KINDS = (
    "summarize",
    "suggest_operation",
    "suggest_search",
    "judge_summary",
    "judge_suggestion",
)
SUGGESTION_KINDS = ("operation", "search")

SUMMARY_METRICS = (
    "Action Information Completeness",
    "Action Sequence Accuracy",
    "Object Detail Accuracy",
    "Output Format Standardization",
    "Generated Intent Reasonableness",
)
SUGGESTION_METRICS = (
    "Relevance",
    "Usefulness",
    "Clarity",
    "Executability",
    "Novelty/Surprise",
)
RUBRIC_METRICS = {"summary": SUMMARY_METRICS, "suggestion": SUGGESTION_METRICS}


def _from_known_keys(cls, data: dict[str, Any]):
    """Build a flat dataclass from a dict, ignoring keys it does not declare."""
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in data.items() if k in names})


# --------------------------------------------------------------------------- pixels


@dataclass(eq=False)
class Frame:
    """One decoded screen-recording frame.

    Attributes:
        index: Position in the source sequence (0-based)
        timestamp_s: Presentation time in seconds
        pixels: H×W×3 uint8 RGB array
        source_path: File the frame was decoded from, if any
    """

    index: int
    timestamp_s: float
    pixels: np.ndarray
    source_path: str | None = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"Frame index must be nonnegative, got {self.index}")
        if self.timestamp_s < 0:
            raise ValueError(f"Frame timestamp must be nonnegative, got {self.timestamp_s}")
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"Frame pixels must be H×W×3, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError(f"Frame must be at least 1×1, got {pixels.shape[:2]}")
        self.pixels = pixels.astype(np.uint8, copy=False)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def area(self) -> int:
        return self.height * self.width


@dataclass(eq=False)
class GrayImage:
    """Luminance image with float intensities in [0, 255]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"GrayImage must be a nonempty 2-D array, got shape {data.shape}")
        self.data = np.clip(data, 0.0, 255.0)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True, eq=False)
class PerceptualHash:
    """64-bit DCT perceptual hash.

    Subtracting two hashes yields their Hamming distance.
    """

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool).ravel()
        if bits.size != 64:
            raise ValueError(f"PerceptualHash must have exactly 64 bits, got {bits.size}")
        object.__setattr__(self, "bits", bits)

    def __sub__(self, other: "PerceptualHash") -> int:
        return int(np.count_nonzero(self.bits != other.bits))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PerceptualHash) and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.to_hex())

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()


# --------------------------------------------------------------------------- parameters


@dataclass
class SamplingParams:
    """Parameters of similarity-based frame sampling.

    Attributes:
        interval_s: Sampling interval Δt in seconds
        fps: Source frame rate
        blur_threshold: Laplacian-variance threshold Γ; frames below it are blurry
        phash_threshold: Max pHash Hamming distance (of 64) for a global match
        ssim_threshold: Min per-window SSIM for a local match
        comparator: Similarity comparator (phash_ssim, l1, phash_l1)
        l1_threshold: Max mean absolute intensity difference for the L1 comparators
        histogram_reject: L1 histogram distance above which SSIM is skipped
        compare_against: Reference frame for similarity (last_sampled or last_retained)
    """

    interval_s: float = 0.5
    fps: float = 30.0
    blur_threshold: float = 100.0
    phash_threshold: int = 10
    ssim_threshold: float = 0.85
    comparator: str = "phash_ssim"
    l1_threshold: float = 8.0
    histogram_reject: float = 0.5
    compare_against: str = "last_sampled"

    def __post_init__(self) -> None:
        if self.interval_s <= 0:
            raise ValueError(f"interval_s must be > 0, got {self.interval_s}")
        if self.fps <= 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")
        if self.blur_threshold < 0:
            raise ValueError(f"blur_threshold must be >= 0, got {self.blur_threshold}")
        if self.phash_threshold < 0:
            raise ValueError(f"phash_threshold must be >= 0, got {self.phash_threshold}")
        if not 0.0 <= self.ssim_threshold <= 1.0:
            raise ValueError(f"ssim_threshold must be in [0, 1], got {self.ssim_threshold}")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"Unknown comparator '{self.comparator}', expected {COMPARATORS}")
        if self.compare_against not in COMPARE_AGAINST:
            raise ValueError(
                f"Unknown compare_against '{self.compare_against}', expected {COMPARE_AGAINST}"
            )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SamplingParams":
        return _from_known_keys(cls, data)


@dataclass
class SsimParams:
    """Parameters of the windowed SSIM check.

    Attributes:
        c1: Luminance stability constant C₁
        c2: Contrast/structure stability constant C₂
        window: Minimum window side; the adaptive side is max(window, min(H, W) // 8)
        overlap_frac: Fractional overlap between neighbouring windows
        downsample_width: Width both images are reduced to before windowing
    """

    c1: float = (0.01 * 255) ** 2
    c2: float = (0.03 * 255) ** 2
    window: int = 16
    overlap_frac: float = 0.5
    downsample_width: int = 256

    def __post_init__(self) -> None:
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError(f"c1 and c2 must be > 0, got c1={self.c1}, c2={self.c2}")
        if self.window < 4:
            raise ValueError(f"window must be >= 4, got {self.window}")
        if not 0.0 <= self.overlap_frac < 1.0:
            raise ValueError(f"overlap_frac must be in [0, 1), got {self.overlap_frac}")
        if self.downsample_width < 1:
            raise ValueError(f"downsample_width must be >= 1, got {self.downsample_width}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SsimParams":
        return _from_known_keys(cls, data)


@dataclass
class StitchParams:
    """Parameters of bar detection, ORB matching and overlap estimation.

    Attributes:
        ratio_threshold: Lowe ratio τ
        knn_k: Neighbours per descriptor
        min_matches: Accepted matches required to estimate an offset
        max_features: Max ORB keypoints per image
        fast_threshold: FAST intensity delta
        strip_height: Row-block height for common-bar detection
        bar_hamming_max: Max per-strip pHash distance for a common strip
        max_bar_frac: Cap on each bar height as a fraction of image height
        max_x_drift: Max median horizontal displacement of matches (pixels)
        bar_mean_delta_max: Max mean intensity difference for a common strip
    """

    ratio_threshold: float = 0.5
    knn_k: int = 2
    min_matches: int = 10
    max_features: int = 500
    fast_threshold: int = 20
    strip_height: int = 16
    bar_hamming_max: int = 3
    max_bar_frac: float = 0.25
    max_x_drift: float = 5.0
    bar_mean_delta_max: float = 12.0

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio_threshold < 1.0:
            raise ValueError(f"ratio_threshold must be in (0, 1), got {self.ratio_threshold}")
        if self.knn_k < 2:
            raise ValueError(f"knn_k must be >= 2, got {self.knn_k}")
        if self.min_matches < 4:
            raise ValueError(f"min_matches must be >= 4, got {self.min_matches}")
        if self.strip_height < 1:
            raise ValueError(f"strip_height must be >= 1, got {self.strip_height}")
        if not 0.0 <= self.max_bar_frac < 0.5:
            raise ValueError(f"max_bar_frac must be in [0, 0.5), got {self.max_bar_frac}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StitchParams":
        return _from_known_keys(cls, data)


# --------------------------------------------------------------------------- keyframes


@dataclass
class RetainedFrame:
    """A retained keyframe: source index and (once written) PNG path."""

    index: int
    path: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class KeyframeManifest:
    """Result of keyframe selection over one frame sequence.

    Attributes:
        source_id: Identifier of the source recording
        params: Sampling parameters used
        sampled_indices: Frame indices visited by interval sampling
        retained: Retained keyframes, strictly increasing by index
        blurry_indices: Sampled indices rejected by the blur gate
        frame_compression_pct: Share of sampled frames removed (0-100)
        pixel_compression_pct: Share of sampled pixel area removed (0-100)
    """

    source_id: str
    params: SamplingParams
    sampled_indices: list[int] = field(default_factory=list)
    retained: list[RetainedFrame] = field(default_factory=list)
    blurry_indices: list[int] = field(default_factory=list)
    frame_compression_pct: float = 0.0
    pixel_compression_pct: float = 0.0

    @property
    def retained_indices(self) -> list[int]:
        return [r.index for r in self.retained]

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_id": self.source_id,
            "params": self.params.to_dict(),
            "sampled_indices": list(self.sampled_indices),
            "retained": [r.to_dict() for r in self.retained],
            "blurry_indices": list(self.blurry_indices),
            "frame_compression_pct": self.frame_compression_pct,
            "pixel_compression_pct": self.pixel_compression_pct,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KeyframeManifest":
        return cls(
            source_id=data["source_id"],
            params=SamplingParams.from_dict(data["params"]),
            sampled_indices=list(data["sampled_indices"]),
            retained=[
                RetainedFrame(index=r["index"], path=r.get("path")) for r in data["retained"]
            ],
            blurry_indices=list(data.get("blurry_indices", [])),
            frame_compression_pct=data["frame_compression_pct"],
            pixel_compression_pct=data["pixel_compression_pct"],
        )


# --------------------------------------------------------------------------- stitching


@dataclass
class Keypoint:
    """FAST corner with intensity-centroid orientation (radians)."""

    x: float
    y: float
    score: float
    orientation: float


@dataclass(eq=False)
class Descriptor:
    """256-bit steered-BRIEF descriptor, stored packed as 32 bytes."""

    bits: np.ndarray
    keypoint: Keypoint

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8).ravel()
        if bits.size != 32:
            raise ValueError(f"Descriptor must hold 256 bits (32 bytes), got {bits.size} bytes")
        self.bits = bits


@dataclass
class MatchPair:
    """Best and second-best train matches for one query descriptor."""

    query_index: int
    best_train_index: int
    d1: int
    d2: int
    second_train_index: int = -1

    def __post_init__(self) -> None:
        if self.d1 > self.d2:
            raise ValueError(f"MatchPair requires d1 <= d2, got d1={self.d1}, d2={self.d2}")


@dataclass(eq=False)
class StitchedImage:
    """A composited scroll panorama (or a single passthrough keyframe).

    Attributes:
        pixels: H×W×3 uint8 RGB composite
        member_indices: Source keyframe indices, increasing
        seam_offsets: y_pos of each seam in content coordinates (len = members - 1)
        h_top: Height of the re-attached top bar
        h_bot: Height of the re-attached bottom bar
        path: Relative PNG path once written
    """

    pixels: np.ndarray
    member_indices: list[int]
    seam_offsets: list[int] = field(default_factory=list)
    h_top: int = 0
    h_bot: int = 0
    path: str | None = None

    def __post_init__(self) -> None:
        if not self.member_indices:
            raise ValueError("StitchedImage requires at least one member")
        if any(b <= a for a, b in zip(self.member_indices, self.member_indices[1:])):
            raise ValueError(f"member_indices must be increasing, got {self.member_indices}")
        if len(self.seam_offsets) != len(self.member_indices) - 1:
            raise ValueError(
                f"Expected {len(self.member_indices) - 1} seam offsets, "
                f"got {len(self.seam_offsets)}"
            )

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def area(self) -> int:
        return self.height * self.width

    @property
    def content_height(self) -> int:
        return self.height - self.h_top - self.h_bot

    def to_record(self) -> dict[str, Any]:
        """Manifest record (pixels are referenced by path, never embedded)."""
        return {
            "path": self.path,
            "member_indices": list(self.member_indices),
            "seam_offsets": list(self.seam_offsets),
            "h_top": self.h_top,
            "h_bot": self.h_bot,
            "height": self.height,
            "width": self.width,
        }


# --------------------------------------------------------------------------- endpoint


@dataclass
class PromptTemplate:
    """Prompt text with ``${name}`` placeholders."""

    kind: str
    text: str
    max_images: int = 16

    def __post_init__(self) -> None:
        if self.kind not in PROMPT_KINDS:
            raise ValueError(f"Unknown prompt kind '{self.kind}', expected {PROMPT_KINDS}")
        if self.max_images < 1:
            raise ValueError(f"max_images must be >= 1, got {self.max_images}")


@dataclass
class IntentSummary:
    """Trajectory summary: what the user did and what they were after."""

    operation: str
    intent: str

    def __post_init__(self) -> None:
        if not self.operation.strip():
            raise ValueError("IntentSummary.operation must be nonempty")
        if not self.intent.strip():
            raise ValueError("IntentSummary.intent must be nonempty")

    def to_dict(self) -> dict[str, str]:
        return {"Operation": self.operation, "Intent": self.intent}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IntentSummary":
        return cls(operation=data["Operation"], intent=data["Intent"])


@dataclass
class SuggestionSet:
    """Next-step suggestions of one kind (operation or search)."""

    kind: str
    suggestions: list[str]

    def __post_init__(self) -> None:
        if self.kind not in SUGGESTION_KINDS:
            raise ValueError(f"Unknown suggestion kind '{self.kind}'")
        if not self.suggestions:
            raise ValueError("SuggestionSet requires at least one suggestion")
        if any(not s.strip() for s in self.suggestions):
            raise ValueError("Suggestions must be nonempty")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SuggestionSet":
        return cls(kind=data["kind"], suggestions=list(data["suggestions"]))


@dataclass
class ScoreCard:
    """Five 0-2 rubric scores for a summary or a suggestion set."""

    rubric: str
    scores: dict[str, int]

    def __post_init__(self) -> None:
        if self.rubric not in RUBRIC_METRICS:
            raise ValueError(f"Unknown rubric '{self.rubric}', expected {tuple(RUBRIC_METRICS)}")
        expected = RUBRIC_METRICS[self.rubric]
        missing = [m for m in expected if m not in self.scores]
        if missing:
            raise ValueError(f"incomplete rubric: missing {missing}")
        for metric in expected:
            value = self.scores[metric]
            if isinstance(value, bool) or not isinstance(value, int) or value not in (0, 1, 2):
                raise ValueError(f"score out of range for '{metric}': {value!r}")
        self.scores = {m: self.scores[m] for m in expected}

    @property
    def total(self) -> int:
        return sum(self.scores.values())

    def to_dict(self) -> dict[str, Any]:
        return {"rubric": self.rubric, "scores": dict(self.scores)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScoreCard":
        return cls(rubric=data["rubric"], scores=dict(data["scores"]))


@dataclass
class EndpointConfig:
    """Connection settings for a chat-completions-style multimodal endpoint.

    Attributes:
        base_url: API base, e.g. ``https://host/v1`` (``/chat/completions`` is appended)
        model: Model name sent with each request
        api_key: Bearer token (environment only, never serialized)
        max_images: Max image attachments per request
        timeout_s: Per-request timeout
        max_retries: Retries on transport errors and 5xx responses
        max_in_flight: Max concurrent outstanding requests
        backoff_s: Base delay of the exponential backoff
        image_width: Width images are reduced to before upload (512; 384 for fast mode)
        embedding_model: Model name for the embeddings route (empty disables it)
    """

    base_url: str = ""
    model: str = ""
    api_key: str = ""
    max_images: int = 16
    timeout_s: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4
    backoff_s: float = 0.5
    image_width: int = 512
    embedding_model: str = ""

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError(f"max_in_flight must be >= 1, got {self.max_in_flight}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.max_images < 1:
            raise ValueError(f"max_images must be >= 1, got {self.max_images}")

    @property
    def configured(self) -> bool:
        return bool(self.base_url)

    def to_dict(self) -> dict[str, Any]:
        """Serialize without the secret."""
        data = asdict(self)
        data["api_key"] = "***" if self.api_key else ""
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EndpointConfig":
        return _from_known_keys(cls, data)


# --------------------------------------------------------------------------- evaluation


@dataclass
class RougeScores:
    """Precision, recall and F1 of one ROUGE variant."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, pred_total: int, ref_total: int) -> "RougeScores":
        precision = overlap / pred_total if pred_total else 0.0
        recall = overlap / ref_total if ref_total else 0.0
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))


@dataclass
class RewardWeights:
    """Weights of the summarization reward."""

    w_sim: float = 0.8
    w_fmt: float = 0.2
    sim_sbert_weight: float = 0.7
    sim_rouge_weight: float = 0.3

    def __post_init__(self) -> None:
        if self.w_sim < 0 or self.w_fmt < 0:
            raise ValueError(f"w_sim and w_fmt must be >= 0, got {self.w_sim}, {self.w_fmt}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RewardWeights":
        return _from_known_keys(cls, data)


@dataclass
class FormatRewardParams:
    """Scoring table of the format reward.

    Attributes:
        ideal_chars: Inclusive length band scoring ``ideal_score``
        near_chars: Wider band (outside ideal) scoring ``near_score``
        long_max: Lengths above ``near_chars`` up to this score ``long_score``;
            anything longer scores ``overlong_score``. Shorter than ``near_chars``
            scores ``short_score``.
        delimiters: Characters counted as intra-sentence delimiters
        delimiter_full_max: Up to this many delimiters score 1.0
        delimiter_half_max: Up to this many score 0.5; more score 0
        location_keywords_path: Lexicon file (None uses the packaged lexicon)
    """

    ideal_chars: tuple[int, int] = (20, 50)
    near_chars: tuple[int, int] = (10, 70)
    long_max: int = 100
    ideal_score: float = 1.0
    near_score: float = 0.5
    long_score: float = 0.0
    overlong_score: float = -0.5
    short_score: float = 0.0
    delimiters: str = "，,、;；:："
    delimiter_full_max: int = 2
    delimiter_half_max: int = 4
    location_keywords_path: str | None = None

    def __post_init__(self) -> None:
        self.ideal_chars = tuple(self.ideal_chars)
        self.near_chars = tuple(self.near_chars)
        lo, hi = self.ideal_chars
        near_lo, near_hi = self.near_chars
        if not near_lo <= lo <= hi <= near_hi <= self.long_max:
            raise ValueError(
                f"Length bands must nest: near {self.near_chars} ⊇ ideal {self.ideal_chars}, "
                f"long_max {self.long_max}"
            )
        if self.delimiter_full_max > self.delimiter_half_max:
            raise ValueError("delimiter_full_max must be <= delimiter_half_max")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["ideal_chars"] = list(self.ideal_chars)
        data["near_chars"] = list(self.near_chars)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FormatRewardParams":
        return _from_known_keys(cls, data)


@dataclass
class RewardBreakdown:
    """Reward components and the clipped total."""

    similarity: float
    format: float
    total: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass
class AgreementStats:
    """Exact-match accuracy and Cohen's kappa (None when chance agreement is 1)."""

    accuracy: float
    kappa: float | None
    n: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class RegressionFit:
    """Ordinary least squares fit of y on x with a two-sided slope p-value."""

    slope: float
    intercept: float
    p_value: float
    n: int
    r_squared: float = 0.0
    stderr: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"RegressionFit requires n >= 3, got {self.n}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# --------------------------------------------------------------------------- synthetic oracle


@dataclass(eq=False)
class SyntheticTruth:
    """Ground truth for a synthetic screen sequence.

    Attributes:
        page: Tall RGB page the viewport scrolls over
        viewport: (W, H) of each frame including bars
        scroll_offsets: Page offset of the content window, per frame
        h_top: Top bar height
        h_bot: Bottom bar height
        duplicate_map: Frame index → page offset of the anchor it duplicates
        blur_indices: Frame indices of injected blurred copies
        distinct_screens: Number of distinct screens in the sequence
        screen_ids: Distinct-screen id of every frame
    """

    page: np.ndarray
    viewport: tuple[int, int]
    scroll_offsets: list[int]
    h_top: int
    h_bot: int
    duplicate_map: dict[int, int] = field(default_factory=dict)
    blur_indices: list[int] = field(default_factory=list)
    distinct_screens: int = 0
    screen_ids: list[int] = field(default_factory=list)

    @property
    def content_height(self) -> int:
        return self.viewport[1] - self.h_top - self.h_bot

    def to_dict(self) -> dict[str, Any]:
        """JSON form (the page itself is written separately as page.png)."""
        return {
            "page_size": [int(self.page.shape[1]), int(self.page.shape[0])],
            "viewport": list(self.viewport),
            "scroll_offsets": list(self.scroll_offsets),
            "h_top": self.h_top,
            "h_bot": self.h_bot,
            "duplicate_map": {str(k): v for k, v in sorted(self.duplicate_map.items())},
            "blur_indices": sorted(self.blur_indices),
            "distinct_screens": self.distinct_screens,
            "screen_ids": list(self.screen_ids),
        }


# --------------------------------------------------------------------------- pipeline manifest


@dataclass
class PipelineManifest:
    """Root structure of manifest.json.

    Attributes:
        schema: Manifest schema version (currently 1)
        generator: Tool name and version (e.g. "fcmir/0.1.0")
        source_id: Identifier of the processed recording
        status: "complete" or "incomplete"
        stages: Stages requested, in execution order
        config: Effective configuration (secrets redacted)
        digests: sha256 digest per config section
        keyframes: KeyframeManifest dict (sample stage)
        stitched: StitchedImage records (stitch stage)
        compression: frame/pixel compression of the images sent downstream
        intent: IntentSummary dict (summarize stage)
        suggestions: kind → SuggestionSet dict (suggest stage)
        score_cards: ScoreCard dicts (judge stage)
        timings_ms: Wall time per stage in milliseconds
        error: Message of the error that aborted the run, if any
    """

    schema: int
    generator: str
    source_id: str
    status: str = "incomplete"
    stages: list[str] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    digests: dict[str, str] = field(default_factory=dict)
    keyframes: dict[str, Any] | None = None
    stitched: list[dict[str, Any]] | None = None
    compression: dict[str, float] | None = None
    intent: dict[str, str] | None = None
    suggestions: dict[str, dict[str, Any]] | None = None
    score_cards: list[dict[str, Any]] | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON serialization; absent stages are omitted."""
        data = asdict(self)
        return {k: v for k, v in data.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineManifest":
        return _from_known_keys(cls, data)
