"""fcmir - keyframe compression and MLLM intent summarization for UI screen recordings."""

try:
    from importlib.metadata import version

    __version__ = version("fcmir")
except Exception:
    __version__ = "unknown"
