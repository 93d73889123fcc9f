from .ablate import ablate_command
from .eval import eval_command
from .pipeline import pipeline_command
from .synth import synth_command

__all__ = ["ablate_command", "eval_command", "pipeline_command", "synth_command"]
