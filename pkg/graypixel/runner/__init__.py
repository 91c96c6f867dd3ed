# graypixel/runner/__init__.py
"""
Batch Runner Module
"""

from .batch_runner import BatchRunner
from .commands import cmd_correct, cmd_estimate, cmd_evaluate, cmd_sweep, cmd_synth

__all__ = ["BatchRunner", "cmd_correct", "cmd_estimate", "cmd_evaluate", "cmd_sweep", "cmd_synth"]
