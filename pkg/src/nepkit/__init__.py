"""nepkit: a self-hosted current awareness service engine.

Ingests working-paper metadata, composes date-named nep-all issues,
presorts them per report with a learned term-weight model, runs the
four-stage editorial workflow (source, selection, ordering, sent) with
versioned snapshots, dispatches sent issues to subscribers, and measures
the editing process (P@N, AP@N, RSL, Avg.RSL, session durations).
"""

from .config import ServiceConfig, load_config
from .corpus import CompositionPolicy, NepAllIssue, PaperRecord
from .engine import Engine
from .workflow import Report, StageSnapshot

__version__ = "0.1.0"

__all__ = [
    "CompositionPolicy",
    "Engine",
    "NepAllIssue",
    "PaperRecord",
    "Report",
    "ServiceConfig",
    "StageSnapshot",
    "load_config",
    "__version__",
]
