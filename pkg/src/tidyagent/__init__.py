"""tidyagent: one-shot interactive task learning for a household tidying agent.

An agent learns tidy-up tasks from a human instructor in a single pass by
combining three knowledge sources: natural-language instruction, bounded
forward search over a symbolic world model, and candidate goals/actions
retrieved from a large language model and confirmed with the instructor.
What it learns (conditional goals plus generalized action-selection rules)
transfers immediately to other objects and later sessions.
"""

__version__ = "0.1.0"
