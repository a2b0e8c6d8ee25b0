"""tcmeval: evaluation harness for TCM clinical-response models.

Library surface: structured-response parsing, herb-lexicon matching, rubric
scoring and verdict validation, judge orchestration, report analytics,
blinded human rating, and dataset-construction tools. The CLI entry point
is ``tcmeval`` (see cli.py); the HTTP service lives in service.py.
"""

__version__ = "0.1.0"
