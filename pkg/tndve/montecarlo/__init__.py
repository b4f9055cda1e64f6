"""
Monte Carlo replication engine, summary tables and published reference values.
"""

from .engine import (
    RosterEntry, ROSTER, HEADLINE_ROSTER, AUX_REFERENCES,
    StudyConfig, McSummary, StudyResult, run_study,
)
from .report import (
    SUMMARY_COLUMNS, summaries_to_frame, summary_blocks, summarize_to_table, write_excel,
    write_study_outputs,
)
from .reference import PUBLISHED, REPRODUCE_SETTINGS, ReferenceCell, reference_cells, compare_to_reference

__all__ = [
    'RosterEntry', 'ROSTER', 'HEADLINE_ROSTER', 'AUX_REFERENCES',
    'StudyConfig', 'McSummary', 'StudyResult', 'run_study',
    'SUMMARY_COLUMNS', 'summaries_to_frame', 'summary_blocks', 'summarize_to_table', 'write_excel',
    'write_study_outputs',
    'PUBLISHED', 'REPRODUCE_SETTINGS', 'ReferenceCell', 'reference_cells', 'compare_to_reference',
]
