"""
Summary tables: one block per setting with Bias / SE / Coverage rows and one column
per estimator, as CSV (long form), markdown or an Excel workbook.
"""
import io
import logging
import os
from typing import Dict, List, Optional

import pandas as pd

from ..errors import ConfigError
from ..simulation import scenario_description
from .engine import AUX_REFERENCES, McSummary, StudyResult

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    'scenario', 'misspec', 'estimator', 'display', 'truth', 'mean_psi', 'bias', 'mc_se',
    'coverage', 'failures', 'n_success', 'n_ci',
] + [f'{kind}_{name}' for name in AUX_REFERENCES for kind in ('truth', 'bias', 'coverage')]

TABLE_FORMATS = ('csv', 'markdown')
MISSPEC_TITLES = {'ps': 'propensity score model', 'om': 'outcome model', 'both': 'both models'}


def summaries_to_frame(summaries: List[McSummary]) -> pd.DataFrame:
    """Long-form summary frame with a stable column order."""
    return pd.DataFrame([s.to_dict() for s in summaries], columns=SUMMARY_COLUMNS)


def _block_title(scenario: Optional[int], misspec: str) -> str:
    if scenario is None:
        title = "custom scenario"
    else:
        title = f"scenario {scenario}: {scenario_description(scenario).lower()}"
    if misspec != 'none':
        title += f" ({MISSPEC_TITLES[misspec]} misspecified)"
    return title


def summary_blocks(summaries: List[McSummary]) -> Dict[str, pd.DataFrame]:
    """Wide Bias/SE/Coverage table per setting, estimator columns in summary order."""
    blocks: Dict[str, pd.DataFrame] = {}
    order = []
    grouped: Dict[tuple, List[McSummary]] = {}
    for s in summaries:
        key = (s.scenario, s.misspec)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(s)
    for key in order:
        group = grouped[key]
        table = pd.DataFrame(
            {s.display: [s.bias, s.mc_se, s.coverage] for s in group},
            index=['Bias', 'SE', 'Coverage'],
        )
        table.index.name = 'Statistic'
        blocks[_block_title(*key)] = table
    return blocks


def summarize_to_table(summaries: List[McSummary], format: str = 'markdown') -> str:
    """Render the study summary.

    Args:
        summaries: Nonempty list of McSummary.
        format: 'markdown' (one block per setting) or 'csv' (long form).
    """
    if not summaries:
        raise ConfigError("nothing to summarize")
    if format not in TABLE_FORMATS:
        raise ConfigError(f"table format must be one of {TABLE_FORMATS}, got {format!r}")
    if format == 'csv':
        buffer = io.StringIO()
        summaries_to_frame(summaries).to_csv(buffer, index=False)
        return buffer.getvalue()
    parts = []
    for title, table in summary_blocks(summaries).items():
        parts.append(f"### {title}\n\n{table.to_markdown(floatfmt='.3f')}\n")
    return "\n".join(parts)


def write_excel(summaries: List[McSummary], path: str) -> str:
    """Workbook with the long-form summary and one sheet per setting."""
    with pd.ExcelWriter(path, engine='openpyxl') as writer:
        summaries_to_frame(summaries).to_excel(writer, sheet_name='summary', index=False)
        for k, (title, table) in enumerate(summary_blocks(summaries).items(), start=1):
            table.to_excel(writer, sheet_name=f'setting_{k}', startrow=2)
            writer.sheets[f'setting_{k}'].cell(row=1, column=1, value=title)
    return path


def write_study_outputs(result: StudyResult, out_dir: str, excel: bool = False) -> Dict[str, str]:
    """Write per-replicate estimates and summary tables; returns name -> path."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        'replicates': os.path.join(out_dir, 'replicates.csv'),
        'summary_csv': os.path.join(out_dir, 'summary.csv'),
        'summary_md': os.path.join(out_dir, 'summary.md'),
    }
    result.replicates.to_csv(paths['replicates'], index=False)
    with open(paths['summary_csv'], 'w', encoding='utf-8', newline='') as f:
        f.write(summarize_to_table(result.summaries, 'csv'))
    with open(paths['summary_md'], 'w', encoding='utf-8') as f:
        f.write(summarize_to_table(result.summaries, 'markdown'))
    if excel:
        paths['summary_xlsx'] = write_excel(result.summaries, os.path.join(out_dir, 'summary.xlsx'))
    for name, path in paths.items():
        logger.info(f"wrote {name}: {path}")
    return paths
