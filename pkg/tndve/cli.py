"""
Command-line entry point: estimate, sensitivity, simulate, reproduce, gen-data.

Every command resolves its settings through defaults < environment < --config file <
flags, writes a manifest.json next to its outputs, and maps library errors to exit codes.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional

from . import __version__
from .config import load_config_file, resolve_config
from .data import ColumnSchema, load_csv, restrict_to_tested, write_csv
from .errors import ConfigError, TndveError
from .estimators import AVAILABLE_ESTIMATORS, ModelSpec, TiltSpec, get_estimator, run_estimator
from .inference import bootstrap_ci, sandwich_ci
from .manifest import RunManifest
from .montecarlo import (
    HEADLINE_ROSTER, REPRODUCE_SETTINGS, ROSTER, StudyConfig, compare_to_reference, run_study,
    write_study_outputs,
)
from .sensitivity import curve_to_frame, sensitivity_curve
from .simulation import ScenarioParams, generate_cohort, scenario_params

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


# =====================================
# Argument parsing
# =====================================

def _csv_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(',') if item.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='JSON or YAML config file (a manifest.json also works)')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--workers', type=int)
    parser.add_argument('--out-dir', dest='out_dir')
    parser.add_argument('--db', dest='database_url', help='SQLAlchemy URL to record the run in')
    parser.add_argument('-v', '--verbose', action='store_true')
    parser.add_argument('-q', '--quiet', action='store_true')


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', help='input CSV with a header row')
    parser.add_argument('--design', choices=['tnd', 'cohort'])
    parser.add_argument('--col-v', dest='col_v')
    parser.add_argument('--col-y', dest='col_y', help='y for cohort files, y_star for TND files')
    parser.add_argument('--cols-x', dest='cols_x', type=_csv_list, help='comma-separated covariate columns')
    parser.add_argument('--drop-missing', dest='drop_missing', action='store_true', default=None)
    parser.add_argument('--om-form', dest='om_form', choices=['plugin', 'fitted'])
    parser.add_argument('--ratio-model', dest='ratio_model', choices=['logistic', 'multinomial'])


def _add_ci_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--ci', choices=['sandwich', 'bootstrap', 'none'])
    parser.add_argument('--ci-scale', dest='ci_scale', choices=['natural', 'log'])
    parser.add_argument('--level', type=float)
    parser.add_argument('--boot-b', dest='boot_b', type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tndve',
        description='Vaccine effectiveness from test-negative designs under odds-ratio equi-confounding',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('estimate', help='point estimate and interval from a CSV file')
    _add_common(p)
    _add_data_args(p)
    _add_ci_args(p)
    p.add_argument('--estimator', choices=sorted(AVAILABLE_ESTIMATORS))
    p.add_argument('--eta', type=float, help='known tilt for tilted-om')
    p.add_argument('--q-col', dest='q_col', help='covariate used as the tilt function q(X)')
    p.add_argument('--covariates', type=_csv_list, help='covariate subset for standardized')

    p = sub.add_parser('sensitivity', help='tilted outcome-modeling estimates over [-omega, omega]')
    _add_common(p)
    _add_data_args(p)
    _add_ci_args(p)
    p.add_argument('--omega', type=float)
    p.add_argument('--points', type=int)
    p.add_argument('--q-col', dest='q_col')

    p = sub.add_parser('simulate', help='Monte Carlo study over simulation scenarios')
    _add_common(p)
    _add_ci_args(p)
    p.add_argument('--scenario', dest='scenarios', type=int, nargs='+')
    p.add_argument('--scenario-file', dest='scenario_file', help='JSON/YAML with custom scenario parameters')
    p.add_argument('--misspec', nargs='+', choices=['none', 'ps', 'om', 'both'])
    p.add_argument('--reps', type=int)
    p.add_argument('--n', type=int, help='population size per replicate')
    p.add_argument('--estimators', nargs='+', choices=list(ROSTER))
    p.add_argument('--truth-method', dest='truth_method', choices=['auto', 'closed', 'montecarlo', 'quadrature'])
    p.add_argument('--excel', action='store_true', default=None)

    p = sub.add_parser('reproduce', help='rerun a published simulation table and compare')
    _add_common(p)
    _add_ci_args(p)
    p.add_argument('table', choices=sorted(REPRODUCE_SETTINGS))
    p.add_argument('--reps', type=int, help='override the published replicate count')
    p.add_argument('--n', type=int)
    p.add_argument('--excel', action='store_true', default=None)

    p = sub.add_parser('gen-data', help='write one simulated cohort (or its tested subset) to CSV')
    _add_common(p)
    p.add_argument('--scenario', dest='scenarios', type=int, nargs=1)
    p.add_argument('--scenario-file', dest='scenario_file')
    p.add_argument('--misspec', nargs=1, choices=['none', 'ps', 'om', 'both'])
    p.add_argument('--replicate', type=int)
    p.add_argument('--n', type=int)
    p.add_argument('--latent', action='store_true', default=None, help='include u, i, t, y0, y1')
    p.add_argument('--tested', action='store_true', default=None, help='write the TND view instead')
    p.add_argument('--out', help='CSV path (default: <out-dir>/cohort.csv)')
    return parser


# =====================================
# Helpers
# =====================================

def _file_values(path: Optional[str]) -> Dict[str, Any]:
    values = load_config_file(path)
    # A manifest from an earlier run carries the resolved config under 'config'
    if 'command' in values and isinstance(values.get('config'), dict):
        values = dict(values['config'])
        values.pop('command', None)
    return values


_NOT_CONFIG = ('config', 'verbose', 'quiet', 'scenario_file', 'table', 'out')


def _resolve(args: argparse.Namespace) -> Dict[str, Any]:
    cli_values = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    if cli_values.get('misspec') is not None and len(cli_values['misspec']) == 1:
        cli_values['misspec'] = cli_values['misspec'][0]
    cfg = resolve_config(cli_values, _file_values(args.config))
    if getattr(args, 'scenario_file', None):
        cfg['scenario'] = load_config_file(args.scenario_file)
    return cfg


def _model_spec(cfg: Dict[str, Any]) -> ModelSpec:
    return ModelSpec(om_form=cfg['om_form'], ratio_model=cfg['ratio_model'])


def _load(cfg: Dict[str, Any]):
    if not cfg.get('data'):
        raise ConfigError("--data is required")
    schema = ColumnSchema(v=cfg['col_v'], y=cfg['col_y'], x=tuple(cfg['cols_x'] or ()), design=cfg['design'])
    return load_csv(cfg['data'], schema, drop_missing=bool(cfg['drop_missing']))


def _custom_scenario(cfg: Dict[str, Any]) -> Optional[ScenarioParams]:
    if not cfg.get('scenario'):
        return None
    if not isinstance(cfg['scenario'], dict):
        raise ConfigError("'scenario' must be a mapping of scenario parameters")
    return ScenarioParams.from_dict(cfg['scenario'])


def _misspec_list(value) -> List[str]:
    return [value] if isinstance(value, str) else list(value)


def _manifest(command: str, cfg: Dict[str, Any]) -> RunManifest:
    return RunManifest(command=command, config=cfg, seed=cfg.get('seed'), version=__version__)


def _finish(manifest: RunManifest, out_dir: str, outputs: List[str]) -> None:
    for path in outputs:
        manifest.add_output(path)
    manifest.write(out_dir)


def _open_study_run(cfg: Dict[str, Any], command: str):
    """Open a database session and a 'running' StudyRun before the study starts."""
    from .db import SessionLocal, configure, create_study_run, init_db
    configure(cfg['database_url'])
    init_db()
    db = SessionLocal()
    try:
        run = create_study_run(db, command, cfg.get('seed'), cfg, version=__version__)
    except Exception:
        db.close()
        raise
    return db, run.id


def _store_study(db, run_id: int, result) -> None:
    from .db import add_replicate_estimates, add_study_summaries, finish_study_run
    add_replicate_estimates(db, run_id, result.replicates)
    add_study_summaries(db, run_id, result.summaries)
    finish_study_run(db, run_id, status='success')
    logger.info(f"recorded run {run_id}")


def _fail_study(db, run_id: int, error: Exception) -> None:
    from .db import finish_study_run
    db.rollback()
    message = error.code if isinstance(error, TndveError) else type(error).__name__
    try:
        finish_study_run(db, run_id, status='failed', error_message=f"{message}: {error}")
    except Exception as e:
        logger.error(f"could not mark run {run_id} as failed: {e}")


# =====================================
# Commands
# =====================================

def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    name = cfg['estimator']
    if args.design is None and not _file_values(args.config).get('design'):
        cfg['design'] = get_estimator(name).design
    data = _load(cfg)
    spec = _model_spec(cfg)
    tilt = TiltSpec(eta=float(cfg['eta']), q=cfg['q_col']) if name == 'tilted-om' else None
    covariates = cfg['covariates'] if name == 'standardized' else None

    result = run_estimator(name, data, spec, tilt=tilt, covariates=covariates)
    if cfg['ci'] == 'sandwich':
        result = result.with_ci(sandwich_ci(data, name, spec, level=cfg['level'], scale=cfg['ci_scale'],
                                            tilt=tilt, covariates=covariates))
    elif cfg['ci'] == 'bootstrap':
        result = result.with_ci(bootstrap_ci(data, name, spec, B=int(cfg['boot_b']), seed=int(cfg['seed']),
                                             level=cfg['level'], scale=cfg['ci_scale'],
                                             workers=cfg['workers'], tilt=tilt, covariates=covariates))

    report = result.to_dict()
    report['estimator'] = name
    report['diagnostics'] = result.nuisance_diagnostics
    print(json.dumps(report, indent=2, default=str))

    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, 'estimate.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(report, f, indent=2, default=str)
        manifest = _manifest('estimate', cfg)
        manifest.add_input(cfg['data'])
        _finish(manifest, args.out_dir, [path])
    return 0


def cmd_sensitivity(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    if cfg['design'] != 'tnd':
        raise ConfigError("sensitivity analysis needs TND data")
    data = _load(cfg)
    tilt = TiltSpec.symmetric(float(cfg['omega']), int(cfg['points']), q=cfg['q_col'])
    points = sensitivity_curve(data, _model_spec(cfg), tilt, ci=cfg['ci'], level=cfg['level'],
                               scale=cfg['ci_scale'], B=int(cfg['boot_b']), seed=int(cfg['seed']),
                               workers=cfg['workers'])
    frame = curve_to_frame(points)
    print(frame.to_csv(index=False), end='')

    out_dir = cfg['out_dir']
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, 'sensitivity.csv')
    frame.to_csv(path, index=False)
    manifest = _manifest('sensitivity', cfg)
    manifest.add_input(cfg['data'])
    _finish(manifest, out_dir, [path])
    return 0


def _study_config(cfg: Dict[str, Any], **overrides) -> StudyConfig:
    values = dict(
        scenarios=tuple(cfg['scenarios']),
        reps=int(cfg['reps']),
        estimators=tuple(cfg['estimators'] or HEADLINE_ROSTER),
        seed=int(cfg['seed']),
        misspec=tuple(_misspec_list(cfg['misspec'])),
        ci=cfg['ci'],
        level=float(cfg['level']),
        ci_scale=cfg['ci_scale'],
        boot_b=int(cfg['boot_b']),
        n=cfg['n'],
        workers=int(cfg['workers']),
        truth_method=cfg['truth_method'],
        n_oracle=int(cfg['n_oracle']),
        custom=_custom_scenario(cfg),
    )
    values.update(overrides)
    return StudyConfig(**values)


def _run_and_write(command: str, cfg: Dict[str, Any], config: StudyConfig):
    recording = _open_study_run(cfg, command) if cfg.get('database_url') else None
    try:
        result = run_study(config)
        out_dir = cfg['out_dir']
        paths = write_study_outputs(result, out_dir, excel=bool(cfg['excel']))
        if recording:
            _store_study(*recording, result)
    except Exception as e:
        if recording:
            _fail_study(*recording, e)
        raise
    finally:
        if recording:
            recording[0].close()
    return result, out_dir, list(paths.values())


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    result, out_dir, outputs = _run_and_write('simulate', cfg, _study_config(cfg))
    with open(outputs[2], encoding='utf-8') as f:
        print(f.read())
    _finish(_manifest('simulate', cfg), out_dir, outputs)
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    setting = REPRODUCE_SETTINGS[args.table]
    reps = args.reps if args.reps is not None else setting['reps']
    cfg.update(scenarios=list(setting['scenarios']), misspec=list(setting['misspec']),
               reps=reps, estimators=list(HEADLINE_ROSTER))
    config = _study_config(cfg, custom=None)
    result, out_dir, outputs = _run_and_write(f'reproduce {args.table}', cfg, config)

    comparison = compare_to_reference(result.summaries, args.table)
    path = os.path.join(out_dir, f'{args.table}_comparison.csv')
    comparison.to_csv(path, index=False)
    outputs.append(path)
    passed = int(comparison['passed'].sum()) if len(comparison) else 0
    print(f"{args.table}: {passed} of {len(comparison)} reference cells within tolerance")
    failed = comparison[~comparison['passed']] if len(comparison) else comparison
    if len(failed):
        print(failed.to_markdown(index=False, floatfmt='.3f'))
    _finish(_manifest(f'reproduce {args.table}', cfg), out_dir, outputs)
    return 0


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    misspec = _misspec_list(cfg['misspec'])[0]
    custom = _custom_scenario(cfg)
    if custom is not None:
        params = replace(custom, misspec=misspec)
    else:
        params = scenario_params(int(cfg['scenarios'][0]), misspec)
    gen = generate_cohort(params, seed=int(cfg['seed']), replicate=int(cfg['replicate']), n=cfg['n'])

    out_dir = cfg['out_dir']
    path = args.out or os.path.join(out_dir, 'tested.csv' if cfg['tested'] else 'cohort.csv')
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if cfg['tested']:
        write_csv(restrict_to_tested(gen.cohort), path)
    else:
        frame = gen.to_frame(latent=bool(cfg['latent']))
        frame.to_csv(path, index=False, encoding='utf-8')
        logger.info(f"Wrote {len(frame)} rows to {path}")
    print(path)
    _finish(_manifest('gen-data', cfg), os.path.dirname(os.path.abspath(path)), [path])
    return 0


COMMANDS = {
    'estimate': cmd_estimate,
    'sensitivity': cmd_sensitivity,
    'simulate': cmd_simulate,
    'reproduce': cmd_reproduce,
    'gen-data': cmd_gen_data,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger('tndve').setLevel(level)

    try:
        return COMMANDS[args.command](args)
    except TndveError as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"{args.command} failed with an unexpected error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
