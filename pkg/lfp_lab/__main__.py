"""
LFP Lab

Linear frequency principle experiments: minimum FP-norm interpolation, its gradient flow
and the network, kernel and spline oracles it is checked against
"""
import os
import sys

# Thread caps must be in place before numpy loads its BLAS
_threads = os.environ.get('LFP_LAB_THREADS')
if _threads:
    for _var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS', 'NUMEXPR_NUM_THREADS'):
        os.environ.setdefault(_var, _threads)

import logging
import logging.config
import atexit
import argparse
from pathlib import Path
from lfp_lab.configuration.config import Config, resolve_config
from lfp_lab.experiment.experiment import run, full_width_overrides
from lfp_lab.experiment.validate import validate
from lfp_lab.lfp_exceptions import LfpException
from lfp_lab import version

_logpath = Path("lfp_lab.log")


def clean_up():
    """Normal and exception exit activities"""
    _logpath.unlink(missing_ok=True)


def get_logger():
    """Initiate the logger"""
    log_conf_path = Path(__file__).parent / 'log.conf'  # Logging configuration is in this file
    logging.config.fileConfig(fname=log_conf_path, disable_existing_loggers=False)
    return logging.getLogger(__name__)  # Create a logger for this module


def frequency_list(text: str):
    """Comma separated frequencies, 1,2,3"""
    try:
        return [float(v) if '.' in v else int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'{text!r} is not a comma separated list of numbers') from None


# Configure the expected parameters and actions for the argparse module
def parse(cl_input):
    parser = argparse.ArgumentParser(prog='lfp-lab', description='Linear frequency principle experiment harness')
    parser.add_argument('-CF', '--config-home', action='store_true',
                        help="Create a new config directory in user's lfp_lab home")
    parser.add_argument('-L', '--log', action='store_true',
                        help='Generate a diagnostic lfp_lab.log file')
    parser.add_argument('-V', '--version', action='store_true',
                        help='Print the current version of lfp-lab')
    commands = parser.add_subparsers(dest='command')

    run_cmd = commands.add_parser('run', help='Run one experiment and write its CSV and JSON artifacts')
    run_cmd.add_argument('-c', '--config', action='store', required=True,
                         help='Experiment config file (YAML or JSON) naming the experiment')
    run_cmd.add_argument('-P', '--paper-scale', action='store_true',
                         help='Restore the full network widths, which need much longer runs')
    run_cmd.add_argument('-o', '--out', action='store',
                         help='Output directory, overrides output_dir from the config')

    validate_cmd = commands.add_parser('validate', help='Report problems in an experiment config')
    validate_cmd.add_argument('-c', '--config', action='store', required=True,
                              help='Experiment config file (YAML or JSON)')

    sweep_cmd = commands.add_parser('sweep', help='Test loss and risk bound against target frequency')
    sweep_cmd.add_argument('-e', '--experiment', action='store', default='freq_sweep',
                           help='Experiment defaults to start from')
    sweep_cmd.add_argument('-v', '--v', action='store', type=frequency_list,
                           help='Comma separated target frequencies, e.g. 1,2,3,4,5')
    sweep_cmd.add_argument('-l', '--learner', action='store', choices=['nn', 'lfp'],
                           help='Fit the samples with the trained network or the minimum FP-norm interpolant')
    sweep_cmd.add_argument('-c', '--config', action='store', help='Experiment config file (YAML or JSON)')
    sweep_cmd.add_argument('-o', '--out', action='store', help='Output directory')
    return parser.parse_args(cl_input)


def copy_user_startup(logger):
    """Copy user startup config files to ~/.lfp_lab/config, keeping any that are already there"""
    import shutil
    user_config_home = Config.user_config_home
    user_config_home.mkdir(parents=True, exist_ok=True)
    user_startup = Path(__file__).parent / 'configuration' / 'user_startup'
    for f in user_startup.iterdir():
        if not (user_config_home / f.name).exists():
            shutil.copy(f, user_config_home)
            logger.info(f'Copied {f.name} to {user_config_home}')


def run_command(args, logger) -> int:
    """Dispatch a parsed subcommand, returning the exit status"""
    if args.command == 'validate':
        config = resolve_config(path=args.config)
        findings = validate(config)
        for finding in findings:
            print(f'{finding.level}: {finding.message}')
        errors = [f for f in findings if f.level == 'error']
        logger.info(f'{len(errors)} errors, {len(findings) - len(errors)} warnings')
        return 1 if errors else 0

    overrides = {}
    if args.out:
        overrides['output_dir'] = args.out
    if args.command == 'sweep':
        sweep = {}
        if args.v:
            sweep['v'] = args.v
        if args.learner:
            sweep['learner'] = args.learner
        overrides['sweep'] = sweep
        config = resolve_config(path=args.config, experiment=args.experiment, overrides=overrides)
    else:
        config = resolve_config(path=args.config)
        if args.paper_scale:
            config = resolve_config(path=args.config, overrides={
                **overrides, **full_width_overrides.get(config.experiment, {})})
        elif overrides:
            config = resolve_config(path=args.config, overrides=overrides)

    errors = [f for f in validate(config) if f.level == 'error']
    for finding in errors:
        logger.error(finding.message)
    if errors:
        return 1
    return run(config)


def main():
    # Start logging
    logger = get_logger()
    logger.info(f'lfp-lab version: {version}')

    # Parse the command line args
    args = parse(sys.argv[1:])

    if not args.log:
        # If no log file is requested, remove the log file before termination
        atexit.register(clean_up)

    if args.version:
        # Just print the version and quit
        print(f'lfp-lab version: {version}')
        sys.exit(0)

    if args.config_home:
        copy_user_startup(logger)

    status = 0
    if args.command:
        try:
            status = run_command(args, logger)
        except LfpException as e:
            logger.error(str(e))
            sys.exit(e)

    if status:
        logger.warning(f'Finished with exit status {status}')
        sys.exit(status)
    logger.info("No problemo")  # We didn't die on an exception, basically


if __name__ == "__main__":
    main()
