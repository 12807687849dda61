"""polyseep script command line parsing"""
import configargparse

from polyseep import constants
from polyseep.config import COMMANDS, FORMATS, FORMULATIONS


def add_shared_args(parser):
    """Add's the arguments every polyseep script takes"""
    parser.add_argument('-c', '--config',
                        help="Configuration file path",
                        dest='config_file', is_config_file=True)
    parser.add_argument('--debug', help='Dump element matrices with the '
                        'outputs', action="store_true", default=False,
                        env_var="POLYSEEP_DEBUG")
    parser.add_argument('-v', '--verbose', help='Debug level logging',
                        action="store_true", default=False)
    parser.add_argument('--log_level', help='Log level to log', type=str,
                        default="", env_var="LOG_LEVEL")
    parser.add_argument('--log_output',
                        help="Log output, stdout, stderr, none or filename",
                        default="stderr", env_var="LOG_OUTPUT")
    parser.add_argument('--human_logs', help="Enable human readable logs",
                        action="store_true", default=False,
                        env_var="HUMAN_LOGS")
    parser.add_argument('--hostname', help="Hostname to tag metrics with",
                        type=str, default=None, env_var="LOCAL_HOSTNAME")
    parser.add_argument('--statsd_host', help="Statsd Host", type=str,
                        default="", env_var="STATSD_HOST")
    parser.add_argument('--statsd_port', help="Statsd Port", type=int,
                        default=8125, env_var="STATSD_PORT")
    parser.add_argument('--log_metrics', help="Report metrics in the log",
                        action="store_true", default=False,
                        env_var="LOG_METRICS")
    parser.add_argument('--zero_tol', help="Zero eigenvalue tolerance, "
                        "relative to the spectral radius", type=float,
                        default=constants.ZERO_MODE_TOL,
                        env_var="POLYSEEP_ZERO_TOL")
    parser.add_argument('--condition_limit',
                        help="Largest accepted eigenvector condition number",
                        type=float, default=constants.CONDITION_LIMIT,
                        env_var="POLYSEEP_CONDITION_LIMIT")


def add_model_args(parser):
    parser.add_argument('--model', help="Model file (.json or .inp)",
                        type=str, default=None)
    parser.add_argument('--overlay', help="JSON overlay for an input deck",
                        type=str, default=None)


def parse_polyseep(config_files, args):
    """Parses out args for the polyseep command"""
    parser = configargparse.ArgumentParser(
        description='Polygon scaled boundary seepage solver',
        default_config_files=config_files,
    )
    parser.add_argument('command', choices=COMMANDS,
                        help="mesh, solve, verify or export")
    add_model_args(parser)
    parser.add_argument('--out', help="Output directory", type=str,
                        default=None)
    parser.add_argument('--heads', help="Heads CSV to re-export", type=str,
                        default=None)
    parser.add_argument('--dt', help="Time step override", type=float,
                        default=None)
    parser.add_argument('--t-end', help="End time override", type=float,
                        dest="t_end", default=None)
    parser.add_argument('--monitor', help="Monitor point NAME=(x,y)",
                        action="append", default=None)
    parser.add_argument('--suite', help="Verification suite to run",
                        action="append", default=None)
    parser.add_argument('--format', help="Field output format",
                        choices=FORMATS, default="vtk",
                        env_var="POLYSEEP_FORMAT")
    parser.add_argument('--formulation', help="Element formulation",
                        choices=FORMULATIONS, default="sbfem",
                        env_var="POLYSEEP_FORMULATION")
    add_shared_args(parser)
    return parser.parse_args(args)
