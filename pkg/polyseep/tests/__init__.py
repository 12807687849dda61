import logging
import os

here_dir = os.path.abspath(os.path.dirname(__file__))
root_dir = os.path.dirname(os.path.dirname(here_dir))
fixtures_dir = os.path.join(here_dir, "fixtures")

_levels = {}


def fixture_path(name):
    return os.path.join(fixtures_dir, name)


def setUp():
    # the markus logging backend writes through the stdlib loggers
    for name in ('markus', 'polyseep'):
        logger = logging.getLogger(name)
        _levels[name] = logger.level
        logger.setLevel(logging.CRITICAL)


def tearDown():
    for name, level in _levels.items():
        logging.getLogger(name).setLevel(level)
