"""Extractive question answering: span model, transfer learning, evaluation."""

try:
    from ._bioqa import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:
    from _bioqa import *  # noqa: F401,F403  (in-tree build: module on sys.path)

__version__ = "0.1.0"
