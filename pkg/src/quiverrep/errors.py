"""Exception hierarchy shared by every module.

Each class carries a stable ``code`` used by the CLI's machine-readable
error output.
"""
from __future__ import annotations


class QuiverRepError(Exception):
    """Base class for domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class NumericalFailure(QuiverRepError):
    pass


class ClusterGapTooSmall(QuiverRepError):
    pass


class DisconnectedGraph(QuiverRepError):
    pass


class NotASink(QuiverRepError):
    pass


class NotASource(QuiverRepError):
    pass


class QuiverMismatch(QuiverRepError):
    pass


class BadEmbedding(QuiverRepError):
    pass


class ZeroRepresentation(QuiverRepError):
    pass


class DegenerateIdempotent(QuiverRepError):
    pass


class RecursionLimit(QuiverRepError):
    pass


class BadParameter(QuiverRepError):
    pass


class NotAPathQuiver(QuiverRepError):
    pass


class CertInvalid(QuiverRepError):
    pass


class BadOrientation(QuiverRepError):
    pass


class GraphMismatch(QuiverRepError):
    pass


class GraphIsDynkin(QuiverRepError):
    pass


class NotEquiorientedPath(QuiverRepError):
    pass
