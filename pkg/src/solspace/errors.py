"""Shared exception types."""


class SolspaceError(Exception):
    """Base class for engine errors."""


class ContractError(SolspaceError):
    """A caller violated an operation's precondition."""


class IngestError(SolspaceError):
    """A dataset on disk failed validation at load time."""


class MeshError(SolspaceError):
    """A mesh file could not be parsed or is geometrically unusable."""


class NotFoundError(SolspaceError):
    """A referenced id does not exist in the current state."""


class ConflictError(SolspaceError):
    """An event carried a stale sequence number."""


class BusyError(SolspaceError):
    """A long-running cycle is already in progress for this session."""
