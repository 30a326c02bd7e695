"""Shared exception types for the actfloor pipeline."""


class ActfloorError(Exception):
    """Base class for all pipeline errors."""


# --- raster model ---

class MissingChannel(ActfloorError):
    pass


class SizeMismatch(ActfloorError):
    pass


class IllegalLabel(ActfloorError):
    pass


class IoFailure(ActfloorError):
    pass


class NoEntrance(ActfloorError):
    pass


# --- furnishing ---

class RoomTooSmall(ActfloorError):
    pass


class NoRoomEntrance(ActfloorError):
    pass


class NoSharedWall(ActfloorError):
    pass


# --- activity simulation ---

class NoPath(ActfloorError):
    pass


class EmptyInput(ActfloorError):
    pass


class AllEdgesUnsolvable(ActfloorError):
    pass


# --- generation / losses ---

class ScoreOutOfRange(ActfloorError):
    pass


class NonFiniteInput(ActfloorError):
    pass


class EmptyIndex(ActfloorError):
    pass


# --- vectorization ---

class NoClosedRegion(ActfloorError):
    pass


class AmbiguousRoom(ActfloorError):
    pass


class NoLivingRoom(ActfloorError):
    pass


# --- metrics ---

class EmptyShape(ActfloorError):
    pass


class ZeroEntropy(ActfloorError):
    pass


class UnknownPlayer(ActfloorError):
    pass


class MalformedLine(ActfloorError):
    pass


class UnpairedItem(ActfloorError):
    pass
