"""Exception hierarchy shared across the codec."""


class MeshError(Exception):
    pass


class ObjParseError(MeshError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ObjIndexError(MeshError, IndexError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(MeshError, ValueError):
    """A mutation would break edge-manifoldness or orientation."""


class NonManifoldError(MeshError, ValueError):
    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or f"mesh is not manifold: {report}")


class NonManifoldAfterQuantization(NonManifoldError):
    pass


class DegenerateFaceError(MeshError, ValueError):
    pass


class InvalidCollapseError(MeshError, ValueError):
    pass


class InvalidRecordError(MeshError, ValueError):
    pass


class TraversalError(MeshError, RuntimeError):
    pass


class CollisionError(MeshError, ValueError):
    pass


class StreamFormatError(MeshError, ValueError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class RejectedTokenError(MeshError, ValueError):
    def __init__(self, token, constraint, position=None):
        self.token = token
        self.constraint = constraint
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"token {token} rejected{where}: {constraint}")
