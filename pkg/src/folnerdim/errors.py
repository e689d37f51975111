"""Exception types raised across the package."""


class FolnerDimError(Exception):
    """Base class for all package errors."""


class ContextMismatchError(FolnerDimError, ValueError):
    pass


class CapExceededError(FolnerDimError, RuntimeError):
    pass


class EmptySetError(FolnerDimError, ValueError):
    pass


class ParseError(FolnerDimError, ValueError):
    pass


class UndefinedPropagationError(FolnerDimError, ValueError):
    pass


class BadPrimeError(FolnerDimError, ValueError):
    pass


class MalformedCollectionError(FolnerDimError, ValueError):
    pass


class PreconditionError(FolnerDimError, ValueError):
    pass


class PostconditionError(FolnerDimError, RuntimeError):
    pass


class InternalInvariantError(FolnerDimError, RuntimeError):
    pass


class ExhaustionError(FolnerDimError, ValueError):
    """The supplied Følner exhaustion is too short for the requested schedule."""


class OracleInconclusiveError(FolnerDimError, RuntimeError):
    pass
