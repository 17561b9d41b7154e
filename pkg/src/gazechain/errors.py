"""Exception taxonomy shared by every module in the package."""


class GazeChainError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(GazeChainError, ValueError):
    """An argument is outside its documented range or shape."""


class ConfigurationError(GazeChainError, ValueError):
    """Invalid setup data, e.g. duplicate genesis addresses."""


class SerializationError(GazeChainError, ValueError):
    """A recording cannot be canonically encoded or decoded."""


class FundsError(GazeChainError):
    """Sender balance cannot cover value plus fee."""


class NonceError(GazeChainError):
    """Transaction nonce does not match the sender's next nonce."""


class IntegrityError(GazeChainError):
    """A stored hash does not recompute from its contents."""


class NotFoundError(GazeChainError):
    """No sealed transaction with the requested hash exists."""


class NotFinalError(GazeChainError):
    """The transaction is still pending and not yet sealed into a block."""


class StateError(GazeChainError):
    """Operation not defined for the contract's current state."""


class AuthorizationError(GazeChainError):
    """Caller is not the party allowed to perform this operation."""


class DeliveryError(GazeChainError):
    """The direct data channel is closed or empty."""
