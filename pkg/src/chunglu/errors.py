"""Exception hierarchy; ``exit_code`` is what the CLI returns for each."""


class ChungLuError(Exception):
    exit_code = 2


class InvalidInput(ChungLuError, ValueError):
    exit_code = 2


class InvalidParameter(ChungLuError, ValueError):
    exit_code = 2


class NonGraphicalError(ChungLuError, ValueError):
    """Some pair has Chung-Lu probability above 1."""

    exit_code = 3

    def __init__(self, pair, probability):
        i, j = pair
        self.pair = pair
        self.probability = probability
        super().__init__(
            f"degree sequence is not graphical: pair ({i + 1}, {j + 1}) has "
            f"probability {probability:.6g} > 1"
        )


class ConvergenceError(ChungLuError, ArithmeticError):
    """An iterative solver stopped before reaching its tolerance.

    ``best`` holds the last iterate (whatever the raising solver produces).
    """

    exit_code = 5

    def __init__(self, message, best=None, iterations=None, residual=None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations
        self.residual = residual


class NotDetachedError(ChungLuError, ArithmeticError):
    """The top eigenvalue is not separated from the spectrum of H."""

    exit_code = 4


class ReplicaFailure(ChungLuError):
    exit_code = 5

    def __init__(self, replica, cause):
        self.replica = replica
        self.cause = cause
        self.partial = []
        super().__init__(f"replica {replica} failed: {cause}")
