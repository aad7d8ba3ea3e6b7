"""Exception types raised across the package."""


class InvalidInput(ValueError):
    """Input violates an operation's precondition."""


class ShapeError(ValueError):
    """Array shapes do not agree."""


class InvalidMarginal(InvalidInput):
    """A marginal vector has a non-positive entry or does not sum to one."""


class NumericalUnderflow(ArithmeticError):
    """Linear-domain kernel underflowed; retry in the log domain."""


class TooLarge(ValueError):
    """Problem too large for an exhaustive search."""


class TrainingDiverged(RuntimeError):
    def __init__(self, round_index, message="training loss became non-finite"):
        super().__init__(f"{message} (clustering round {round_index})")
        self.round_index = round_index
