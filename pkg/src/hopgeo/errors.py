"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes or lengths."""


class ArgumentError(ValueError):
    """A scalar argument is outside its documented range."""


class TrainingDivergenceError(RuntimeError):
    """Training produced a non-finite or increasing loss.

    Carries the offending neuron index and epoch so callers can report
    or count the failure without re-deriving it.
    """

    def __init__(self, neuron: int, epoch: int, detail: str = ""):
        self.neuron = neuron
        self.epoch = epoch
        msg = f"training diverged at neuron {neuron}, epoch {epoch}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DegenerateSpectrumError(ValueError):
    """All Fisher eigenvalues are zero; the metric carries no information."""


class NumericError(ValueError):
    """Non-finite values where finite ones are required."""


class LayoutError(ValueError):
    """Sweep cells do not form the rectangular grid a renderer needs."""
