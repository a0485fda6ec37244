"""Exception types shared across modules."""


class UnsupportedGeometryError(Exception):
    """The classifier has no closed-form boundary geometry."""


class TrainingDivergedError(Exception):
    """Training loss left the finite range; carries the epoch."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss {loss})")


class BoundaryBracketError(Exception):
    """Binary search endpoints landed on the same label.

    Retryable under a randomized oracle: re-querying the endpoints may
    restore the bracket.
    """


class QueryBudgetExceededError(Exception):
    """The decision oracle refused a query past its budget."""
