from __future__ import annotations


class SMMLError(Exception):
    """Base class for errors raised by the entropic_smml package."""


class InvalidArgumentError(SMMLError, ValueError):
    pass


class InfeasibleCodepointError(SMMLError):
    def __init__(self, cell_index: int, cell: tuple[int, int], theta: float) -> None:
        self.cell_index = cell_index
        self.cell = cell
        self.theta = theta
        super().__init__(
            f"codepoint theta={theta!r} cannot encode cell {cell_index} "
            f"[{cell[0]}, {cell[1]})"
        )


class PartitionStructureError(SMMLError):
    """The pointwise assignment rule produced a non-interval cell."""
