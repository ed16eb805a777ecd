from __future__ import annotations

from typing import Optional


# -----------------------------
# Errors
# -----------------------------
class KpAlignError(Exception):
    exit_code = 1


class ConfigError(KpAlignError):
    exit_code = 2


class DataError(KpAlignError):
    exit_code = 3


class EmptyInputError(DataError):
    def __init__(self, message: str = "empty input") -> None:
        super().__init__(message)


class SequenceError(DataError):
    pass


class ObjectiveMismatchError(DataError):
    pass


class VersionMismatchError(DataError):
    def __init__(self, store_version: str, model_version: str) -> None:
        super().__init__(
            f"version mismatch, full rebuild required "
            f"(store={store_version}, model={model_version})"
        )
        self.store_version = store_version
        self.model_version = model_version


class TrainingDivergedError(KpAlignError):
    def __init__(self, epoch: int, loss: Optional[float] = None) -> None:
        super().__init__(f"divergence at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class GateFailure(KpAlignError):
    exit_code = 4


EXIT_OK = 0
EXIT_ERROR = KpAlignError.exit_code
EXIT_CONFIG = ConfigError.exit_code
EXIT_DATA = DataError.exit_code
EXIT_GATE = GateFailure.exit_code
