"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value violates its documented invariants."""


class SchemaError(ValueError):
    """A serialized file does not match its documented schema."""

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        super().__init__(f"{message} (at {field_path})" if field_path else message)


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class InputError(ValueError):
    """A runtime input value (e.g. a feature vector) is unusable."""


class TrainingError(RuntimeError):
    """Model training could not complete."""


class TrainingDiverged(TrainingError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration: int, loss: float):
        self.iteration = iteration
        super().__init__(f"non-finite training loss ({loss!r}) at iteration {iteration}")
