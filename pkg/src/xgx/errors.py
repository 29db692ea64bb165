"""Exception hierarchy shared by every xgx module."""


class XGXError(Exception):
    """Base class for all xgx errors."""


class DataError(XGXError):
    """Problems with input shot data (CLI exit code 2)."""


class MissingColumn(DataError):
    def __init__(self, column):
        super().__init__(f"missing column: {column}")
        self.column = column


class BadValue(DataError):
    def __init__(self, row, column, token, reason=""):
        msg = f"row {row}, column {column}: bad value {token!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.row = row
        self.column = column
        self.token = token


class EmptyFile(DataError):
    pass


class EmptyInput(DataError):
    pass


class UnknownLevel(DataError):
    def __init__(self, feature, level):
        super().__init__(f"unknown level {level!r} for feature {feature!r} and no OTHER column")
        self.feature = feature
        self.level = level


class TrainingError(XGXError):
    """Model fitting failures (CLI exit code 3)."""


class SingleClassData(TrainingError):
    pass


class NonConvergence(TrainingError):
    def __init__(self, iterations, grad_norm):
        super().__init__(
            f"no convergence after {iterations} iterations (gradient norm {grad_norm:.3e})"
        )
        self.iterations = iterations
        self.grad_norm = grad_norm


class DimensionMismatch(XGXError, ValueError):
    pass


class TooManyFeatures(XGXError, ValueError):
    pass


class MixedBaselines(XGXError, ValueError):
    pass


class EmptyGroup(XGXError):
    """A selection resolved to zero rows (CLI exit code 4)."""


class UnknownFeature(XGXError, KeyError):
    def __str__(self):
        return f"unknown feature: {self.args[0]}"
