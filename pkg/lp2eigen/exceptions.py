class GridError(Exception):
    pass


class FieldError(Exception):
    pass


class CurvatureAlgebraError(Exception):
    pass


class AdmissibilityError(Exception):
    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class ShapeError(Exception):
    pass


class ProblemSpecError(Exception):
    pass


class SolverError(Exception):
    def __init__(self, message, best=None, report=None):
        super().__init__(message)
        self.best = best
        self.report = report


class ContinuationError(Exception):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class FlowError(Exception):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConfigInputError(Exception):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PresetError(ConfigInputError):
    pass
