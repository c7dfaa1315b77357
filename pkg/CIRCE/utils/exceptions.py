# Exceptions raised by CIRCE. They derive from the builtin types the rest of the code
# would otherwise raise, so callers catching ValueError keep working.


class DomainError(ValueError):
    """An argument lies outside the physical domain of an operation."""


class ConfigurationError(ValueError):
    """A model, basis, sequence or run configuration is inconsistent."""


class SearchError(RuntimeError):
    """A parameter search found no solution in its window."""


class PipelineError(RuntimeError):
    """An analysis step failed. `step` names the failing stage."""

    def __init__(self, step, message):
        super().__init__("%s: %s" % (step, message))
        self.step = step


class ValidationError(ValueError):
    """A run configuration failed validation. Carries the diagnostics list."""

    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)
