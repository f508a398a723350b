"""Exception hierarchy shared across the toolkit.

Everything raised on purpose derives from :class:`EdmmError` so callers can
catch one base type. Validation findings are *not* exceptions (they are
returned as diagnostic records); the exceptions below signal misuse of an
API precondition or an unrecoverable condition inside an operation.
"""

from __future__ import annotations


class EdmmError(Exception):
    """Base class for all toolkit errors."""


class ModelError(EdmmError):
    """Errors raised by queries over a deployment model."""


class UnknownTypeError(ModelError):
    """A component or relation type name does not resolve."""


class CyclicTypeError(ModelError):
    """A type's extends chain loops back on itself."""


class UnresolvedReferenceError(ModelError):
    """A property reference points at a property that does not exist."""

    def __init__(self, message: str, *, reference: str | None = None):
        super().__init__(message)
        self.reference = reference


class ReferenceCycleError(ModelError):
    """Property references form a cycle."""

    def __init__(self, message: str, *, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class KindMismatchError(ModelError):
    """A property value's kind differs from its declaration."""


class HostingCycleError(ModelError):
    """Following host edges from a component never reaches a leaf."""

    def __init__(self, message: str, *, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class MultipleHostsError(ModelError):
    """A component declares more than one outgoing host edge."""


class DependencyCycleError(ModelError):
    """The dependency graph over relations is not acyclic."""

    def __init__(self, message: str, *, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class CatalogError(EdmmError):
    """A type catalog could not be loaded or combined."""


class NameCollisionError(CatalogError):
    """A user catalog redefines a name owned by another catalog."""


class UnknownParentError(CatalogError):
    """A catalog type extends a name that resolves nowhere."""


class ValidationFailed(EdmmError):
    """Raised by assert_valid when error-severity diagnostics exist."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        errors = sum(1 for d in self.diagnostics if d.severity == "error")
        super().__init__(f"model failed validation with {errors} error(s)")


class UnknownTechnologyError(EdmmError):
    """A technology name is not in the registry (or has no plugin)."""


class IncompatibleModelError(EdmmError):
    """A transformer refused a model its technology cannot express."""

    def __init__(self, technology: str, blockers):
        self.technology = technology
        self.blockers = list(blockers)
        super().__init__(
            f"model is incompatible with {technology}: "
            + "; ".join(f"{b.subject}: {b.message}" for b in self.blockers)
        )


class UnmappableElementError(EdmmError):
    """A plugin met a model element kind it declared unsupported."""


class MissingArtifactError(EdmmError):
    """An artifact file required for emission is absent."""

    def __init__(self, message: str, *, path: str | None = None):
        super().__init__(message)
        self.path = path
