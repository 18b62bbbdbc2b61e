"""Exception types raised across the package."""


class MeshFormatError(ValueError):
    """Malformed mesh file. ``lineno`` is 1-based."""

    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)


class MeshValidationError(ValueError):
    """Triangulation violates a structural invariant."""


class LinearSolveError(RuntimeError):
    """A linear solve failed; ``residual`` holds the relative residual if known."""

    def __init__(self, msg, residual=None):
        self.residual = residual
        if residual is not None:
            msg = f"{msg} (relative residual {residual:.3e})"
        super().__init__(msg)


class StabilityError(ValueError):
    """Time step exceeds the admissible bound for an explicit-leaning scheme."""

    def __init__(self, tau, tau_max):
        self.tau = tau
        self.tau_max = tau_max
        super().__init__(f"tau={tau:.6g} exceeds tau_max={tau_max:.6g}; pass force=True to run anyway")


class BlowUpError(OverflowError):
    """Non-finite values appeared while time stepping."""

    def __init__(self, step, t=None):
        self.step = step
        self.t = t
        where = f"step {step}" if t is None else f"step {step} (t={t:.6g})"
        super().__init__(f"non-finite values at {where}")


class CapabilityError(RuntimeError):
    """Requested computation exceeds a configured size limit."""
