"""Exception hierarchy shared across the toolkit.

Two trunks matter to the CLI: ValidationError (bad inputs/preconditions,
exit code 1) and everything else under ToolkitError (runtime failure,
exit code 2).
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all toolkit failures."""


class ValidationError(ToolkitError):
    """Precondition or input-format violation; user-fixable."""
