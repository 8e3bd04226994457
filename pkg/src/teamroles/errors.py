"""Shared exception hierarchy.

Every module-specific error subclasses PipelineError so the CLI can map
failures to exit codes without enumerating each one.
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Bad or inconsistent pipeline configuration."""


class UpstreamArtifactMissing(PipelineError):
    """A pipeline stage was invoked before its input artifact exists."""

    def __init__(self, stage: str, path: str):
        super().__init__(f"stage '{stage}' requires missing artifact: {path}")
        self.stage = stage
        self.path = path
