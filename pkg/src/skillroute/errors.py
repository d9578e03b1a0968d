"""Exception hierarchy. Each class carries the CLI exit status it maps to."""


class SkillRouteError(Exception):
    exit_code = 1


class InputError(SkillRouteError, ValueError):
    """Malformed or missing input data."""

    exit_code = 2


class MissingArtifactError(SkillRouteError):
    """A later stage was asked to run before the stage producing its inputs."""

    exit_code = 3


class ConfigError(SkillRouteError, ValueError):
    exit_code = 4


class BackendExhaustedError(SkillRouteError):
    """Generation failed after all retries and no fallback was possible."""

    exit_code = 5


class AggregationTaskEmpty(InputError):
    def __init__(self, message: str = "aggregation task empty"):
        super().__init__(message)


class InsufficientExpertsError(ConfigError):
    def __init__(self, message: str = "insufficient surviving experts"):
        super().__init__(message)
