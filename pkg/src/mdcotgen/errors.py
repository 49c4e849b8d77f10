"""Exception hierarchy shared by every stage of the generator."""

from __future__ import annotations


class GeneratorError(Exception):
    """Base class for all errors raised by mdcotgen."""


# -- validation ---------------------------------------------------------------


class ValidationError(GeneratorError, ValueError):
    pass


class EmptyTaskDefinition(ValidationError):
    pass


class EmptyKeyFeatures(ValidationError):
    pass


class DuplicateId(ValidationError):
    def __init__(self, task_id: str):
        super().__init__(f"duplicate task id {task_id!r}")
        self.task_id = task_id


# -- provider -----------------------------------------------------------------


class ProviderError(GeneratorError):
    pass


class InvalidRequest(ProviderError, ValueError):
    pass


class TransportFailure(ProviderError):
    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class AuthMissing(ProviderError):
    def __init__(self, env_var: str):
        super().__init__(f"environment variable {env_var} is not set")
        self.env_var = env_var


class BadStatus(ProviderError):
    def __init__(self, code: int, body: str = ""):
        super().__init__(f"endpoint returned HTTP {code}: {body[:200]}")
        self.code = code


class EmptyCompletion(ProviderError):
    pass


class ScriptParse(ProviderError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"mock script line {line}: {reason}")
        self.line = line


class ScriptExhausted(ProviderError):
    pass


# -- prompt rendering / parsing -----------------------------------------------


class UnboundPlaceholder(GeneratorError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"placeholder {{{{{self.name}}}}} has no binding"


class OutputParseError(GeneratorError, ValueError):
    """LLM output could not be turned into a domain value."""


class NoJsonFound(OutputParseError):
    pass


class SchemaMismatch(OutputParseError):
    def __init__(self, index: int | None, reason: str = ""):
        where = "document" if index is None else f"element {index}"
        super().__init__(f"schema mismatch at {where}: {reason}".rstrip(": "))
        self.index = index


class EmptyList(OutputParseError):
    pass


class ModuleNotInOutput(OutputParseError):
    def __init__(self, parent: str):
        super().__init__(f"module {parent!r} not present in output")
        self.parent = parent


class EmptySource(OutputParseError):
    pass


class NoScoreFound(OutputParseError):
    pass


class OutOfRange(OutputParseError):
    def __init__(self, value: float):
        super().__init__(f"score {value} outside the allowed range")
        self.value = value


# -- rectification / integration ----------------------------------------------


class InvalidAttenuation(GeneratorError, ValueError):
    pass


class ExhaustedRectification(GeneratorError):
    def __init__(self, unit: str, attempts: int):
        super().__init__(f"no acceptable output for {unit!r} after {attempts} attempt(s)")
        self.unit = unit
        self.attempts = attempts


class MissingRevision(GeneratorError):
    def __init__(self, file: str):
        super().__init__(f"resolution response has no revised source for {file!r}")
        self.file = file


# -- filesystem / evaluation --------------------------------------------------


class NonEmptyTarget(GeneratorError):
    def __init__(self, path):
        super().__init__(f"output directory {path} is not empty (use force to overwrite)")
        self.path = path


class ProjectIOError(GeneratorError, OSError):
    def __init__(self, path, cause: BaseException | None = None):
        super().__init__(f"I/O failure at {path}: {cause}")
        self.path = path


class EmptySampleSet(GeneratorError, ValueError):
    pass


class AllFilesUnscored(GeneratorError):
    pass


class DatasetError(GeneratorError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"dataset line {line}: {reason}")
        self.line = line
