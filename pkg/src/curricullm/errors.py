"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class CurricuLLMError(Exception):
    """Base class for all errors raised by this package."""


# --- environments -----------------------------------------------------------


class InvalidGoalSpec(CurricuLLMError):
    pass


class UnknownDimension(InvalidGoalSpec):
    def __init__(self, name: str):
        super().__init__(f"unknown goal dimension {name!r}")
        self.name = name


class RangeOutOfBounds(InvalidGoalSpec):
    def __init__(self, name: str, lo: float, hi: float, allowed: tuple[float, float]):
        super().__init__(
            f"goal range {name}: [{lo}, {hi}] outside allowed [{allowed[0]}, {allowed[1]}]"
        )
        self.name = name
        self.allowed = allowed


class InvertedRange(InvalidGoalSpec):
    def __init__(self, name: str, lo: float, hi: float):
        super().__init__(f"goal range {name}: lower bound {lo} exceeds upper bound {hi}")
        self.name = name


class UnknownEnvironment(CurricuLLMError):
    pass


# --- reward DSL ---------------------------------------------------------------


class TaskCodeError(CurricuLLMError):
    """Any static problem with LLM-emitted task code."""


class MissingFence(TaskCodeError):
    def __init__(self, fence: str):
        super().__init__(f"no ```{fence} fenced block found")
        self.fence = fence


class TaskCodeSyntaxError(TaskCodeError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class EmptyProgram(TaskCodeError):
    def __init__(self):
        super().__init__("reward block contains no program")


class TypeCheckError(TaskCodeError):
    def __init__(self, message: str, name: str):
        super().__init__(message)
        self.name = name


class UnknownVariable(TypeCheckError):
    def __init__(self, name: str):
        super().__init__(f"unknown variable {name!r}", name)


class BadIndex(TypeCheckError):
    def __init__(self, name: str, index: int, dims: int):
        super().__init__(f"index {index} out of range for {name!r} with {dims} components", name)
        self.index = index


class BadReduction(TypeCheckError):
    def __init__(self, name: str):
        super().__init__(f"reduction applied to non-vector {name!r}", name)


class ScalarIndexed(TypeCheckError):
    def __init__(self, name: str):
        super().__init__(f"scalar {name!r} cannot be indexed", name)


class VectorUsedAsScalar(TypeCheckError):
    def __init__(self, name: str):
        super().__init__(
            f"vector {name!r} must be indexed or reduced before use in arithmetic", name
        )


class ShadowedVariable(TypeCheckError):
    def __init__(self, name: str):
        super().__init__(f"binding {name!r} shadows an environment variable", name)


class TaskCodeRuntimeFault(CurricuLLMError):
    """Evaluation of a well-typed reward program failed numerically."""


class DivisionByNearZero(TaskCodeRuntimeFault):
    def __init__(self):
        super().__init__("division by a denominator with magnitude below 1e-9")


class NonFiniteResult(TaskCodeRuntimeFault):
    def __init__(self):
        super().__init__("reward evaluated to a non-finite value")


# --- LLM gateway ----------------------------------------------------------------


class BackendError(CurricuLLMError):
    pass


class TransportError(BackendError):
    pass


class NonSuccessStatus(BackendError):
    def __init__(self, code: int, body: str = ""):
        super().__init__(f"backend returned HTTP {code}: {body[:200]}")
        self.code = code


class FixtureExhausted(BackendError):
    pass


class FixtureKeyMissing(BackendError):
    pass


class MissingContextField(CurricuLLMError):
    def __init__(self, stage: str, field: str):
        super().__init__(f"{stage} prompt requires context field {field!r}")
        self.stage = stage
        self.field = field


class ResponseParseError(CurricuLLMError):
    """An LLM response did not follow the requested output format."""


class NoTasksFound(ResponseParseError):
    def __init__(self):
        super().__init__("no 'Task <n>' blocks found")


class MissingField(ResponseParseError):
    def __init__(self, index: int, field: str):
        super().__init__(f"task {index} is missing field {field!r}")
        self.index = index
        self.field = field


class CurriculumTooLong(ResponseParseError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"curriculum has {count} tasks, limit is {limit}")
        self.count = count


class NoDecisionFound(ResponseParseError):
    def __init__(self):
        super().__init__("no 'Decision: Agent <n>' line found")


class IndexOutOfRange(ResponseParseError):
    def __init__(self, index: int, count: int):
        super().__init__(f"agent {index} selected but only {count} agents exist")
        self.index = index
        self.count = count


# --- stats / pipeline ---------------------------------------------------------------


class EmptyBatch(CurricuLLMError):
    def __init__(self):
        super().__init__("cannot summarize an empty trajectory batch")


class ConfigError(CurricuLLMError):
    pass


class PipelineError(CurricuLLMError):
    pass


class CurriculumParseFailure(PipelineError):
    pass


class AllCandidatesFailed(PipelineError):
    def __init__(self, subtask: int):
        super().__init__(f"every task-code candidate failed for subtask {subtask}")
        self.subtask = subtask


class CorruptRunDirectory(PipelineError):
    pass


class ConfigMismatch(PipelineError):
    pass


class RunDirectoryBusy(PipelineError):
    pass
