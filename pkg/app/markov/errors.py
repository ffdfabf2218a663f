from typing import Optional, Tuple


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_MODEL = 5
EXIT_UNKNOWN_STATE = 6
EXIT_PARAMS = 7
EXIT_INTERNAL = 8


class MarkovError(Exception):
    exit_code = EXIT_INTERNAL
    status_code = 500

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message}


# === Model file and validation ===
class ModelFileError(MarkovError):
    exit_code = EXIT_IO
    status_code = 400


class ModelParseError(MarkovError):
    exit_code = EXIT_PARSE
    status_code = 422


class ModelValidationError(MarkovError):
    exit_code = EXIT_MODEL
    status_code = 422


class EmptyStateSpace(ModelValidationError):
    def __init__(self):
        super().__init__("state space is empty")


class DuplicateState(ModelValidationError):
    def __init__(self, label: str):
        super().__init__(f"state {label!r} declared more than once")
        self.label = label


class NegativeProbability(ModelValidationError):
    def __init__(self, source: str, target: str, value):
        super().__init__(f"negative probability {value} on edge {source!r} -> {target!r}")
        self.edge = (source, target)
        self.value = value


class RowSumNotOne(ModelValidationError):
    def __init__(self, state: str, actual):
        super().__init__(f"row of state {state!r} sums to {actual}, expected 1")
        self.state = state
        self.actual = actual


class MixedArithmetic(ModelValidationError):
    def __init__(self, mode: str, value):
        super().__init__(f"value {value!r} does not belong to {mode} arithmetic")
        self.mode = mode
        self.value = value


class NegativeCost(ModelValidationError):
    def __init__(self, source: str, target: str, value):
        super().__init__(f"negative cost {value} on edge {source!r} -> {target!r}")
        self.edge = (source, target)
        self.value = value


class UnknownState(MarkovError):
    exit_code = EXIT_UNKNOWN_STATE
    status_code = 404

    def __init__(self, label: str):
        super().__init__(f"unknown state {label!r}")
        self.label = label


# === Parameters and queries ===
class InvalidParams(MarkovError):
    exit_code = EXIT_PARAMS
    status_code = 400

    def __init__(self, message: str, flag: Optional[str] = None):
        super().__init__(f"{flag}: {message}" if flag else message)
        self.flag = flag


class InvalidConfig(InvalidParams):
    pass


class IndexOutOfRange(InvalidParams):
    def __init__(self, index: int, upper: int):
        super().__init__(f"probe index {index} outside 0..{upper}", flag="n")
        self.index = index


class NotHonestJondo(InvalidParams):
    def __init__(self, jondo: str):
        super().__init__(f"jondo {jondo!r} is not an honest jondo")
        self.jondo = jondo


class InvalidDistribution(MarkovError):
    exit_code = EXIT_PARAMS
    status_code = 400


class StartInTarget(MarkovError):
    exit_code = EXIT_PARAMS
    status_code = 400

    def __init__(self, start: str):
        super().__init__(f"start state {start!r} already lies in the target set")
        self.start = start


class ConditionHasZeroProbability(MarkovError):
    exit_code = EXIT_PARAMS
    status_code = 400

    def __init__(self):
        super().__init__("conditioning event has probability zero")


class SingularSystem(MarkovError):
    exit_code = EXIT_INTERNAL
    status_code = 500

    def __init__(self, size: int, pivot: Optional[Tuple[int, int]] = None):
        super().__init__(f"linear system of size {size} is singular")
        self.size = size
        self.pivot = pivot
