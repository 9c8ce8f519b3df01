class Codes:
    SUCCESS = "S000"

    INVALID_ARGS = "E100"
    SCHEMA = "E110"
    DIMENSION_MISMATCH = "E120"
    UNKNOWN_CELL = "E130"

    PRECONDITION = "E200"
    NOT_CELL_ALIGNED = "E210"
    HULL_MEMBERSHIP = "E220"
    INVALID_WEIGHTS = "E230"
    ATOMIC_UNSUPPORTED = "E240"
    NULL_SET = "E250"
    NO_MATCHING_ACTION = "E260"
    BUDGET_EXCEEDED = "E270"

    VERIFY_FAIL = "E400"
    DIGEST_MISMATCH = "E410"

    FILE_IO = "E500"
    INTERNAL = "E900"


def format_message(code, message, details=None):
    msg = f"[{code}] {message}"
    if details:
        msg += f" | {details}"
    return msg


class BangBangError(Exception):
    """所有库内错误的基类，携带错误码与命令行退出码"""

    code = Codes.INTERNAL
    exit_status = 1

    def __init__(self, message, details=None, code=None):
        if code is not None:
            self.code = code
        self.message = message
        self.details = details
        super().__init__(format_message(self.code, message, details))


class InputError(BangBangError, ValueError):
    code = Codes.INVALID_ARGS
    exit_status = 2


class SchemaError(InputError):
    code = Codes.SCHEMA


class DimensionError(InputError):
    code = Codes.DIMENSION_MISMATCH


class UnknownCellError(InputError):
    code = Codes.UNKNOWN_CELL


class PreconditionError(BangBangError):
    code = Codes.PRECONDITION
    exit_status = 3


class CellAlignmentError(PreconditionError):
    code = Codes.NOT_CELL_ALIGNED


class HullMembershipError(PreconditionError):
    code = Codes.HULL_MEMBERSHIP

    def __init__(self, message, cell=None, point=None, direction=None):
        self.cell = cell
        self.point = point
        self.direction = direction
        details = []
        if cell is not None:
            details.append(f"cell={cell}")
        if point is not None:
            details.append(f"point={[str(x) for x in point]}")
        if direction is not None:
            details.append(f"direction={[float(x) for x in direction]}")
        super().__init__(message, " ".join(details) or None)


class WeightError(PreconditionError):
    code = Codes.INVALID_WEIGHTS


class AtomicModeError(PreconditionError):
    code = Codes.ATOMIC_UNSUPPORTED


class NullSetError(PreconditionError):
    code = Codes.NULL_SET


class ActionMatchError(PreconditionError):
    code = Codes.NO_MATCHING_ACTION


class BudgetExceededError(PreconditionError):
    code = Codes.BUDGET_EXCEEDED


class VerificationError(BangBangError):
    code = Codes.VERIFY_FAIL
    exit_status = 4
